#pragma once

#include <rescut/solvers.hpp>
#include <rescut/types.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rescut {

struct GeneratorSpec {
  std::string kind;  // "conv-diff" or "poisson-neumann"
  int n = 20;
  Real stretch = 1.05;
  Real convection = 1000.0;
};

// Everything needed to reproduce a benchmark run (timing columns aside).
struct RunManifest {
  std::string matrix_path;  // empty when a generator is used
  std::optional<GeneratorSpec> generator;
  // "" = generator-provided right-hand side (A*ones for files),
  // "unit" = force A*ones, anything else = path to a vector file.
  std::string rhs;
  std::vector<SolverConfig> solvers;
  std::vector<std::string> solver_labels;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

struct SolverRunSummary {
  std::string label;
  SolveStatus status = SolveStatus::Breakdown;
  int iterations = 0;  // trace rows past row 0
  Real final_relative_residual = 0;
  std::int64_t matvec_count = 0;
  std::int64_t dot_count = 0;
  std::int64_t axpy_count = 0;
  int peak_vectors = 0;
  double seconds = 0;
  std::string trace_path;
  std::vector<std::string> warnings;
};

struct BenchmarkResult {
  std::vector<SolverRunSummary> runs;
  bool all_converged = false;
  std::string manifest_path;
};

// Maps command-line flags to a manifest. Throws on unknown flags,
// conflicting matrix sources, or out-of-range solver parameters. Every
// flag can also be supplied through a RESCUT_* environment variable.
RunManifest parse_cli(const std::vector<std::string>& args);

// Loads or generates the system, runs every configured solver on it,
// writes one CSV trace per solver plus manifest.json into out_dir, and
// returns the per-run summaries.
BenchmarkResult run_benchmark(const RunManifest& manifest);

void write_trace_csv(const ConvergenceTrace& trace, const std::string& path);
ConvergenceTrace read_trace_csv(const std::string& path);

// Full CLI entry point: parse, run, print a summary table. Returns 0 iff
// every requested solver converged.
int bench_main(int argc, char** argv);

}  // namespace rescut
