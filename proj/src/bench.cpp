#include <rescut/bench.hpp>

#include <rescut/generators.hpp>
#include <rescut/matrix_market.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rescut {

namespace {

struct CliValues {
  std::string matrix;
  std::string gen;
  int n = 20;
  Real stretch = 1.05;
  Real convection = 1000.0;
  std::vector<std::string> solvers;
  int L = 5;
  std::string psi = "damped";
  Real omega = 1.9;
  int inner_iters = 50;
  int restart = 40;
  Real tol = 1e-12;
  int max_iter = 50000;
  std::string rhs;
  std::string out = ".";
  std::uint64_t seed = 0;
};

void build_app(CLI::App& app, CliValues& v) {
  auto* om = app.add_option("--matrix", v.matrix, "Matrix Market file to load")
                 ->envname("RESCUT_MATRIX");
  auto* og = app.add_option("--gen", v.gen, "built-in system: conv-diff or poisson-neumann")
                 ->envname("RESCUT_GEN")
                 ->check(CLI::IsMember({"conv-diff", "poisson-neumann"}));
  om->excludes(og);
  og->excludes(om);
  app.add_option("--n", v.n, "grid points per axis (generators)")->envname("RESCUT_N");
  app.add_option("--stretch", v.stretch, "geometric grid ratio (poisson-neumann)")
      ->envname("RESCUT_STRETCH");
  app.add_option("--c", v.convection, "convection coefficient (conv-diff)")->envname("RESCUT_C");
  app.add_option("--solver", v.solvers,
                 "solver to run: grc, rc, cr, gmres or bicgstab (repeatable)")
      ->envname("RESCUT_SOLVER");
  app.add_option("--L", v.L, "window size for grc/rc")->envname("RESCUT_L");
  app.add_option("--psi", v.psi, "grc search-vector mode: damped or residual")
      ->envname("RESCUT_PSI");
  app.add_option("--omega", v.omega, "relaxation coefficient for rc")->envname("RESCUT_OMEGA");
  app.add_option("--inner-iters", v.inner_iters, "relaxation sweeps per rc outer step")
      ->envname("RESCUT_INNER_ITERS");
  app.add_option("--restart", v.restart, "gmres restart length")->envname("RESCUT_RESTART");
  app.add_option("--tol", v.tol, "relative residual target")->envname("RESCUT_TOL");
  app.add_option("--max-iter", v.max_iter, "outer iteration cap")->envname("RESCUT_MAX_ITER");
  app.add_option("--rhs", v.rhs, "right-hand side: 'unit' for A*ones, or a vector file")
      ->envname("RESCUT_RHS");
  app.add_option("--out", v.out, "output directory for traces and manifest")
      ->envname("RESCUT_OUT");
  app.add_option("--seed", v.seed, "seed recorded in the manifest")->envname("RESCUT_SEED");
}

RunManifest manifest_from(const CliValues& v) {
  if (v.matrix.empty() && v.gen.empty())
    throw std::invalid_argument("no matrix source: pass --matrix <file> or --gen <name>");
  if (v.solvers.empty())
    throw std::invalid_argument("no solver requested: pass --solver at least once");
  RunManifest m;
  m.matrix_path = v.matrix;
  if (!v.gen.empty()) m.generator = GeneratorSpec{v.gen, v.n, v.stretch, v.convection};
  m.rhs = v.rhs;
  m.seed = v.seed;
  m.out_dir = v.out;
  std::map<std::string, int> total, seen;
  for (const std::string& s : v.solvers) ++total[s];
  for (const std::string& name : v.solvers) {
    SolverConfig cfg;
    cfg.method = parse_method(name);
    cfg.L = v.L;
    cfg.psi_mode = parse_psi_mode(v.psi);
    cfg.omega = v.omega;
    cfg.inner_iters = v.inner_iters;
    cfg.restart = v.restart;
    cfg.tol = v.tol;
    cfg.max_iter = v.max_iter;
    validate(cfg);
    m.solvers.push_back(std::move(cfg));
    std::string label = name;
    if (total[name] > 1) label += "-" + std::to_string(++seen[name]);
    m.solver_labels.push_back(label);
  }
  return m;
}

Vector read_vector_file(const std::string& path, Index expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rhs file '" + path + "'");
  std::vector<Real> vals;
  Real v = 0;
  while (in >> v) vals.push_back(v);
  if (!in.eof())
    throw std::runtime_error("rhs file '" + path + "' contains non-numeric content");
  if (static_cast<Index>(vals.size()) != expected)
    throw std::runtime_error("rhs file '" + path + "' holds " + std::to_string(vals.size()) +
                             " values but the matrix needs " + std::to_string(expected));
  return Eigen::Map<const Vector>(vals.data(), expected);
}

std::pair<CsrMatrix, Vector> resolve_system(const RunManifest& m) {
  CsrMatrix A;
  Vector b;
  if (!m.matrix_path.empty()) {
    A = mm_read_file(m.matrix_path);
    if (A.rows() != A.cols())
      throw std::runtime_error("matrix '" + m.matrix_path + "' is not square");
    b = rhs_unit_solution(A);
  } else if (m.generator.has_value()) {
    const GeneratorSpec& g = *m.generator;
    const GridSpec spec{g.n, g.stretch, g.convection};
    if (g.kind == "conv-diff") {
      std::tie(A, b) = gen_convection_diffusion(spec);
    } else if (g.kind == "poisson-neumann") {
      std::tie(A, b) = gen_poisson_neumann(spec);
    } else {
      throw std::runtime_error("unknown generator '" + g.kind +
                               "' (expected conv-diff or poisson-neumann)");
    }
  } else {
    throw std::runtime_error("no matrix source configured");
  }
  if (m.rhs == "unit") {
    b = rhs_unit_solution(A);
  } else if (!m.rhs.empty()) {
    b = read_vector_file(m.rhs, static_cast<Index>(A.rows()));
  }
  return {std::move(A), std::move(b)};
}

nlohmann::json config_json(const SolverConfig& cfg, const std::string& label) {
  return nlohmann::json{{"label", label},
                        {"method", std::string(to_string(cfg.method))},
                        {"L", cfg.L},
                        {"psi", std::string(to_string(cfg.psi_mode))},
                        {"omega", cfg.omega},
                        {"inner_iters", cfg.inner_iters},
                        {"restart", cfg.restart},
                        {"tol", cfg.tol},
                        {"max_iter", cfg.max_iter}};
}

}  // namespace

RunManifest parse_cli(const std::vector<std::string>& args) {
  CLI::App app{"iterative sparse solver benchmark"};
  CliValues v;
  build_app(app, v);
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("rescut-bench");
  for (const std::string& a : args) argv.push_back(a.c_str());
  app.parse(static_cast<int>(argv.size()), argv.data());
  return manifest_from(v);
}

void write_trace_csv(const ConvergenceTrace& trace, const std::string& path) {
  if (trace.rows.empty()) throw std::invalid_argument("write_trace_csv: empty trace");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "iter,resid,rel_resid,matvec,seconds\n";
  char buf[160];
  for (const TraceRow& row : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%lld,%.17g\n", row.iteration,
                  row.residual_norm, row.relative_residual,
                  static_cast<long long>(row.cumulative_matvec), row.elapsed_seconds);
    out << buf;
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

ConvergenceTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "iter,resid,rel_resid,matvec,seconds")
    throw std::runtime_error("trace '" + path + "' has an unexpected header: " + line);
  ConvergenceTrace tr;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    TraceRow row{};
    long long mv = 0;
    if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lld,%lg", &row.iteration, &row.residual_norm,
                    &row.relative_residual, &mv, &row.elapsed_seconds) != 5)
      throw std::runtime_error("trace '" + path + "' line " + std::to_string(lineno) +
                               " is malformed");
    row.cumulative_matvec = mv;
    tr.rows.push_back(row);
  }
  return tr;
}

BenchmarkResult run_benchmark(const RunManifest& manifest) {
  if (manifest.solvers.empty())
    throw std::invalid_argument("run_benchmark: no solvers configured");
  if (manifest.solver_labels.size() != manifest.solvers.size())
    throw std::invalid_argument("run_benchmark: one label per solver config required");
  auto [A, b] = resolve_system(manifest);
  std::filesystem::create_directories(manifest.out_dir);

  BenchmarkResult out;
  out.all_converged = true;
  nlohmann::json jresults = nlohmann::json::array();
  nlohmann::json jconfigs = nlohmann::json::array();
  for (std::size_t i = 0; i < manifest.solvers.size(); ++i) {
    const SolverConfig& cfg = manifest.solvers[i];
    const std::string& label = manifest.solver_labels[i];
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult r = solve(A, b, cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    SolverRunSummary s;
    s.label = label;
    s.status = r.status;
    s.iterations = static_cast<int>(r.trace.rows.size()) - 1;
    s.final_relative_residual = r.final_relative_residual;
    s.matvec_count = r.counters.matvec_count;
    s.dot_count = r.counters.dot_count;
    s.axpy_count = r.counters.axpy_count;
    s.peak_vectors = r.counters.peak_vectors;
    s.seconds = secs;
    s.trace_path =
        (std::filesystem::path(manifest.out_dir) / ("trace_" + label + ".csv")).string();
    s.warnings = r.warnings;
    write_trace_csv(r.trace, s.trace_path);
    if (r.status != SolveStatus::Converged) out.all_converged = false;

    jconfigs.push_back(config_json(cfg, label));
    jresults.push_back(nlohmann::json{{"label", label},
                                      {"status", std::string(to_string(r.status))},
                                      {"iterations", s.iterations},
                                      {"final_relative_residual", s.final_relative_residual},
                                      {"matvec", s.matvec_count},
                                      {"dot", s.dot_count},
                                      {"axpy", s.axpy_count},
                                      {"peak_vectors", s.peak_vectors},
                                      {"seconds", s.seconds},
                                      {"trace", s.trace_path},
                                      {"warnings", s.warnings}});
    out.runs.push_back(std::move(s));
  }

  nlohmann::json j;
  if (!manifest.matrix_path.empty()) {
    j["matrix"] = {{"path", manifest.matrix_path}};
  } else {
    const GeneratorSpec& g = *manifest.generator;
    j["matrix"] = {{"generator", g.kind},
                   {"n", g.n},
                   {"stretch", g.stretch},
                   {"convection", g.convection}};
  }
  j["rhs"] = manifest.rhs.empty() ? "default" : manifest.rhs;
  j["seed"] = manifest.seed;
  j["rows"] = static_cast<std::int64_t>(A.rows());
  j["nnz"] = static_cast<std::int64_t>(A.nonZeros());
  j["solvers"] = jconfigs;
  j["results"] = jresults;

  out.manifest_path = (std::filesystem::path(manifest.out_dir) / "manifest.json").string();
  std::ofstream jf(out.manifest_path);
  if (!jf) throw std::runtime_error("cannot open '" + out.manifest_path + "' for writing");
  jf << j.dump(2) << "\n";
  return out;
}

int bench_main(int argc, char** argv) {
  CLI::App app{"iterative sparse solver benchmark"};
  CliValues v;
  build_app(app, v);
  try {
    app.parse(argc, argv);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  try {
    const RunManifest manifest = manifest_from(v);
    const BenchmarkResult result = run_benchmark(manifest);
    std::printf("%-12s %-10s %8s %14s %10s %10s %6s %10s\n", "solver", "status", "iters",
                "final_rel", "matvec", "dot", "peak", "seconds");
    for (const SolverRunSummary& run : result.runs) {
      std::printf("%-12s %-10s %8d %14.3e %10lld %10lld %6d %10.3f\n", run.label.c_str(),
                  std::string(to_string(run.status)).c_str(), run.iterations,
                  run.final_relative_residual, static_cast<long long>(run.matvec_count),
                  static_cast<long long>(run.dot_count), run.peak_vectors, run.seconds);
      for (const std::string& w : run.warnings) std::printf("  warning: %s\n", w.c_str());
    }
    std::printf("traces and manifest written to %s\n", manifest.out_dir.c_str());
    return result.all_converged ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace rescut
