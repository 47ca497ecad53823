#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rescut/matrix_market.hpp>
#include <rescut/oracle.hpp>
#include <rescut/sparse.hpp>

#include <numbers>
#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace rescut;
using testutil::dense_to_csr;

namespace {

CsrMatrix read_text(const std::string& text) {
  std::istringstream in(text);
  return mm_read(in);
}

}  // namespace

TEST_CASE("smallest legal file: one entry, one value") {
  const CsrMatrix A = read_text(
      "%%MatrixMarket matrix coordinate real general\n"
      "1 1 1\n"
      "1 1 5.0\n");
  CHECK(A.rows() == 1);
  CHECK(A.cols() == 1);
  CHECK(A.coeff(0, 0) == 5.0);
}

TEST_CASE("banner is case-insensitive and comments are skipped") {
  const CsrMatrix A = read_text(
      "%%matrixmarket MATRIX Coordinate Real General\n"
      "% a comment\n"
      "\n"
      "2 2 1\n"
      "2 1 -3\n");
  CHECK(A.coeff(1, 0) == -3);
  CHECK(A.nonZeros() == 1);
}

TEST_CASE("symmetric storage expands to the full matrix") {
  const CsrMatrix A = read_text(
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "2 2 2\n"
      "1 1 2\n"
      "2 1 1\n");
  CHECK(A.nonZeros() == 3);
  CHECK(A.coeff(0, 0) == 2);
  CHECK(A.coeff(0, 1) == 1);
  CHECK(A.coeff(1, 0) == 1);
  CHECK(is_symmetric_exact(A));
}

TEST_CASE("integer field parses as real values") {
  const CsrMatrix A = read_text(
      "%%MatrixMarket matrix coordinate integer general\n"
      "2 2 1\n"
      "1 2 7\n");
  CHECK(A.coeff(0, 1) == 7.0);
}

TEST_CASE("duplicate entries are summed") {
  const CsrMatrix A = read_text(
      "%%MatrixMarket matrix coordinate real general\n"
      "2 2 2\n"
      "1 1 2.5\n"
      "1 1 0.5\n");
  CHECK(A.coeff(0, 0) == 3.0);
  CHECK(A.nonZeros() == 1);
}

TEST_CASE("parse errors name the offending line") {
  // bad banner
  try {
    read_text("%%MatrixMarket matrix array real general\n1 1 1\n1 1 1\n");
    FAIL("expected a parse error");
  } catch (const MmParseError& e) {
    CHECK(e.line() == 1);
  }
  // pattern field is unsupported
  try {
    read_text("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n");
    FAIL("expected a parse error");
  } catch (const MmParseError& e) {
    CHECK(e.line() == 1);
  }
  // complex field is unsupported
  CHECK_THROWS_AS(
      read_text("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
      MmParseError);
  // non-square
  try {
    read_text("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n");
    FAIL("expected a parse error");
  } catch (const MmParseError& e) {
    CHECK(e.line() == 2);
  }
  // malformed entry on line 4 (banner + comment + size + entry)
  try {
    read_text("%%MatrixMarket matrix coordinate real general\n% c\n2 2 1\nx y z\n");
    FAIL("expected a parse error");
  } catch (const MmParseError& e) {
    CHECK(e.line() == 4);
  }
  // out-of-bounds index
  CHECK_THROWS_AS(read_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n"),
                  MmParseError);
  // premature end of file
  try {
    read_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n");
    FAIL("expected a parse error");
  } catch (const MmParseError& e) {
    CHECK(std::string(e.what()).find("expected 2 entries") != std::string::npos);
  }
  // symmetric file storing the upper triangle
  CHECK_THROWS_AS(
      read_text("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n"),
      MmParseError);
}

TEST_CASE("write then read is the identity on canonical CSR") {
  std::mt19937 rng(5);
  for (int inst = 0; inst < 50; ++inst) {
    std::uniform_real_distribution<Real> u(-1e3, 1e3);
    const int n = 3 + static_cast<int>(rng() % 20);
    DenseMatrix D = DenseMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      D(i, i) = u(rng) + 2e3;
      D(i, static_cast<int>(rng() % n)) = u(rng) / 3.0;
    }
    // include values that do not round-trip through short decimal forms
    D(0, n - 1) = 1.0 / 3.0;
    D(n - 1, 0) = std::numbers::pi_v<Real> * 1e-7;
    const CsrMatrix A = dense_to_csr(D);

    std::ostringstream out;
    mm_write(out, A);
    const CsrMatrix B = read_text(out.str());

    REQUIRE(B.rows() == A.rows());
    REQUIRE(B.nonZeros() == A.nonZeros());
    for (Index k = 0; k < A.nonZeros(); ++k) {
      CHECK(A.innerIndexPtr()[k] == B.innerIndexPtr()[k]);
      CHECK(A.valuePtr()[k] == B.valuePtr()[k]);
    }
  }
}

TEST_CASE("file round trip through the filesystem") {
  const CsrMatrix A = dense_to_csr((DenseMatrix(2, 2) << 1.25, 0, -7, 3).finished());
  const std::string path = "mm_roundtrip_tmp.mtx";
  mm_write_file(path, A);
  const CsrMatrix B = mm_read_file(path);
  CHECK(oracle::to_dense(B) == oracle::to_dense(A));
  std::remove(path.c_str());
}

TEST_CASE("mm_read_file reports a missing file") {
  CHECK_THROWS_AS(mm_read_file("definitely_not_here.mtx"), std::runtime_error);
}
