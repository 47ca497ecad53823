#include <rescut/matrix_market.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace rescut {

MmParseError::MmParseError(int line, const std::string& what)
    : std::runtime_error("matrix market, line " + std::to_string(line) + ": " + what),
      line_(line) {}

namespace {

std::string lowered(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool next_content_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    if (line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

CsrMatrix mm_read(std::istream& in) {
  int lineno = 0;
  std::string line;
  if (!std::getline(in, line)) throw MmParseError(1, "empty stream");
  ++lineno;

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (lowered(banner) != "%%matrixmarket")
    throw MmParseError(lineno, "missing %%MatrixMarket banner");
  if (lowered(object) != "matrix")
    throw MmParseError(lineno, "unsupported object '" + object + "'");
  if (lowered(format) != "coordinate")
    throw MmParseError(lineno, "unsupported format '" + format + "' (need coordinate)");
  field = lowered(field);
  if (field != "real" && field != "integer")
    throw MmParseError(lineno, "unsupported field '" + field + "' (need real or integer)");
  symmetry = lowered(symmetry);
  if (symmetry != "general" && symmetry != "symmetric")
    throw MmParseError(lineno, "unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  if (!next_content_line(in, line, lineno))
    throw MmParseError(lineno + 1, "missing size line");
  long rows = 0, cols = 0, entries = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> entries) || rows <= 0 || cols <= 0 || entries < 0)
      throw MmParseError(lineno, "bad size line '" + line + "'");
    std::string extra;
    if (sizes >> extra) throw MmParseError(lineno, "trailing tokens on size line");
  }
  if (rows != cols)
    throw MmParseError(lineno, "matrix must be square, got " + std::to_string(rows) + " x " +
                                   std::to_string(cols));

  std::vector<Eigen::Triplet<Real, Index>> trips;
  trips.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
  for (long e = 0; e < entries; ++e) {
    if (!next_content_line(in, line, lineno))
      throw MmParseError(lineno + 1, "unexpected end of file, expected " +
                                         std::to_string(entries) + " entries, got " +
                                         std::to_string(e));
    std::istringstream entry(line);
    long i = 0, j = 0;
    Real v = 0;
    if (!(entry >> i >> j >> v))
      throw MmParseError(lineno, "malformed entry '" + line + "'");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw MmParseError(lineno, "entry index out of bounds");
    if (!std::isfinite(v)) throw MmParseError(lineno, "non-finite value");
    if (symmetric && j > i)
      throw MmParseError(lineno, "symmetric file stores an upper-triangle entry");
    trips.emplace_back(static_cast<Index>(i - 1), static_cast<Index>(j - 1), v);
    if (symmetric && i != j)
      trips.emplace_back(static_cast<Index>(j - 1), static_cast<Index>(i - 1), v);
  }

  CsrMatrix A(static_cast<Index>(rows), static_cast<Index>(cols));
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

CsrMatrix mm_read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return mm_read(in);
}

void mm_write(std::ostream& out, const CsrMatrix& A) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  const Index* rp = A.outerIndexPtr();
  const Index* ci = A.innerIndexPtr();
  const Real* v = A.valuePtr();
  char buf[64];
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", v[k]);
      out << (i + 1) << " " << (ci[k] + 1) << " " << buf << "\n";
    }
  }
}

void mm_write_file(const std::string& path, const CsrMatrix& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  mm_write(out, A);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace rescut
