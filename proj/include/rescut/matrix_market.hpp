#pragma once

#include <rescut/types.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace rescut {

// Parse failure with the 1-based line number where the problem was found.
class MmParseError : public std::runtime_error {
 public:
  MmParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// Reads a Matrix Market coordinate file (real or integer, general or
// symmetric). Symmetric storage is expanded to a full matrix; duplicate
// entries are summed. Pattern, complex, skew-symmetric and array formats
// are rejected.
CsrMatrix mm_read(std::istream& in);
CsrMatrix mm_read_file(const std::string& path);

// Writes coordinate/real/general with full round-trip precision.
void mm_write(std::ostream& out, const CsrMatrix& A);
void mm_write_file(const std::string& path, const CsrMatrix& A);

}  // namespace rescut
