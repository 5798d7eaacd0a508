#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mtltr {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Minimal CSV: comma-separated, no quoting (none of our formats need it),
// trailing \r stripped. Header row required by all callers.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  // Column index by name; throws CsvError if absent.
  int col(const std::string& name) const;

  // Reads the next data row into `fields`; false at EOF.
  bool next(std::vector<std::string>& fields);

  std::size_t line_number() const { return line_; }

 private:
  std::string data_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
  std::vector<std::string> header_;

  bool read_line(std::vector<std::string>& fields);
};

void split_csv_line(const std::string& line, std::vector<std::string>& out);

}  // namespace mtltr
