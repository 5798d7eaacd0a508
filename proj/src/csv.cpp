#include "mtltr/csv.hpp"

#include <fstream>
#include <sstream>

namespace mtltr {

void split_csv_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

CsvReader::CsvReader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  data_ = ss.str();
  if (!read_line(header_) || header_.empty() || header_[0].empty())
    throw CsvError("missing header in " + path);
}

int CsvReader::col(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return static_cast<int>(i);
  throw CsvError("missing column '" + name + "'");
}

bool CsvReader::read_line(std::vector<std::string>& fields) {
  while (pos_ < data_.size()) {
    std::size_t nl = data_.find('\n', pos_);
    std::string line = data_.substr(
        pos_, nl == std::string::npos ? std::string::npos : nl - pos_);
    pos_ = nl == std::string::npos ? data_.size() : nl + 1;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    split_csv_line(line, fields);
    return true;
  }
  return false;
}

bool CsvReader::next(std::vector<std::string>& fields) {
  return read_line(fields);
}

}  // namespace mtltr
