#include "xwf/csv.hpp"

#include <charconv>
#include <cstdio>

namespace xwf {

CsvReader::CsvReader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw Error(ErrorKind::io, "cannot open " + path);
}

std::optional<std::vector<std::string>> CsvReader::next() {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '#') continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t comma = raw.find(',', start);
      if (comma == std::string::npos) {
        fields.emplace_back(raw.substr(start));
        break;
      }
      fields.emplace_back(raw.substr(start, comma - start));
      start = comma + 1;
    }
    return fields;
  }
  return std::nullopt;
}

void CsvReader::fail(const std::string& what) const {
  throw Error(ErrorKind::parse,
              path_ + ":" + std::to_string(line_) + ": " + what);
}

double parse_double(const std::string& field, const std::string& path,
                    long line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::parse, path + ":" + std::to_string(line) +
                                      ": expected a number, got '" + field +
                                      "'");
  }
  return v;
}

long parse_long(const std::string& field, const std::string& path, long line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::parse, path + ":" + std::to_string(line) +
                                      ": expected an integer, got '" + field +
                                      "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[40];
  // Shortest representation that parses back to the same double.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) return buf;
  }
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw Error(ErrorKind::io, "cannot open " + path + " for writing");
}

CsvWriter::~CsvWriter() {
  if (out_.is_open()) out_.close();
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw Error(ErrorKind::io, "write failed for " + path_);
}

}  // namespace xwf
