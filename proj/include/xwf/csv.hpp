#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "xwf/error.hpp"

namespace xwf {

// Minimal CSV support for the plain numeric schemas used throughout:
// comma-separated, no quoting, '#' lines treated as comments.

class CsvReader {
 public:
  explicit CsvReader(const std::string& path);

  // Next non-comment row, or nullopt at EOF.
  std::optional<std::vector<std::string>> next();

  const std::string& path() const { return path_; }
  long line() const { return line_; }

  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::string path_;
  std::ifstream in_;
  long line_ = 0;
};

double parse_double(const std::string& field, const std::string& path,
                    long line);
long parse_long(const std::string& field, const std::string& path, long line);

// Round-trip safe formatting for doubles ("%.17g" trimmed where shorter
// representations are exact).
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();

  void comment(const std::string& text);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace xwf
