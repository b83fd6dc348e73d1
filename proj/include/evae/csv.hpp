#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace evae::csv {

/// Shortest decimal that parses back to the same double ("%.17g" fallback).
std::string format_double(double v);

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  Writer& cell(const std::string& s);
  Writer& cell(double v);
  Writer& cell(std::uint64_t v);
  Writer& empty();
  void end_row();
  void flush() { os_.flush(); }

 private:
  std::ofstream os_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, throwing ConfigError naming the column.
  std::size_t column(const std::string& name) const;
};

/// Comma-separated, header row required, no quoting.
Table read(const std::filesystem::path& path);

}  // namespace evae::csv
