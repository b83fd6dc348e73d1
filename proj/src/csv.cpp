#include "evae/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "evae/errors.hpp"

namespace evae::csv {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericError("csv: cannot format double");
  return std::string(buf, end);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : os_(path), columns_(header.size()) {
  if (!os_) throw ConfigError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
  os_ << '\n';
}

Writer& Writer::cell(const std::string& s) {
  if (in_row_++) os_ << ',';
  os_ << s;
  return *this;
}

Writer& Writer::cell(double v) { return cell(format_double(v)); }

Writer& Writer::cell(std::uint64_t v) { return cell(std::to_string(v)); }

Writer& Writer::empty() { return cell(std::string()); }

void Writer::end_row() {
  if (in_row_ != columns_) {
    throw UsageError("csv: row has " + std::to_string(in_row_) + " cells, header has " +
                     std::to_string(columns_));
  }
  os_ << '\n';
  in_row_ = 0;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("missing column '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Table read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(path.string() + ": missing header row");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " cells, got " +
                        std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace evae::csv
