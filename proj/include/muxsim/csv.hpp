#pragma once

// Minimal CSV dialect: comma separated, '.' decimal point, one header row,
// LF line endings, no quoting. Numbers are written in shortest round-trip form
// so a written table reads back to identical values.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "muxsim/errors.hpp"

namespace muxsim {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // source line of each row, 1-based

  std::ptrdiff_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }
};

namespace detail {

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    out.emplace_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Parse a table. Blank lines are skipped; a trailing CR is tolerated.
inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.find('"') != std::string::npos) throw parse_error("quoted fields are not supported", lineno);
    auto fields = detail::split_fields(line);
    if (!have_header) {
      for (const auto& h : fields)
        if (h.empty()) throw parse_error("empty column name in header", lineno);
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw parse_error("expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()),
                        lineno);
    t.rows.push_back(std::move(fields));
    t.row_lines.push_back(lineno);
  }
  if (!have_header) throw parse_error("missing header row", lineno + 1);
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

inline double parse_double(std::string_view s, std::size_t line) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size())
    throw parse_error("not a number: '" + std::string(s) + "'", line);
  return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) { emit(header); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width does not match header");
    emit(cells);
    return *this;
  }

  const std::string& str() const { return out_; }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << out_;
    if (!f.flush()) throw std::runtime_error("write failed: " + path);
  }

 private:
  void emit(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of(",\n\r\"") != std::string::npos)
        throw std::logic_error("csv cell contains a reserved character: " + cells[i]);
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }

  std::size_t width_;
  std::string out_;
};

}  // namespace muxsim
