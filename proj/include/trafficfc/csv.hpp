#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "trafficfc/errors.hpp"

namespace trafficfc {

/// A parsed CSV file: one header row plus data rows, all cells as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // rows[i][j], same arity as header

  /// Column index for a named header, or -1.
  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  if (line.empty()) out.emplace_back();
  return out;
}

/// Read a comma-separated file. Rows whose field count differs from the
/// header are malformed; the error message carries the 1-based line number.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      table.header = split_csv_line(line);
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != table.header.size())
      throw data_error(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty() || (table.header.size() == 1 && table.header[0].empty()))
    throw data_error(path + ": missing header row");
  return table;
}

/// Shortest decimal string that round-trips to the same double. Locale-free,
/// so emitted files are byte-stable across runs and machines.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed-precision formatting (used for SVG coordinates).
inline std::string format_fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

/// Parse a double cell; returns false on empty/unparseable content.
inline bool parse_double_cell(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  if (first == last) return false;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

/// Write a file atomically: stage to a sibling temp file, then rename over
/// the target so readers never observe a half-written file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw data_error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw data_error("cannot replace " + path);
  }
}

}  // namespace trafficfc
