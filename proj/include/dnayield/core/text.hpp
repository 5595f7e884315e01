#pragma once

// Small text helpers shared by the CSV and key-value readers.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dnayield/core/error.hpp"

namespace dnayield::text {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double to_double(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  std::string buf(t);
  if (buf == "nan" || buf == "NaN") return std::nan("");
  if (buf == "inf" || buf == "+inf") return HUGE_VAL;
  if (buf == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{} || ptr != buf.data() + buf.size())
    throw InvalidInput("field '" + std::string(what) + "': not a number: '" + buf + "'");
  return v;
}

inline long long to_int(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw InvalidInput("field '" + std::string(what) + "': not an integer: '" + std::string(t) + "'");
  return v;
}

/// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

/// `key=value` lines; `#` starts a comment. Later keys override earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::string_view body) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(body)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw InvalidInput("line " + std::to_string(lineno) + ": expected key=value");
    kv[std::string(trim(l.substr(0, eq)))] = std::string(trim(l.substr(eq + 1)));
  }
  return kv;
}

/// Header-indexed CSV table. Quoting is not supported; fields never contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;  // lines starting with '#'

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
  int require_column(std::string_view name) const {
    const int c = column(name);
    if (c < 0) throw InvalidInput("missing CSV column '" + std::string(name) + "'");
    return c;
  }
};

inline CsvTable parse_csv(std::string_view body) {
  CsvTable t;
  std::istringstream in{std::string(body)};
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto l = trim(line);
    if (l.empty()) continue;
    if (l.front() == '#') {
      t.comments.emplace_back(trim(l.substr(1)));
      continue;
    }
    auto fields = split(l, ',');
    for (auto& f : fields) f = std::string(trim(f));
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw InvalidInput("CSV line " + std::to_string(lineno) + ": expected " +
                         std::to_string(t.header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw InvalidInput("CSV has no header");
  return t;
}

}  // namespace dnayield::text
