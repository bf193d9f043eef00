#include "diracstar/profile_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diracstar/errors.hpp"

namespace diracstar {

const std::vector<double>& ProfileTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return columns[k];
  throw io_error("malformed-csv", "missing column " + name);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path p(path);
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("write", "cannot open " + tmp.string());
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw io_error("write", "failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw io_error("write", "cannot rename onto " + p.string() + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("read", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_csv(const ProfileTable& t) {
  std::string s = "r";
  for (const auto& n : t.names) s += "," + n;
  s += "\n";
  for (std::size_t i = 0; i < t.r.size(); ++i) {
    s += format_double(t.r[i]);
    for (const auto& c : t.columns) s += "," + format_double(c[i]);
    s += "\n";
  }
  return s;
}

void save_profiles(const std::string& path, const ProfileTable& t) {
  for (const auto& c : t.columns)
    if (c.size() != t.r.size()) throw config_error("profile", "column length differs from r");
  atomic_write(path, to_csv(t));
}

void save_profile(const std::string& path, const RadialProfile& p) {
  save_profiles(path, ProfileTable{p.grid->nodes(), {"value"}, {p.f}});
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, std::size_t row) {
  const char* b = s.c_str();
  char* e = nullptr;
  double v = std::strtod(b, &e);
  if (e == b || *e != '\0') throw io_error("malformed-csv", "row " + std::to_string(row) + ": not a number '" + s + "'");
  if (!std::isfinite(v)) throw io_error("malformed-csv", "row " + std::to_string(row) + ": non-finite value");
  return v;
}

}  // namespace

ProfileTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw io_error("malformed-csv", "empty file");
  auto header = split(line);
  if (header.empty() || header[0] != "r") throw io_error("malformed-csv", "header must start with r");
  ProfileTable t;
  t.names.assign(header.begin() + 1, header.end());
  t.columns.resize(t.names.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    auto fields = split(line);
    if (fields.size() != header.size())
      throw io_error("malformed-csv", "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                          " fields, found " + std::to_string(fields.size()));
    double r = parse_number(fields[0], row);
    if (!t.r.empty() && !(r > t.r.back()))
      throw io_error("malformed-csv", "row " + std::to_string(row) + ": r is not increasing");
    t.r.push_back(r);
    for (std::size_t k = 1; k < fields.size(); ++k) t.columns[k - 1].push_back(parse_number(fields[k], row));
  }
  if (t.r.empty()) throw io_error("malformed-csv", "no data rows");
  return t;
}

ProfileTable load_profiles(const std::string& path) { return parse_csv(read_file(path)); }

RadialProfile load_profile(const std::string& path, Parity parity) {
  auto t = load_profiles(path);
  if (t.columns.size() != 1) throw io_error("malformed-csv", "expected a single value column");
  auto grid = RadialGrid::from_nodes(t.r);
  return RadialProfile(grid, t.columns[0], parity);
}

}  // namespace diracstar
