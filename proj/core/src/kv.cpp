#include "kv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lmmsel/errors.hpp"

namespace lmmsel::detail {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

bool KvFile::has(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KvFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw ValidationError("missing key '" + key + "'");
}

std::string KvFile::get_or(const std::string& key, std::string fallback) const {
  return has(key) ? get(key) : std::move(fallback);
}

KvFile parse_kv(std::istream& in) {
  KvFile out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    out.entries.emplace_back(key, value);
  }
  return out;
}

KvFile parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  return parse_kv(in);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ValidationError("expected a number for " + what + ", got '" + s + "'");
  }
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ValidationError("expected an integer for " + what + ", got '" + s + "'");
  }
  return v;
}

std::vector<double> parse_real_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_real(tok, what));
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(static_cast<int>(parse_long(tok, what)));
  return out;
}

std::string join_reals(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k) out += ",";
    out += format_real(v(k));
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(v[k]);
  }
  return out;
}

}  // namespace lmmsel::detail
