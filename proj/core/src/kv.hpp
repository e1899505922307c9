#pragma once

#include <Eigen/Dense>
#include <istream>
#include <string>
#include <utility>
#include <vector>

// Internal helpers for the flat "key = value" file format used by the
// hyperparameter config and trace metadata sidecars.
namespace lmmsel::detail {

struct KvFile {
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;          // throws ValidationError
  std::string get_or(const std::string& key, std::string fallback) const;
};

/// Parses "key = value" lines; '#' starts a comment, blank lines ignored.
/// Malformed lines raise ParseError with the line number.
KvFile parse_kv(std::istream& in);
KvFile parse_kv_file(const std::string& path);

std::string format_real(double v);
double parse_real(const std::string& s, const std::string& what);
long parse_long(const std::string& s, const std::string& what);

std::vector<double> parse_real_list(const std::string& s, const std::string& what);
std::vector<int> parse_int_list(const std::string& s, const std::string& what);
std::string join_reals(const Eigen::VectorXd& v);
std::string join_ints(const std::vector<int>& v);

}  // namespace lmmsel::detail
