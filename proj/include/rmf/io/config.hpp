#pragma once

// Flat `key = value` configuration files. One entry per line, `#` starts a
// comment, blank lines are ignored, list values are comma separated. Keys may
// not repeat. Every key must be read (or explicitly allowed) before
// `reject_unused()`, so typos surface as errors instead of silent defaults.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rmf::io {

class Config {
 public:
  static Config parse(std::string_view text, std::string origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Keys starting with `prefix`, in sorted order.
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::int64_t> get_ints(const std::string& key) const;

  /// Throws InvalidInput naming the first key that was never read.
  void reject_unused() const;

 private:
  const std::string& raw(const std::string& key) const;
  std::string where(const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

/// Parse helpers shared with the CLI.
double parse_double(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);
std::vector<std::string> split_list(std::string_view s);

}  // namespace rmf::io
