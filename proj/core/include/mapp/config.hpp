// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mapp {

/// 64-bit FNV-1a. Used for config hashes and tensor-file checksums.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Flat `key = value` text. Blank lines and `#` comments are ignored.
/// Keys are tracked when read so callers can reject unknown keys.
class KeyValues {
 public:
  KeyValues() = default;

  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Canonical text: keys sorted, one `key = value` per line.
  std::string dump() const;
  std::uint64_t hash() const { return fnv1a64(dump()); }

  bool contains(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, int value) { set(key, std::int64_t{value}); }
  void set(const std::string& key, bool value);
  void merge(const KeyValues& other);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  /// Keys present in the file that no `get_*` call has touched.
  std::vector<std::string> unused_keys() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace mapp
