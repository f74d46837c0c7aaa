#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace scenforge::cli
{

/// Flat key=value settings. Every accepted key has a default; files and
/// overrides may only set known keys.
class RunConfig
{
public:
  RunConfig();

  /// Lines are `key = value`; '#' starts a comment. Throws ConfigError with the
  /// line number for malformed lines or unknown keys.
  void merge_text(std::istream & in, const std::string & origin);
  void merge_file(const std::filesystem::path & path);
  /// `key=value`; throws ConfigError for unknown keys.
  void set_override(const std::string & assignment);
  void set(const std::string & key, const std::string & value);

  bool has(const std::string & key) const { return values_.count(key) != 0; }
  const std::string & str(const std::string & key) const;
  double real(const std::string & key) const;
  long integer(const std::string & key) const;
  std::uint64_t u64(const std::string & key) const;
  bool flag(const std::string & key) const;
  std::vector<int> int_list(const std::string & key) const;
  std::vector<double> real_list(const std::string & key) const;
  std::vector<std::string> str_list(const std::string & key) const;

  std::filesystem::path out_dir() const { return str("out"); }
  /// Value of `key`, or <out>/<fallback> when it is empty.
  std::filesystem::path path_or(const std::string & key, const std::string & fallback) const;

  /// Sorted `key = value` lines.
  void write(std::ostream & out) const;
  const std::map<std::string, std::string> & values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace scenforge::cli
