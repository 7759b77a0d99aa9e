#pragma once

#include <map>
#include <string>
#include <vector>

#include "dprom/types.hpp"

namespace dprom {

// INI-style configuration with strict key accounting: every key that the
// scenario layer does not consume is reported as an error, so typos in
// option names fail loudly instead of silently using defaults.
class ConfigFile {
 public:
  static ConfigFile load(const std::string& path);
  static ConfigFile parse(const std::string& text, const std::string& origin);

  bool has_section(const std::string& sec) const;
  bool has(const std::string& sec, const std::string& key) const;

  std::string get_string(const std::string& sec, const std::string& key);
  std::string get_string_or(const std::string& sec, const std::string& key,
                            const std::string& def);
  double get_double(const std::string& sec, const std::string& key);
  double get_double_or(const std::string& sec, const std::string& key,
                       double def);
  int get_int(const std::string& sec, const std::string& key);
  int get_int_or(const std::string& sec, const std::string& key, int def);
  bool get_bool_or(const std::string& sec, const std::string& key, bool def);
  std::vector<double> get_double_list(const std::string& sec,
                                      const std::string& key);
  std::vector<double> get_double_list_or(const std::string& sec,
                                         const std::string& key,
                                         const std::vector<double>& def);
  std::vector<std::string> get_string_list_or(
      const std::string& sec, const std::string& key,
      const std::vector<std::string>& def);

  // Keys of a section in file order of first appearance is not preserved;
  // they come back sorted, which keeps downstream artifacts deterministic.
  std::vector<std::string> keys(const std::string& sec) const;

  // Sections whose every key must be consumed by the caller before the
  // check; pass a list of known section names to also reject unknown
  // sections.
  void check_consumed(const std::vector<std::string>& known_sections) const;

  const std::string& origin() const { return origin_; }
  std::string canonical_text() const;  // normalized form used for hashing
  // Normalized text of one section; empty string when absent. Does not mark
  // anything consumed.
  std::string canonical_section(const std::string& sec) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  std::map<std::string, std::map<std::string, Entry>> data_;
  std::string origin_;

  const Entry* find(const std::string& sec, const std::string& key) const;
  const Entry& require(const std::string& sec, const std::string& key);
};

}  // namespace dprom
