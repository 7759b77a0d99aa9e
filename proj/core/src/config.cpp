#include <fmt/format.h>

#include <cctype>
#include <fstream>
#include <sstream>

#include "dprom/config.hpp"

namespace dprom {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

ConfigFile ConfigFile::parse(const std::string& text,
                             const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(fmt::format("{}:{}: malformed section header '{}'",
                                      origin, lineno, line));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(
            fmt::format("{}:{}: empty section name", origin, lineno));
      cfg.data_[section];  // sections may be empty but must be declared
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format(
          "{}:{}: expected 'key = value', got '{}'", origin, lineno, line));
    if (section.empty())
      throw ConfigError(fmt::format(
          "{}:{}: key outside of any [section]", origin, lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(fmt::format("{}:{}: empty key", origin, lineno));
    auto& sec = cfg.data_[section];
    if (sec.count(key))
      throw ConfigError(fmt::format("{}:{}: duplicate key '{}' in [{}]",
                                    origin, lineno, key, section));
    sec[key] = Entry{value, lineno, false};
  }
  return cfg;
}

bool ConfigFile::has_section(const std::string& sec) const {
  return data_.count(sec) > 0;
}

bool ConfigFile::has(const std::string& sec, const std::string& key) const {
  return find(sec, key) != nullptr;
}

const ConfigFile::Entry* ConfigFile::find(const std::string& sec,
                                          const std::string& key) const {
  const auto s = data_.find(sec);
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  return &k->second;
}

const ConfigFile::Entry& ConfigFile::require(const std::string& sec,
                                             const std::string& key) {
  const Entry* e = find(sec, key);
  if (!e)
    throw ConfigError(fmt::format("{}: missing required key '{}' in [{}]",
                                  origin_, key, sec));
  e->consumed = true;
  return *e;
}

std::string ConfigFile::get_string(const std::string& sec,
                                   const std::string& key) {
  return require(sec, key).value;
}

std::string ConfigFile::get_string_or(const std::string& sec,
                                      const std::string& key,
                                      const std::string& def) {
  const Entry* e = find(sec, key);
  if (!e) return def;
  e->consumed = true;
  return e->value;
}

double ConfigFile::get_double(const std::string& sec, const std::string& key) {
  const Entry& e = require(sec, key);
  try {
    size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}:{}: '{}' is not a number", origin_,
                                  e.line, e.value));
  }
}

double ConfigFile::get_double_or(const std::string& sec, const std::string& key,
                                 double def) {
  return has(sec, key) ? get_double(sec, key) : def;
}

int ConfigFile::get_int(const std::string& sec, const std::string& key) {
  const Entry& e = require(sec, key);
  try {
    size_t pos = 0;
    const int v = std::stoi(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}:{}: '{}' is not an integer", origin_,
                                  e.line, e.value));
  }
}

int ConfigFile::get_int_or(const std::string& sec, const std::string& key,
                           int def) {
  return has(sec, key) ? get_int(sec, key) : def;
}

bool ConfigFile::get_bool_or(const std::string& sec, const std::string& key,
                             bool def) {
  const Entry* e = find(sec, key);
  if (!e) return def;
  e->consumed = true;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  throw ConfigError(fmt::format("{}:{}: '{}' is not a boolean", origin_,
                                e->line, e->value));
}

std::vector<double> ConfigFile::get_double_list(const std::string& sec,
                                                const std::string& key) {
  const Entry& e = require(sec, key);
  std::vector<double> out;
  for (const auto& tok : split_list(e.value)) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}:{}: list item '{}' is not a number",
                                    origin_, e.line, tok));
    }
  }
  if (out.empty())
    throw ConfigError(
        fmt::format("{}:{}: empty list for '{}'", origin_, e.line, key));
  return out;
}

std::vector<double> ConfigFile::get_double_list_or(
    const std::string& sec, const std::string& key,
    const std::vector<double>& def) {
  return has(sec, key) ? get_double_list(sec, key) : def;
}

std::vector<std::string> ConfigFile::get_string_list_or(
    const std::string& sec, const std::string& key,
    const std::vector<std::string>& def) {
  const Entry* e = find(sec, key);
  if (!e) return def;
  e->consumed = true;
  return split_list(e->value);
}

std::vector<std::string> ConfigFile::keys(const std::string& sec) const {
  std::vector<std::string> out;
  const auto s = data_.find(sec);
  if (s == data_.end()) return out;
  for (const auto& [key, e] : s->second) out.push_back(key);
  return out;
}

void ConfigFile::check_consumed(
    const std::vector<std::string>& known_sections) const {
  std::vector<std::string> bad;
  for (const auto& [sec, keys] : data_) {
    bool known = false;
    for (const auto& k : known_sections)
      if (k == sec) known = true;
    if (!known) {
      bad.push_back(fmt::format("[{}] (unknown section)", sec));
      continue;
    }
    for (const auto& [key, e] : keys)
      if (!e.consumed) bad.push_back(fmt::format("[{}] {}", sec, key));
  }
  if (!bad.empty()) {
    std::string msg = fmt::format("{}: unrecognized settings:", origin_);
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
}

std::string ConfigFile::canonical_text() const {
  std::string out;
  for (const auto& [sec, keys] : data_) {
    out += "[" + sec + "]\n";
    for (const auto& [key, e] : keys) out += key + " = " + e.value + "\n";
  }
  return out;
}

std::string ConfigFile::canonical_section(const std::string& sec) const {
  const auto s = data_.find(sec);
  if (s == data_.end()) return {};
  std::string out = "[" + sec + "]\n";
  for (const auto& [key, e] : s->second) out += key + " = " + e.value + "\n";
  return out;
}

}  // namespace dprom
