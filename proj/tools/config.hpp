#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace distpd_cli {

// Exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// INI-style configuration restricted to a fixed schema. Keys are addressed
/// as "section.key"; the schema supplies every key with its default value.
///
///   [grid]
///   f_n_hz = 1:30:1        ; start:stop:step, inclusive
///   ts_ms  = 1, 3, 5
class Config {
 public:
  explicit Config(std::map<std::string, std::string> schema);

  // Throws ConfigError naming the first unknown key.
  void load_text(const std::string& text, const std::string& origin);
  void load_file(const std::string& path);
  void set(const std::string& assignment);  // "section.key=value"

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  // Comma list and/or start:stop:step ranges. May be empty.
  std::vector<double> list(const std::string& key) const;

  // Canonical "section.key = value" lines in key order.
  std::string canonical() const;
  std::string hash() const;  // FNV-1a 64 of canonical(), hex

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  void assign(const std::string& key, const std::string& value,
              const std::string& origin);
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& data);

std::string trim(const std::string& s);

}  // namespace distpd_cli
