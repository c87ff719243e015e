#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace distpd_cli {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Config::Config(std::map<std::string, std::string> schema)
    : values_(std::move(schema)) {}

void Config::assign(const std::string& key, const std::string& value,
                    const std::string& origin) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError(origin + ": unknown key '" + key + "'");
  it->second = value;
}

void Config::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    assign(section.empty() ? key : section + "." + key,
           trim(line.substr(eq + 1)), where);
  }
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  load_text(ss.str(), path);
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  assign(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)),
         "--set");
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::logic_error("config key missing from schema: " + key);
  return it->second;
}

namespace {

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size() || !std::isfinite(v))
    throw ConfigError("key '" + key + "': not a number: '" + text + "'");
  return v;
}

}  // namespace

double Config::num(const std::string& key) const {
  return parse_number(key, str(key));
}

long Config::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v))
    throw ConfigError("key '" + key + "': expected an integer");
  return static_cast<long>(v);
}

bool Config::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_number(key, item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw ConfigError("key '" + key + "': range needs start:stop:step");
    const double a = parse_number(key, item.substr(0, c1));
    const double b = parse_number(key, item.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_number(key, item.substr(c2 + 1));
    if (!(step > 0.0) || b < a)
      throw ConfigError("key '" + key + "': range needs step > 0 and stop >= start");
    const long n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    if (n > 1000000) throw ConfigError("key '" + key + "': range too long");
    for (long i = 0; i <= n; ++i) out.push_back(a + i * step);
  }
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

}  // namespace distpd_cli
