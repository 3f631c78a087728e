#include "ftdf/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ftdf/errors.hpp"

namespace ftdf {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str(), path);
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text, const std::string& name) {
  KeyValueConfig config;
  config.source_ = name;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(name + ":" + std::to_string(line_number) +
                       ": expected 'key = value', got \"" + stripped + "\"");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(name + ":" + std::to_string(line_number) + ": empty key");
    }
    config.values_[key] = value;
  }
  return config;
}

std::vector<std::string> KeyValueConfig::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError(source_ + ": missing required key \"" + key + "\"");
  }
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (trim(it->second.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(source_ + ": key \"" + key + "\" is not a number: \"" + it->second + "\"");
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos, 10);
    if (trim(it->second.substr(pos)).empty()) return static_cast<int>(v);
  } catch (const std::exception&) {
  }
  throw ParseError(source_ + ": key \"" + key + "\" is not an integer: \"" + it->second + "\"");
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError(source_ + ": key \"" + key + "\" is not a boolean: \"" + it->second + "\"");
}

Eigen::Vector3d KeyValueConfig::get_vector3(const std::string& key,
                                            const Eigen::Vector3d& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string text = it->second;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  Eigen::Vector3d v;
  if (in >> v.x() >> v.y() >> v.z()) {
    std::string rest;
    if (!(in >> rest)) return v;
  }
  throw ParseError(source_ + ": key \"" + key + "\" is not a 3-vector: \"" + it->second + "\"");
}

}  // namespace ftdf
