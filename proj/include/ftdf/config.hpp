#ifndef FTDF_CONFIG_HPP
#define FTDF_CONFIG_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace ftdf {

// Plain "key = value" configuration file. Blank lines and lines starting
// with '#' are ignored; values keep everything after the first '='.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text, const std::string& name = "<string>");

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::vector<std::string> keys() const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Typed getters throw ParseError naming the key on malformed values.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  Eigen::Vector3d get_vector3(const std::string& key, const Eigen::Vector3d& fallback) const;

  // Variants that require the key to be present.
  std::string require_string(const std::string& key) const;

  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

}  // namespace ftdf

#endif
