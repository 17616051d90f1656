#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace oes {

/// Ordered `key = value` text file. Blank lines and `#` comments are ignored;
/// duplicate keys are an error.
class KeyValueFile {
 public:
  static KeyValueFile load(const std::string& path);
  static KeyValueFile parse(const std::string& text, const std::string& origin);

  void set(const std::string& key, const std::string& value);
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Strict value parsers; throw Error(kConfig) naming the key on bad input.
std::uint64_t parse_unsigned(const std::string& text, const std::string& key);
double parse_double(const std::string& text, const std::string& key);
std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& key);
std::string format_double(double v);

}  // namespace oes
