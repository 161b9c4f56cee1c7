#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace i2pflow {

// Shortest decimal that round-trips an IEEE-754 double exactly.
std::string format_double(double v);

// Strict numeric parsing. parse_double accepts finite decimals only;
// non-numeric or non-finite input yields nullopt.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, char delim);
std::string to_lower(std::string_view s);

// Line-oriented `key = value` file with '#' comments. Duplicate keys are an
// error; order of first appearance is preserved.
class KvFile {
 public:
  static KvFile parse_file(const std::string& path);
  static KvFile parse_text(std::string_view text, const std::string& origin);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;                  // ConfigError if absent
  std::string get_or(const std::string& key, const std::string& def) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
  std::string origin_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// CRC-32 (IEEE 802.3 polynomial, reflected).
std::uint32_t crc32(std::string_view data);

}  // namespace i2pflow
