#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace econet {

/// Flat `key = value` configuration. Blank lines and lines starting with '#'
/// are ignored; later assignments to the same key win.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<text>");
  static KeyValueConfig load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  /// Keys starting with `prefix`, in sorted order.
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);

}  // namespace econet
