#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace simcan {

/// Parses `.env` text: `KEY=value`, `KEY="value"`, `export KEY=value`,
/// blank lines and `#` comments.
std::map<std::string, std::string> parse_dotenv(std::string_view text);

/// Variables from a `.env` file overlaid by the process environment
/// (the process environment wins on conflict).
class Environment {
 public:
  Environment() = default;
  explicit Environment(std::map<std::string, std::string> dotenv) : dotenv_(std::move(dotenv)) {}

  /// Missing file yields an environment backed by the process only.
  static Environment load(const std::filesystem::path& dotenv_path = ".env");

  std::optional<std::string> get(const std::string& name) const;

 private:
  std::map<std::string, std::string> dotenv_;
};

}  // namespace simcan
