#include "simcan/env.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace simcan {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_dotenv(std::string_view text) {
  std::map<std::string, std::string> vars;
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(begin, end - begin));
    begin = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (line.starts_with("export ")) line = trim(line.substr(7));
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    const std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    } else if (const auto hash = value.find(" #"); hash != std::string_view::npos) {
      value = trim(value.substr(0, hash));
    }
    if (!key.empty()) vars[std::string(key)] = std::string(value);
  }
  return vars;
}

Environment Environment::load(const std::filesystem::path& dotenv_path) {
  std::ifstream in(dotenv_path, std::ios::binary);
  if (!in) return Environment{};
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return Environment(parse_dotenv(buffer.str()));
}

std::optional<std::string> Environment::get(const std::string& name) const {
  if (const char* value = std::getenv(name.c_str())) return std::string(value);
  if (auto it = dotenv_.find(name); it != dotenv_.end()) return it->second;
  return std::nullopt;
}

}  // namespace simcan
