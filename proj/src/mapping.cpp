#include "simcan/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "simcan/error.hpp"

namespace simcan {

namespace {

using json = nlohmann::json;

/// 1-based line/column of a byte offset.
std::pair<std::size_t, std::size_t> locate(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

SignalMapping::SignalMapping(std::vector<SignalBinding> bindings, const DbcDatabase& db)
    : bindings_(std::move(bindings)) {
  const auto& channels = vehicle_channels();
  std::set<std::pair<std::string, std::string>> bound;
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    const SignalBinding& b = bindings_[i];
    const std::string where = "bindings[" + std::to_string(i) + "] (" + b.channel + " -> " + b.message + "." + b.signal + "): ";
    if (std::find(channels.begin(), channels.end(), b.channel) == channels.end()) {
      throw ConfigError(where + "unknown channel '" + b.channel + "'");
    }
    try {
      lookup_signal(db, b.message, b.signal);
    } catch (const LookupError& e) {
      throw ConfigError(where + e.what());
    }
    if (!std::isfinite(b.gain) || !std::isfinite(b.bias)) throw ConfigError(where + "gain and bias must be finite");
    if (!bound.emplace(b.message, b.signal).second) {
      throw ConfigError(where + "duplicate binding of signal " + b.message + "." + b.signal);
    }
    if (std::find(messages_.begin(), messages_.end(), b.message) == messages_.end()) messages_.push_back(b.message);
  }
  std::sort(messages_.begin(), messages_.end(), [&](const std::string& a, const std::string& b) {
    return db.find(a)->frame_id < db.find(b)->frame_id;
  });
}

SignalMapping parse_mapping(std::string_view json_text, const DbcDatabase& db, const std::string& source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = locate(json_text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(source, line, column, "malformed map file");
  }
  if (!doc.is_object() || !doc.contains("bindings") || !doc["bindings"].is_array()) {
    throw ConfigError(source + ": map file must be an object with a 'bindings' array");
  }
  std::vector<SignalBinding> bindings;
  const json& list = doc["bindings"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& entry = list[i];
    const std::string where = source + ": bindings[" + std::to_string(i) + "]: ";
    if (!entry.is_object()) throw ConfigError(where + "expected an object");
    SignalBinding b;
    for (const char* key : {"channel", "message", "signal"}) {
      if (!entry.contains(key) || !entry[key].is_string()) {
        throw ConfigError(where + "missing string field '" + key + "'");
      }
    }
    b.channel = entry["channel"].get<std::string>();
    b.message = entry["message"].get<std::string>();
    b.signal = entry["signal"].get<std::string>();
    for (const char* key : {"gain", "bias"}) {
      if (entry.contains(key) && !entry[key].is_number()) throw ConfigError(where + "field '" + key + "' must be a number");
    }
    b.gain = entry.value("gain", 1.0);
    b.bias = entry.value("bias", 0.0);
    for (const auto& [key, value] : entry.items()) {
      if (key != "channel" && key != "message" && key != "signal" && key != "gain" && key != "bias") {
        throw ConfigError(where + "unknown field '" + key + "'");
      }
    }
    bindings.push_back(std::move(b));
  }
  try {
    return SignalMapping(std::move(bindings), db);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

SignalMapping load_mapping(const std::filesystem::path& path, const DbcDatabase& db) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open map file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_mapping(buffer.str(), db, path.string());
}

std::chrono::nanoseconds to_timestamp(double seconds) {
  return std::chrono::nanoseconds{std::llround(seconds * 1e9)};
}

std::vector<CanFrame> build_frames(const VehicleState& state, const SignalMapping& mapping, const DbcDatabase& db,
                                   ClampCounter* clamps) {
  std::vector<CanFrame> frames;
  frames.reserve(mapping.messages().size());
  const auto stamp = to_timestamp(state.t);
  for (const std::string& message : mapping.messages()) {
    PhysicalValueMap values;
    for (const SignalBinding& b : mapping.bindings()) {
      if (b.message != message) continue;
      values.set(b.signal, b.gain * *channel_value(state, b.channel) + b.bias);
    }
    frames.push_back(encode_message(db, message, values, stamp, clamps));
  }
  return frames;
}

}  // namespace simcan
