#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "simcan/codec.hpp"
#include "simcan/dbc.hpp"
#include "simcan/scenario.hpp"

namespace simcan {

/// channel -> message.signal, encoded from gain * channel + bias.
struct SignalBinding {
  std::string channel;
  std::string message;
  std::string signal;
  double gain = 1.0;
  double bias = 0.0;

  friend bool operator==(const SignalBinding&, const SignalBinding&) = default;
};

class SignalMapping {
 public:
  SignalMapping() = default;
  /// Cross-validates against `db`; throws ConfigError naming the binding.
  SignalMapping(std::vector<SignalBinding> bindings, const DbcDatabase& db);

  const std::vector<SignalBinding>& bindings() const { return bindings_; }
  /// Distinct bound messages, ascending frame id.
  const std::vector<std::string>& messages() const { return messages_; }
  bool empty() const { return bindings_.empty(); }

 private:
  std::vector<SignalBinding> bindings_;
  std::vector<std::string> messages_;
};

/// Reads the JSON map file:
///   {"bindings": [{"channel": "wheel_speed", "message": "sampleFrame2",
///                  "signal": "wheelspeed", "gain": 1.0, "bias": 0.0}, ...]}
SignalMapping parse_mapping(std::string_view json_text, const DbcDatabase& db, const std::string& source = "<map>");
SignalMapping load_mapping(const std::filesystem::path& path, const DbcDatabase& db);

/// One frame per bound message, ascending frame id, stamped with state.t.
std::vector<CanFrame> build_frames(const VehicleState& state, const SignalMapping& mapping, const DbcDatabase& db,
                                   ClampCounter* clamps = nullptr);

std::chrono::nanoseconds to_timestamp(double seconds);

}  // namespace simcan
