#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simcan/codec.hpp"
#include "simcan/dbc.hpp"
#include "simcan/transport.hpp"

namespace simcan {

/// `message.signal` must be observed within [min, max] at least `min_count` times.
struct Expectation {
  std::string message;
  std::string signal;
  double min = 0.0;
  double max = 0.0;
  std::size_t min_count = 1;
};

/// Parses `msg.sig:min:max:count`. Throws ConfigError when malformed.
Expectation parse_expectation(std::string_view text);

struct ObservedValue {
  std::string message;
  std::string signal;
  double value = 0.0;
};

struct ExpectationOutcome {
  Expectation expectation;
  std::size_t in_range = 0;
  bool passed = false;
};

struct Verdict {
  bool passed = true;
  std::vector<ExpectationOutcome> outcomes;
};

/// Throws ConfigError when an expectation names a signal unknown to `db`.
void validate_expectations(const DbcDatabase& db, const std::vector<Expectation>& expectations);

Verdict check_expectations(const DbcDatabase& db, const std::vector<Expectation>& expectations,
                           const std::vector<ObservedValue>& observed);

/// Decoded value text with as many decimals as the signal's scaling carries,
/// so the printed number is exactly raw * factor + offset.
std::string format_signal_value(const SignalDef& sig, double value);

/// Receiver-side decoder. Decode problems are counted, never fatal.
class Monitor {
 public:
  Monitor(const DbcDatabase& db, std::string channel_label, std::vector<Expectation> expectations = {});

  /// Decodes one frame and returns the display line:
  /// `<console frame> | msg.sig=value unit ...`.
  std::string on_frame(const CanFrame& frame);
  void on_malformed() { ++malformed_; }

  std::size_t frames() const { return frames_; }
  std::size_t unmapped() const { return unmapped_; }
  std::size_t decode_errors() const { return decode_errors_; }
  std::size_t malformed() const { return malformed_; }
  const std::vector<ObservedValue>& observed() const { return observed_; }

  Verdict verdict() const;

 private:
  const DbcDatabase& db_;
  std::string label_;
  std::vector<Expectation> expectations_;
  std::vector<ObservedValue> observed_;
  std::size_t frames_ = 0;
  std::size_t unmapped_ = 0;
  std::size_t decode_errors_ = 0;
  std::size_t malformed_ = 0;
};

struct MonitorOptions {
  std::string channel;
  std::string dbc_path;
  std::vector<std::string> expectations;
  std::chrono::milliseconds idle_timeout{2000};
  std::optional<std::size_t> max_frames;
};

/// Exit codes of the monitor command.
enum MonitorExit : int { kMonitorOk = 0, kMonitorExpectationFailed = 1, kMonitorError = 2, kMonitorNoTraffic = 3 };

/// Receive loop: prints one line per frame to `out`, diagnostics and the
/// final summary to `log`. Returns when idle for `idle_timeout` or after
/// `max_frames`.
int run_monitor(const MonitorOptions& options, std::ostream& out, std::ostream& log);
/// Same loop over an already opened receiver.
int run_monitor(ChannelReceiver& receiver, const DbcDatabase& db, const MonitorOptions& options, std::ostream& out,
                std::ostream& log);

}  // namespace simcan
