#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simcan/dbc.hpp"

namespace simcan {

/// Raw signal value. 128 bits so that both the unsigned 64-bit range and the
/// signed 64-bit range are representable in one type.
using raw_int = __int128;

std::string to_string(raw_int value);

/// Inclusive raw range implied by bit length and signedness.
struct RawRange {
  raw_int min;
  raw_int max;
};
RawRange raw_range(const SignalDef& sig);

/// One classic CAN data frame.
struct CanFrame {
  std::uint32_t frame_id = 0;
  bool extended = false;
  std::uint8_t dlc = 0;
  std::array<std::uint8_t, 8> data{};
  std::chrono::nanoseconds timestamp{0};

  std::span<const std::uint8_t> payload() const { return {data.data(), dlc}; }

  friend bool operator==(const CanFrame&, const CanFrame&) = default;
};

/// Builds a frame from explicit bytes; throws RangeError for more than 8 bytes
/// or an id outside the 11-bit range.
CanFrame make_frame(std::uint32_t frame_id, std::span<const std::uint8_t> bytes,
                    std::chrono::nanoseconds timestamp = std::chrono::nanoseconds{0});

/// Physical values keyed by signal name, in payload layout order.
class PhysicalValueMap {
 public:
  using value_type = std::pair<std::string, double>;

  PhysicalValueMap() = default;
  PhysicalValueMap(std::initializer_list<value_type> init);

  void set(std::string_view name, double value);
  const double* find(std::string_view name) const;
  double at(std::string_view name) const;

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<value_type> entries_;
};

/// Tally of physical values clamped into their declared range.
struct ClampCounter {
  std::size_t count = 0;
};

/// Clamps into [min_phys, max_phys] (or the raw-implied range when the DBC
/// declares min = max = 0), then rounds half away from zero. Throws RangeError
/// for non-finite input.
raw_int phys_to_raw(const SignalDef& sig, double value);
raw_int phys_to_raw(const SignalDef& sig, double value, ClampCounter& clamps);

/// raw * factor + offset. Throws RangeError when raw is outside raw_range(sig).
double raw_to_phys(const SignalDef& sig, raw_int raw);

/// Writes `raw` into exactly the bits of `sig`; other bits of `payload` are
/// untouched. Throws RangeError when raw is outside raw_range(sig) or the
/// payload is too short.
void pack_signal(std::span<std::uint8_t> payload, const SignalDef& sig, raw_int raw);

/// Inverse of pack_signal; sign-extends signed signals.
raw_int unpack_signal(std::span<const std::uint8_t> payload, const SignalDef& sig);

/// Missing signals are packed as raw 0. Throws LookupError for unknown
/// message or signal names.
CanFrame encode_message(const DbcDatabase& db, std::string_view message, const PhysicalValueMap& values,
                        std::chrono::nanoseconds timestamp, ClampCounter* clamps = nullptr);

/// Values of every signal of the matching message, ordered by start bit.
/// Throws UnmappedFrameError for ids unknown to `db`.
PhysicalValueMap decode_frame(const DbcDatabase& db, const CanFrame& frame);

/// Signals of `msg` ordered by start bit (ties by name).
std::vector<const SignalDef*> signals_in_layout_order(const MessageDef& msg);

}  // namespace simcan
