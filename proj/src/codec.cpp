#include "simcan/codec.hpp"

#include <algorithm>
#include <cmath>

#include "simcan/error.hpp"

namespace simcan {

namespace {

std::uint64_t low_mask(int bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

std::uint64_t load_le(std::span<const std::uint8_t> bytes) {
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < bytes.size() && i < 8; ++i) word |= std::uint64_t{bytes[i]} << (8 * i);
  return word;
}

void store_le(std::span<std::uint8_t> bytes, std::uint64_t word) {
  for (std::size_t i = 0; i < bytes.size() && i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(word >> (8 * i));
}

std::uint64_t load_be(std::span<const std::uint8_t> bytes) {
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < bytes.size() && i < 8; ++i) word |= std::uint64_t{bytes[i]} << (8 * (7 - i));
  return word;
}

void store_be(std::span<std::uint8_t> bytes, std::uint64_t word) {
  for (std::size_t i = 0; i < bytes.size() && i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(word >> (8 * (7 - i)));
}

/// Where a signal sits inside the 64-bit word of its byte order.
struct Placement {
  int shift;            // position of the raw LSB in the word
  std::size_t needed;   // payload bytes that must be present
};

Placement placement(const SignalDef& sig) {
  if (sig.byte_order == ByteOrder::little_endian) {
    const int end = sig.start_bit + sig.bit_length;
    if (sig.start_bit < 0 || end > 64) throw RangeError("signal '" + sig.name + "' does not fit in 64 bits");
    return {sig.start_bit, static_cast<std::size_t>((end + 7) / 8)};
  }
  // Big-endian linear numbering: index 0 is the MSB of byte 0.
  const int msb = (sig.start_bit / 8) * 8 + (7 - sig.start_bit % 8);
  const int lsb = msb + sig.bit_length - 1;
  if (sig.start_bit < 0 || lsb > 63) throw RangeError("signal '" + sig.name + "' does not fit in 64 bits");
  return {63 - lsb, static_cast<std::size_t>(lsb / 8 + 1)};
}

void check_raw(const SignalDef& sig, raw_int raw) {
  const RawRange range = raw_range(sig);
  if (raw < range.min || raw > range.max) {
    throw RangeError("raw value " + to_string(raw) + " outside [" + to_string(range.min) + ", " +
                     to_string(range.max) + "] of signal '" + sig.name + "'");
  }
}

raw_int round_half_away(long double x) { return static_cast<raw_int>(std::roundl(x)); }

}  // namespace

std::string to_string(raw_int value) {
  if (value == 0) return "0";
  const bool negative = value < 0;
  unsigned __int128 magnitude = negative ? static_cast<unsigned __int128>(-(value + 1)) + 1 : static_cast<unsigned __int128>(value);
  std::string digits;
  while (magnitude != 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(magnitude % 10)));
    magnitude /= 10;
  }
  if (negative) digits.push_back('-');
  return {digits.rbegin(), digits.rend()};
}

RawRange raw_range(const SignalDef& sig) {
  const int n = sig.bit_length;
  if (sig.is_signed()) {
    const raw_int half = raw_int{1} << (n - 1);
    return {-half, half - 1};
  }
  return {0, (raw_int{1} << n) - 1};
}

CanFrame make_frame(std::uint32_t frame_id, std::span<const std::uint8_t> bytes, std::chrono::nanoseconds timestamp) {
  if (bytes.size() > 8) throw RangeError("CAN payload longer than 8 bytes");
  if (frame_id > 0x7FF) throw RangeError("frame id " + std::to_string(frame_id) + " exceeds 11 bits");
  CanFrame frame;
  frame.frame_id = frame_id;
  frame.dlc = static_cast<std::uint8_t>(bytes.size());
  std::copy(bytes.begin(), bytes.end(), frame.data.begin());
  frame.timestamp = timestamp;
  return frame;
}

PhysicalValueMap::PhysicalValueMap(std::initializer_list<value_type> init) {
  for (const auto& [name, value] : init) set(name, value);
}

void PhysicalValueMap::set(std::string_view name, double value) {
  for (auto& entry : entries_) {
    if (entry.first == name) {
      entry.second = value;
      return;
    }
  }
  entries_.emplace_back(std::string(name), value);
}

const double* PhysicalValueMap::find(std::string_view name) const {
  for (const auto& entry : entries_) {
    if (entry.first == name) return &entry.second;
  }
  return nullptr;
}

double PhysicalValueMap::at(std::string_view name) const {
  if (const double* v = find(name)) return *v;
  throw LookupError(LookupError::Level::signal, "no value for signal '" + std::string(name) + "'");
}

raw_int phys_to_raw(const SignalDef& sig, double value) {
  ClampCounter ignored;
  return phys_to_raw(sig, value, ignored);
}

raw_int phys_to_raw(const SignalDef& sig, double value, ClampCounter& clamps) {
  if (!std::isfinite(value)) throw RangeError("non-finite value for signal '" + sig.name + "'");
  bool clamped = false;
  long double phys = value;
  if (sig.has_phys_range()) {
    const long double lo = sig.min_phys.to_long_double();
    const long double hi = sig.max_phys.to_long_double();
    if (phys < lo) {
      phys = lo;
      clamped = true;
    } else if (phys > hi) {
      phys = hi;
      clamped = true;
    }
  }
  const long double scaled = (phys - sig.offset.to_long_double()) * pow10l_exact(sig.factor.scale()) /
                             static_cast<long double>(sig.factor.mantissa());
  const RawRange range = raw_range(sig);
  raw_int raw;
  // Compare in floating point first; huge values would overflow the cast.
  if (scaled <= static_cast<long double>(range.min)) {
    raw = range.min;
    clamped = clamped || scaled < static_cast<long double>(range.min) - 0.5L;
  } else if (scaled >= static_cast<long double>(range.max)) {
    raw = range.max;
    clamped = clamped || scaled > static_cast<long double>(range.max) + 0.5L;
  } else {
    raw = std::clamp(round_half_away(scaled), range.min, range.max);
  }
  if (clamped) ++clamps.count;
  return raw;
}

double raw_to_phys(const SignalDef& sig, raw_int raw) {
  check_raw(sig, raw);
  const long double scaled = static_cast<long double>(raw * sig.factor.mantissa()) / pow10l_exact(sig.factor.scale());
  return static_cast<double>(scaled + sig.offset.to_long_double());
}

void pack_signal(std::span<std::uint8_t> payload, const SignalDef& sig, raw_int raw) {
  check_raw(sig, raw);
  const Placement where = placement(sig);
  if (payload.size() < where.needed) {
    throw RangeError("payload of " + std::to_string(payload.size()) + " bytes too short for signal '" + sig.name + "'");
  }
  const std::uint64_t mask = low_mask(sig.bit_length) << where.shift;
  const std::uint64_t bits = (static_cast<std::uint64_t>(raw) << where.shift) & mask;
  if (sig.byte_order == ByteOrder::little_endian) {
    store_le(payload, (load_le(payload) & ~mask) | bits);
  } else {
    store_be(payload, (load_be(payload) & ~mask) | bits);
  }
}

raw_int unpack_signal(std::span<const std::uint8_t> payload, const SignalDef& sig) {
  const Placement where = placement(sig);
  if (payload.size() < where.needed) {
    throw RangeError("payload of " + std::to_string(payload.size()) + " bytes too short for signal '" + sig.name + "'");
  }
  const std::uint64_t word = sig.byte_order == ByteOrder::little_endian ? load_le(payload) : load_be(payload);
  const std::uint64_t bits = (word >> where.shift) & low_mask(sig.bit_length);
  if (sig.is_signed() && sig.bit_length < 64 && (bits >> (sig.bit_length - 1)) & 1) {
    return static_cast<raw_int>(bits) - (raw_int{1} << sig.bit_length);
  }
  if (sig.is_signed() && sig.bit_length == 64) return static_cast<raw_int>(static_cast<std::int64_t>(bits));
  return static_cast<raw_int>(bits);
}

CanFrame encode_message(const DbcDatabase& db, std::string_view message, const PhysicalValueMap& values,
                        std::chrono::nanoseconds timestamp, ClampCounter* clamps) {
  const MessageDef* msg = db.find(message);
  if (!msg) throw LookupError(LookupError::Level::message, "unknown message '" + std::string(message) + "'");
  CanFrame frame;
  frame.frame_id = msg->frame_id;
  frame.extended = msg->extended;
  frame.dlc = static_cast<std::uint8_t>(msg->dlc);
  frame.timestamp = timestamp;
  std::span<std::uint8_t> payload(frame.data.data(), frame.dlc);
  ClampCounter local;
  for (const auto& [name, value] : values) {
    const SignalDef& sig = lookup_signal(db, message, name);
    pack_signal(payload, sig, phys_to_raw(sig, value, clamps ? *clamps : local));
  }
  return frame;
}

std::vector<const SignalDef*> signals_in_layout_order(const MessageDef& msg) {
  std::vector<const SignalDef*> out;
  out.reserve(msg.signals.size());
  for (const SignalDef& s : msg.signals) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(), [](const SignalDef* a, const SignalDef* b) {
    return a->start_bit != b->start_bit ? a->start_bit < b->start_bit : a->name < b->name;
  });
  return out;
}

PhysicalValueMap decode_frame(const DbcDatabase& db, const CanFrame& frame) {
  const std::uint32_t key = frame.frame_id | (frame.extended ? 0x80000000u : 0u);
  const MessageDef* msg = db.find(key);
  if (!msg) throw UnmappedFrameError("unmapped frame id " + std::to_string(frame.frame_id));
  PhysicalValueMap values;
  for (const SignalDef* sig : signals_in_layout_order(*msg)) {
    values.set(sig->name, raw_to_phys(*sig, unpack_signal(frame.payload(), *sig)));
  }
  return values;
}

}  // namespace simcan
