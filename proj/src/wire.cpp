#include "simcan/wire.hpp"

#include <algorithm>
#include <string>

#include "simcan/error.hpp"

namespace simcan::wire {

namespace {

void put_be(std::uint8_t* out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out[i] = static_cast<std::uint8_t>(value >> (8 * (bytes - 1 - i)));
}

std::uint64_t get_be(const std::uint8_t* in, int bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < bytes; ++i) value = (value << 8) | in[i];
  return value;
}

}  // namespace

Datagram serialize(const CanFrame& frame) {
  Datagram out{};
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  put_be(&out[4], frame.frame_id, 4);
  out[8] = frame.dlc;
  out[9] = frame.extended ? kFlagExtended : 0;
  std::copy_n(frame.data.begin(), std::min<std::size_t>(frame.dlc, 8), out.begin() + 12);
  put_be(&out[20], static_cast<std::uint64_t>(frame.timestamp.count()), 8);
  return out;
}

CanFrame deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDatagramSize) {
    throw TransportError("short datagram: " + std::to_string(bytes.size()) + " bytes, expected " +
                         std::to_string(kDatagramSize));
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw TransportError("bad datagram magic");
  if (bytes[10] != 0 || bytes[11] != 0) throw TransportError("nonzero reserved bytes in datagram");
  CanFrame frame;
  frame.frame_id = static_cast<std::uint32_t>(get_be(&bytes[4], 4));
  frame.dlc = bytes[8];
  if (frame.dlc > 8) throw TransportError("datagram dlc " + std::to_string(frame.dlc) + " exceeds 8");
  frame.extended = (bytes[9] & kFlagExtended) != 0;
  std::copy_n(bytes.begin() + 12, frame.dlc, frame.data.begin());
  frame.timestamp = std::chrono::nanoseconds{static_cast<std::int64_t>(get_be(&bytes[20], 8))};
  return frame;
}

}  // namespace simcan::wire
