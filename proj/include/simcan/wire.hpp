#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "simcan/codec.hpp"

namespace simcan::wire {

/// Datagram layout (all integers big-endian):
///
///   offset  size  field
///        0     4  magic "CAN1" (43 41 4E 31)
///        4     4  frame id
///        8     1  dlc
///        9     1  flags (bit 0: extended id)
///       10     2  reserved, zero
///       12     8  data, zero padded
///       20     8  timestamp, nanoseconds
inline constexpr std::size_t kDatagramSize = 28;
inline constexpr std::array<std::uint8_t, 4> kMagic{0x43, 0x41, 0x4E, 0x31};
inline constexpr std::uint8_t kFlagExtended = 0x01;

using Datagram = std::array<std::uint8_t, kDatagramSize>;

Datagram serialize(const CanFrame& frame);

/// Throws TransportError on short datagrams, bad magic, dlc > 8 or nonzero
/// reserved bytes.
CanFrame deserialize(std::span<const std::uint8_t> bytes);

}  // namespace simcan::wire
