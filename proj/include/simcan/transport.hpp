#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "simcan/codec.hpp"

namespace simcan {

/// Parsed transport descriptor: `inproc:<name>`, `udp:<host>:<port>` or
/// `socketcan:<ifname>`.
struct ChannelDescriptor {
  enum class Scheme { inproc, udp, socketcan };

  Scheme scheme = Scheme::inproc;
  std::string name;  ///< inproc bus name, udp host or socketcan interface
  std::uint16_t port = 0;

  std::string to_string() const;
};

/// Throws ConfigError for unknown schemes or malformed descriptors.
ChannelDescriptor parse_channel(std::string_view descriptor);

class ChannelSender {
 public:
  virtual ~ChannelSender() = default;
  /// One datagram per frame. Throws TransportError on write failure.
  virtual void send(const CanFrame& frame) = 0;
};

class ChannelReceiver {
 public:
  virtual ~ChannelReceiver() = default;
  /// Next frame in arrival order, or nullopt when `timeout` elapses first.
  /// Throws TransportError for malformed datagrams; the receiver stays usable.
  virtual std::optional<CanFrame> recv(std::chrono::milliseconds timeout) = 0;
  /// Bound UDP port (useful with port 0); 0 for other schemes.
  virtual std::uint16_t local_port() const { return 0; }
};

/// Throws TransportError when the channel cannot be opened (bind/connect
/// failure, socketcan unavailable on this platform).
std::unique_ptr<ChannelSender> open_sender(const ChannelDescriptor& channel);
std::unique_ptr<ChannelReceiver> open_receiver(const ChannelDescriptor& channel);

/// Publishes raw bytes on an in-process bus, bypassing serialization.
void inproc_publish_bytes(std::string_view bus, std::span<const std::uint8_t> bytes);

/// Whether socketcan support was compiled in.
bool socketcan_available();

}  // namespace simcan
