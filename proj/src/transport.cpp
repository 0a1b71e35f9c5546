#include "simcan/transport.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <vector>

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#if __has_include(<linux/can.h>)
#include <linux/can.h>
#include <linux/can/raw.h>
#include <net/if.h>
#include <sys/ioctl.h>
#define SIMCAN_HAVE_SOCKETCAN 1
#endif

#include "simcan/error.hpp"
#include "simcan/wire.hpp"

namespace simcan {

namespace {

std::string errno_text() { return std::strerror(errno); }

/// Owned file descriptor.
class Socket {
 public:
  explicit Socket(int fd = -1) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }

 private:
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_;
};

/// Waits until `fd` is readable; false on timeout.
bool wait_readable(int fd, std::chrono::milliseconds timeout) {
  pollfd pfd{fd, POLLIN, 0};
  while (true) {
    const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw TransportError("poll failed: " + errno_text());
  }
}

// ---------------------------------------------------------------- inproc

using Bytes = std::vector<std::uint8_t>;

struct InprocQueue {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<Bytes> items;
};

class InprocBus {
 public:
  void publish(std::span<const std::uint8_t> bytes) {
    std::lock_guard lock(mutex_);
    auto it = subscribers_.begin();
    while (it != subscribers_.end()) {
      if (auto queue = it->lock()) {
        {
          std::lock_guard qlock(queue->mutex);
          queue->items.emplace_back(bytes.begin(), bytes.end());
        }
        queue->ready.notify_one();
        ++it;
      } else {
        it = subscribers_.erase(it);
      }
    }
  }

  std::shared_ptr<InprocQueue> subscribe() {
    auto queue = std::make_shared<InprocQueue>();
    std::lock_guard lock(mutex_);
    subscribers_.push_back(queue);
    return queue;
  }

 private:
  std::mutex mutex_;
  std::vector<std::weak_ptr<InprocQueue>> subscribers_;
};

std::shared_ptr<InprocBus> inproc_bus(std::string_view name) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::shared_ptr<InprocBus>, std::less<>> registry;
  std::lock_guard lock(registry_mutex);
  auto it = registry.find(name);
  if (it == registry.end()) it = registry.emplace(std::string(name), std::make_shared<InprocBus>()).first;
  return it->second;
}

class InprocSender final : public ChannelSender {
 public:
  explicit InprocSender(std::shared_ptr<InprocBus> bus) : bus_(std::move(bus)) {}
  void send(const CanFrame& frame) override {
    const wire::Datagram datagram = wire::serialize(frame);
    bus_->publish(datagram);
  }

 private:
  std::shared_ptr<InprocBus> bus_;
};

class InprocReceiver final : public ChannelReceiver {
 public:
  explicit InprocReceiver(const std::shared_ptr<InprocBus>& bus) : queue_(bus->subscribe()) {}

  std::optional<CanFrame> recv(std::chrono::milliseconds timeout) override {
    std::unique_lock lock(queue_->mutex);
    if (!queue_->ready.wait_for(lock, timeout, [&] { return !queue_->items.empty(); })) return std::nullopt;
    Bytes bytes = std::move(queue_->items.front());
    queue_->items.pop_front();
    lock.unlock();
    return wire::deserialize(bytes);
  }

 private:
  std::shared_ptr<InprocQueue> queue_;
};

// ---------------------------------------------------------------- udp

sockaddr_storage resolve(const ChannelDescriptor& ch, socklen_t& length) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(ch.port);
  if (const int rc = ::getaddrinfo(ch.name.c_str(), port.c_str(), &hints, &result); rc != 0) {
    throw TransportError("cannot resolve " + ch.to_string() + ": " + ::gai_strerror(rc));
  }
  sockaddr_storage addr{};
  std::memcpy(&addr, result->ai_addr, result->ai_addrlen);
  length = result->ai_addrlen;
  ::freeaddrinfo(result);
  return addr;
}

class UdpSender final : public ChannelSender {
 public:
  explicit UdpSender(const ChannelDescriptor& ch) : descriptor_(ch.to_string()) {
    socklen_t length = 0;
    const sockaddr_storage addr = resolve(ch, length);
    socket_ = Socket(::socket(addr.ss_family, SOCK_DGRAM, 0));
    if (!socket_) throw TransportError("cannot create socket for " + descriptor_ + ": " + errno_text());
    if (::connect(socket_.get(), reinterpret_cast<const sockaddr*>(&addr), length) != 0) {
      throw TransportError("cannot connect " + descriptor_ + ": " + errno_text());
    }
  }

  void send(const CanFrame& frame) override {
    const wire::Datagram datagram = wire::serialize(frame);
    while (true) {
      const ssize_t n = ::send(socket_.get(), datagram.data(), datagram.size(), 0);
      if (n == static_cast<ssize_t>(datagram.size())) return;
      // A previous datagram to a closed port reports ECONNREFUSED here; the
      // bus has no receiver then, which is not an error for a broadcast medium.
      if (n < 0 && (errno == EINTR || errno == ECONNREFUSED)) continue;
      throw TransportError("send on " + descriptor_ + " failed: " + errno_text());
    }
  }

 private:
  std::string descriptor_;
  Socket socket_;
};

class UdpReceiver final : public ChannelReceiver {
 public:
  explicit UdpReceiver(const ChannelDescriptor& ch) : descriptor_(ch.to_string()) {
    socklen_t length = 0;
    const sockaddr_storage addr = resolve(ch, length);
    socket_ = Socket(::socket(addr.ss_family, SOCK_DGRAM, 0));
    if (!socket_) throw TransportError("cannot create socket for " + descriptor_ + ": " + errno_text());
    const int buffer = 4 * 1024 * 1024;
    ::setsockopt(socket_.get(), SOL_SOCKET, SO_RCVBUF, &buffer, sizeof buffer);
    if (::bind(socket_.get(), reinterpret_cast<const sockaddr*>(&addr), length) != 0) {
      throw TransportError("cannot bind " + descriptor_ + ": " + errno_text());
    }
    sockaddr_storage bound{};
    socklen_t bound_len = sizeof bound;
    ::getsockname(socket_.get(), reinterpret_cast<sockaddr*>(&bound), &bound_len);
    port_ = ntohs(bound.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                                               : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  }

  std::optional<CanFrame> recv(std::chrono::milliseconds timeout) override {
    if (!wait_readable(socket_.get(), timeout)) return std::nullopt;
    std::array<std::uint8_t, 512> buffer{};
    const ssize_t n = ::recv(socket_.get(), buffer.data(), buffer.size(), 0);
    if (n < 0) throw TransportError("recv on " + descriptor_ + " failed: " + errno_text());
    return wire::deserialize(std::span<const std::uint8_t>(buffer.data(), static_cast<std::size_t>(n)));
  }

  std::uint16_t local_port() const override { return port_; }

 private:
  std::string descriptor_;
  Socket socket_;
  std::uint16_t port_ = 0;
};

// ---------------------------------------------------------------- socketcan

#ifdef SIMCAN_HAVE_SOCKETCAN
Socket open_can_socket(const ChannelDescriptor& ch) {
  Socket sock(::socket(PF_CAN, SOCK_RAW, CAN_RAW));
  if (!sock) throw TransportError("socketcan unavailable: " + errno_text());
  ifreq ifr{};
  if (ch.name.size() >= sizeof ifr.ifr_name) throw TransportError("socketcan interface name too long: " + ch.name);
  std::strncpy(ifr.ifr_name, ch.name.c_str(), sizeof ifr.ifr_name - 1);
  if (::ioctl(sock.get(), SIOCGIFINDEX, &ifr) != 0) {
    throw TransportError("socketcan interface " + ch.name + " not found: " + errno_text());
  }
  sockaddr_can addr{};
  addr.can_family = AF_CAN;
  addr.can_ifindex = ifr.ifr_ifindex;
  if (::bind(sock.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw TransportError("cannot bind socketcan " + ch.name + ": " + errno_text());
  }
  return sock;
}

class SocketCanSender final : public ChannelSender {
 public:
  explicit SocketCanSender(const ChannelDescriptor& ch) : socket_(open_can_socket(ch)), name_(ch.name) {}

  void send(const CanFrame& frame) override {
    can_frame out{};
    out.can_id = frame.frame_id | (frame.extended ? CAN_EFF_FLAG : 0u);
    out.can_dlc = frame.dlc;
    std::copy_n(frame.data.begin(), frame.dlc, out.data);
    if (::write(socket_.get(), &out, sizeof out) != static_cast<ssize_t>(sizeof out)) {
      throw TransportError("socketcan write on " + name_ + " failed: " + errno_text());
    }
  }

 private:
  Socket socket_;
  std::string name_;
};

class SocketCanReceiver final : public ChannelReceiver {
 public:
  explicit SocketCanReceiver(const ChannelDescriptor& ch)
      : socket_(open_can_socket(ch)), name_(ch.name), start_(std::chrono::steady_clock::now()) {}

  std::optional<CanFrame> recv(std::chrono::milliseconds timeout) override {
    if (!wait_readable(socket_.get(), timeout)) return std::nullopt;
    can_frame in{};
    const ssize_t n = ::read(socket_.get(), &in, sizeof in);
    if (n != static_cast<ssize_t>(sizeof in)) throw TransportError("short socketcan read on " + name_);
    CanFrame frame;
    frame.extended = (in.can_id & CAN_EFF_FLAG) != 0;
    frame.frame_id = in.can_id & (frame.extended ? CAN_EFF_MASK : CAN_SFF_MASK);
    frame.dlc = std::min<std::uint8_t>(in.can_dlc, 8);
    std::copy_n(in.data, frame.dlc, frame.data.begin());
    frame.timestamp = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_);
    return frame;
  }

 private:
  Socket socket_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};
#endif

}  // namespace

std::string ChannelDescriptor::to_string() const {
  switch (scheme) {
    case Scheme::inproc: return "inproc:" + name;
    case Scheme::udp: return "udp:" + name + ":" + std::to_string(port);
    case Scheme::socketcan: return "socketcan:" + name;
  }
  return {};
}

ChannelDescriptor parse_channel(std::string_view descriptor) {
  const std::size_t colon = descriptor.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("channel descriptor '" + std::string(descriptor) + "' lacks a scheme (inproc:, udp:, socketcan:)");
  }
  const std::string_view scheme = descriptor.substr(0, colon);
  const std::string_view rest = descriptor.substr(colon + 1);
  ChannelDescriptor ch;
  if (scheme == "inproc" || scheme == "socketcan") {
    if (rest.empty()) throw ConfigError("channel descriptor '" + std::string(descriptor) + "' lacks a name");
    ch.scheme = scheme == "inproc" ? ChannelDescriptor::Scheme::inproc : ChannelDescriptor::Scheme::socketcan;
    ch.name = rest;
    return ch;
  }
  if (scheme == "udp") {
    const std::size_t port_colon = rest.rfind(':');
    if (port_colon == std::string_view::npos || port_colon == 0) {
      throw ConfigError("udp descriptor '" + std::string(descriptor) + "' must be udp:<host>:<port>");
    }
    std::string_view host = rest.substr(0, port_colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    const std::string_view port = rest.substr(port_colon + 1);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) {
      throw ConfigError("udp descriptor '" + std::string(descriptor) + "' has an invalid port");
    }
    ch.scheme = ChannelDescriptor::Scheme::udp;
    ch.name = host;
    ch.port = static_cast<std::uint16_t>(value);
    return ch;
  }
  throw ConfigError("unknown channel scheme '" + std::string(scheme) + "'");
}

std::unique_ptr<ChannelSender> open_sender(const ChannelDescriptor& channel) {
  switch (channel.scheme) {
    case ChannelDescriptor::Scheme::inproc: return std::make_unique<InprocSender>(inproc_bus(channel.name));
    case ChannelDescriptor::Scheme::udp: return std::make_unique<UdpSender>(channel);
    case ChannelDescriptor::Scheme::socketcan:
#ifdef SIMCAN_HAVE_SOCKETCAN
      return std::make_unique<SocketCanSender>(channel);
#else
      throw TransportError("socketcan is not supported on this platform");
#endif
  }
  throw TransportError("unsupported channel");
}

std::unique_ptr<ChannelReceiver> open_receiver(const ChannelDescriptor& channel) {
  switch (channel.scheme) {
    case ChannelDescriptor::Scheme::inproc: return std::make_unique<InprocReceiver>(inproc_bus(channel.name));
    case ChannelDescriptor::Scheme::udp: return std::make_unique<UdpReceiver>(channel);
    case ChannelDescriptor::Scheme::socketcan:
#ifdef SIMCAN_HAVE_SOCKETCAN
      return std::make_unique<SocketCanReceiver>(channel);
#else
      throw TransportError("socketcan is not supported on this platform");
#endif
  }
  throw TransportError("unsupported channel");
}

void inproc_publish_bytes(std::string_view bus, std::span<const std::uint8_t> bytes) { inproc_bus(bus)->publish(bytes); }

bool socketcan_available() {
#ifdef SIMCAN_HAVE_SOCKETCAN
  return true;
#else
  return false;
#endif
}

}  // namespace simcan
