#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simcan/codec.hpp"
#include "simcan/dbc.hpp"
#include "simcan/env.hpp"
#include "simcan/transport.hpp"

namespace simcan {

// ------------------------------------------------------------------ formats

/// candump-style line: `(1.500000) vcan0 0B1#0000F401`.
std::string format_console(const CanFrame& frame, std::string_view channel);

struct ConsoleRecord {
  std::string channel;
  CanFrame frame;
};

/// Inverse of format_console (microsecond timestamp resolution). Trailing
/// text after the data field is ignored. Throws ParseError when malformed.
ConsoleRecord parse_console_line(std::string_view line);

/// One line-protocol record `canbus,channel=..,message=.. sig=value,... ns`;
/// empty string when `decoded` is empty.
std::string format_line_protocol(const CanFrame& frame, std::string_view message, const PhysicalValueMap& decoded,
                                 std::string_view channel);

/// Shortest text that parses back to the same double.
std::string format_number(double value);

/// Bits on the wire for a classic base frame, stuffing ignored.
constexpr int frame_bits(int dlc) { return 47 + 8 * dlc; }

// ------------------------------------------------------------------ config

struct SinkConfig {
  bool stdout_enabled = false;
  std::string channel;        ///< transport descriptor; empty disables the channel layer
  std::string channel_label;  ///< name printed in console lines and line-protocol tags
  std::int64_t bitrate = 250000;
  bool pacing = false;
  std::string influx_bucket;  ///< empty disables the time-series layer
  std::string influx_org;
  std::string influx_url;     ///< INFLUXDB_URL
  std::string influx_token;   ///< INFLUXDB_TOKEN

  /// Fills influx_url / influx_token from `env` when the time-series layer is
  /// enabled and they are not set yet.
  void apply_environment(const Environment& env);
};

// ------------------------------------------------------------------ sinks

/// Frame consumer. Stacks are built from layers, each forwarding to the
/// layer it wraps after doing its own output.
class FrameSink {
 public:
  virtual ~FrameSink() = default;
  virtual void emit(const CanFrame& frame) = 0;
  virtual void flush() {}
  /// Number of output layers in this stack.
  virtual std::size_t depth() const = 0;
};

/// Stack terminator.
class NullSink final : public FrameSink {
 public:
  void emit(const CanFrame&) override {}
  std::size_t depth() const override { return 0; }
};

class SinkLayer : public FrameSink {
 public:
  explicit SinkLayer(std::unique_ptr<FrameSink> inner) : inner_(std::move(inner)) {}

  void emit(const CanFrame& frame) final {
    write(frame, sequence_);
    ++sequence_;
    inner_->emit(frame);
  }
  void flush() override { inner_->flush(); }
  std::size_t depth() const override { return 1 + inner_->depth(); }

 protected:
  virtual void write(const CanFrame& frame, std::uint64_t sequence) = 0;

 private:
  std::unique_ptr<FrameSink> inner_;
  std::uint64_t sequence_ = 0;
};

/// Enforces the nominal bus occupancy between consecutive frames.
class Pacer {
 public:
  explicit Pacer(std::int64_t bitrate);

  /// Blocks until the bus is free, then books it for `dlc`'s frame time.
  void acquire(int dlc);
  std::chrono::nanoseconds gap(int dlc) const;

 private:
  std::int64_t bitrate_;
  std::optional<std::chrono::steady_clock::time_point> free_at_;
};

class ConsoleSink final : public SinkLayer {
 public:
  ConsoleSink(std::unique_ptr<FrameSink> inner, std::ostream& out, std::string label);

 protected:
  void write(const CanFrame& frame, std::uint64_t sequence) override;

 private:
  std::ostream& out_;
  std::string label_;
};

class ChannelSink final : public SinkLayer {
 public:
  ChannelSink(std::unique_ptr<FrameSink> inner, std::unique_ptr<ChannelSender> sender, std::optional<Pacer> pacer);

 protected:
  void write(const CanFrame& frame, std::uint64_t sequence) override;

 private:
  std::unique_ptr<ChannelSender> sender_;
  std::optional<Pacer> pacer_;
};

/// Destination of line-protocol records: HTTP write endpoint or local file.
class LineProtocolWriter {
 public:
  virtual ~LineProtocolWriter() = default;
  virtual void write_line(const std::string& line) = 0;
  virtual void flush() = 0;
};

/// `http://host[:port][/prefix]` posts batches to
/// `{url}/api/v2/write?org={org}&bucket={bucket}`; `file:<path>` appends.
/// Throws ConfigError for unsupported URLs.
std::unique_ptr<LineProtocolWriter> open_line_protocol_writer(const SinkConfig& config);

class LineProtocolSink final : public SinkLayer {
 public:
  LineProtocolSink(std::unique_ptr<FrameSink> inner, const DbcDatabase& db, std::unique_ptr<LineProtocolWriter> writer,
                   std::string label);
  ~LineProtocolSink() override;

  void flush() override;

 protected:
  void write(const CanFrame& frame, std::uint64_t sequence) override;

 private:
  const DbcDatabase& db_;
  std::unique_ptr<LineProtocolWriter> writer_;
  std::string label_;
};

/// Builds stdout -> channel -> time-series, skipping disabled layers.
/// Throws ConfigError (missing INFLUXDB_TOKEN / INFLUXDB_URL) or
/// TransportError (channel cannot be opened).
std::unique_ptr<FrameSink> open_sink_stack(const SinkConfig& config, const DbcDatabase& db, std::ostream& console);

}  // namespace simcan
