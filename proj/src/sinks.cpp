#include "simcan/sinks.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

#include "httplib.h"
#include "simcan/error.hpp"

namespace simcan {

namespace {

constexpr char kHex[] = "0123456789ABCDEF";
constexpr std::size_t kBatchLines = 500;

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

/// Backslash-escapes every character of `special`.
std::string escape(std::string_view text, std::string_view special) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (special.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string url_encode(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

class FileLineWriter final : public LineProtocolWriter {
 public:
  explicit FileLineWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::app | std::ios::binary) {
    if (!out_) throw Error("cannot open line-protocol file " + path.string());
  }

  void write_line(const std::string& line) override {
    out_ << line << '\n';
    if (!out_) throw Error("cannot write line-protocol file " + path_.string());
  }

  void flush() override {
    out_.flush();
    if (!out_) throw Error("cannot write line-protocol file " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class HttpLineWriter final : public LineProtocolWriter {
 public:
  HttpLineWriter(std::string base, std::string prefix, const SinkConfig& config)
      : client_(base), token_(config.influx_token) {
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    target_ = prefix + "/api/v2/write?org=" + url_encode(config.influx_org) + "&bucket=" + url_encode(config.influx_bucket) +
              "&precision=ns";
    client_.set_connection_timeout(5);
    client_.set_read_timeout(10);
  }

  void write_line(const std::string& line) override {
    batch_ += line;
    batch_ += '\n';
    if (++pending_ >= kBatchLines) flush();
  }

  void flush() override {
    if (pending_ == 0) return;
    const httplib::Headers headers{{"Authorization", "Token " + token_}};
    std::string failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto res = client_.Post(target_, headers, batch_, "text/plain; charset=utf-8");
      if (res && res->status >= 200 && res->status < 300) {
        batch_.clear();
        pending_ = 0;
        return;
      }
      failure = res ? "HTTP " + std::to_string(res->status) : "request failed: " + httplib::to_string(res.error());
    }
    throw TransportError("time-series write to " + target_ + " failed: " + failure);
  }

 private:
  httplib::Client client_;
  std::string token_;
  std::string target_;
  std::string batch_;
  std::size_t pending_ = 0;
};

}  // namespace

std::string format_number(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_console(const CanFrame& frame, std::string_view channel) {
  const std::int64_t ns = frame.timestamp.count();
  char stamp[48];
  std::snprintf(stamp, sizeof stamp, "(%lld.%06lld) ", static_cast<long long>(ns / 1'000'000'000),
                static_cast<long long>((ns % 1'000'000'000) / 1000));
  std::string out = stamp;
  out += channel;
  out += ' ';
  const int id_digits = frame.extended ? 8 : 3;
  for (int i = id_digits - 1; i >= 0; --i) out.push_back(kHex[(frame.frame_id >> (4 * i)) & 0xF]);
  out.push_back('#');
  for (std::uint8_t b : frame.payload()) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

ConsoleRecord parse_console_line(std::string_view line) {
  auto fail = [&](std::size_t pos, const std::string& what) -> ParseError {
    return ParseError("<console>", 1, pos + 1, what);
  };
  if (line.empty() || line[0] != '(') throw fail(0, "expected '('");
  const std::size_t close = line.find(')');
  const std::size_t dot = line.find('.');
  if (close == std::string_view::npos || dot == std::string_view::npos || dot > close || close - dot != 7) {
    throw fail(0, "malformed timestamp");
  }
  long long seconds = 0;
  long long micros = 0;
  auto r1 = std::from_chars(line.data() + 1, line.data() + dot, seconds);
  auto r2 = std::from_chars(line.data() + dot + 1, line.data() + close, micros);
  if (r1.ec != std::errc{} || r1.ptr != line.data() + dot || r2.ec != std::errc{} || r2.ptr != line.data() + close) {
    throw fail(1, "malformed timestamp");
  }
  if (close + 1 >= line.size() || line[close + 1] != ' ') throw fail(close + 1, "expected ' '");
  const std::size_t chan_begin = close + 2;
  const std::size_t chan_end = line.find(' ', chan_begin);
  if (chan_end == std::string_view::npos || chan_end == chan_begin) throw fail(chan_begin, "expected channel");
  const std::size_t hash = line.find('#', chan_end);
  if (hash == std::string_view::npos) throw fail(chan_end, "expected '#'");

  ConsoleRecord record;
  record.channel = line.substr(chan_begin, chan_end - chan_begin);
  const std::string_view id = line.substr(chan_end + 1, hash - chan_end - 1);
  if (id.size() != 3 && id.size() != 8) throw fail(chan_end + 1, "frame id must have 3 or 8 hex digits");
  std::uint32_t frame_id = 0;
  for (char c : id) {
    const int v = hex_value(c);
    if (v < 0) throw fail(chan_end + 1, "bad hex digit in frame id");
    frame_id = frame_id << 4 | static_cast<std::uint32_t>(v);
  }
  std::size_t data_end = line.find(' ', hash);
  if (data_end == std::string_view::npos) data_end = line.size();
  const std::string_view data = line.substr(hash + 1, data_end - hash - 1);
  if (data.size() % 2 != 0 || data.size() > 16) throw fail(hash + 1, "malformed data field");

  record.frame.frame_id = frame_id;
  record.frame.extended = id.size() == 8;
  record.frame.dlc = static_cast<std::uint8_t>(data.size() / 2);
  for (std::size_t i = 0; i < data.size(); i += 2) {
    const int hi = hex_value(data[i]);
    const int lo = hex_value(data[i + 1]);
    if (hi < 0 || lo < 0) throw fail(hash + 1 + i, "bad hex digit in data");
    record.frame.data[i / 2] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  record.frame.timestamp = std::chrono::nanoseconds{seconds * 1'000'000'000 + micros * 1000};
  return record;
}

std::string format_line_protocol(const CanFrame& frame, std::string_view message, const PhysicalValueMap& decoded,
                                 std::string_view channel) {
  if (decoded.empty()) return {};
  std::string line = "canbus,channel=" + escape(channel, ", =") + ",message=" + escape(message, ", =") + ' ';
  bool first = true;
  for (const auto& [name, value] : decoded) {
    if (!first) line += ',';
    first = false;
    line += escape(name, ", =");
    line += '=';
    line += format_number(value);
  }
  line += ' ';
  line += std::to_string(frame.timestamp.count());
  return line;
}

void SinkConfig::apply_environment(const Environment& env) {
  if (influx_bucket.empty()) return;
  if (influx_url.empty()) influx_url = env.get("INFLUXDB_URL").value_or("");
  if (influx_token.empty()) influx_token = env.get("INFLUXDB_TOKEN").value_or("");
}

Pacer::Pacer(std::int64_t bitrate) : bitrate_(bitrate) {
  if (bitrate <= 0) throw ConfigError("bitrate must be positive when pacing is enabled");
}

std::chrono::nanoseconds Pacer::gap(int dlc) const {
  // ceil(bits * 1e9 / bitrate) so that the achieved rate never exceeds nominal.
  const std::int64_t bits = frame_bits(dlc);
  return std::chrono::nanoseconds{(bits * 1'000'000'000 + bitrate_ - 1) / bitrate_};
}

void Pacer::acquire(int dlc) {
  using clock = std::chrono::steady_clock;
  if (free_at_) {
    const auto target = *free_at_;
    const auto coarse = target - std::chrono::microseconds(200);
    if (clock::now() < coarse) std::this_thread::sleep_until(coarse);
    while (clock::now() < target) {
    }
  }
  free_at_ = clock::now() + gap(dlc);
}

ConsoleSink::ConsoleSink(std::unique_ptr<FrameSink> inner, std::ostream& out, std::string label)
    : SinkLayer(std::move(inner)), out_(out), label_(std::move(label)) {}

void ConsoleSink::write(const CanFrame& frame, std::uint64_t) { out_ << format_console(frame, label_) << '\n'; }

ChannelSink::ChannelSink(std::unique_ptr<FrameSink> inner, std::unique_ptr<ChannelSender> sender,
                         std::optional<Pacer> pacer)
    : SinkLayer(std::move(inner)), sender_(std::move(sender)), pacer_(std::move(pacer)) {}

void ChannelSink::write(const CanFrame& frame, std::uint64_t sequence) {
  if (pacer_) pacer_->acquire(frame.dlc);
  try {
    sender_->send(frame);
  } catch (const TransportError& e) {
    throw TransportError("frame id " + std::to_string(frame.frame_id) + " (sequence " + std::to_string(sequence) +
                         "): " + e.what());
  }
}

std::unique_ptr<LineProtocolWriter> open_line_protocol_writer(const SinkConfig& config) {
  const std::string& url = config.influx_url;
  if (url.starts_with("file:")) {
    std::string path = url.substr(5);
    if (path.starts_with("//")) path = path.substr(2);
    if (path.empty()) throw ConfigError("INFLUXDB_URL file: target lacks a path");
    return std::make_unique<FileLineWriter>(path);
  }
  if (url.starts_with("http://")) {
    const std::size_t path_start = url.find('/', 7);
    const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
    return std::make_unique<HttpLineWriter>(base, prefix, config);
  }
  if (url.starts_with("https://")) throw ConfigError("INFLUXDB_URL: https is not supported by this build; use http:// or file:");
  throw ConfigError("INFLUXDB_URL '" + url + "' must start with http:// or file:");
}

LineProtocolSink::LineProtocolSink(std::unique_ptr<FrameSink> inner, const DbcDatabase& db,
                                   std::unique_ptr<LineProtocolWriter> writer, std::string label)
    : SinkLayer(std::move(inner)), db_(db), writer_(std::move(writer)), label_(std::move(label)) {}

LineProtocolSink::~LineProtocolSink() {
  try {
    writer_->flush();
  } catch (...) {
  }
}

void LineProtocolSink::flush() {
  writer_->flush();
  SinkLayer::flush();
}

void LineProtocolSink::write(const CanFrame& frame, std::uint64_t) {
  const MessageDef* msg = db_.find(frame.frame_id | (frame.extended ? 0x80000000u : 0u));
  if (!msg) return;
  const std::string line = format_line_protocol(frame, msg->name, decode_frame(db_, frame), label_);
  if (!line.empty()) writer_->write_line(line);
}

std::unique_ptr<FrameSink> open_sink_stack(const SinkConfig& config, const DbcDatabase& db, std::ostream& console) {
  const std::string label = config.channel_label.empty() ? config.channel : config.channel_label;
  std::unique_ptr<FrameSink> stack = std::make_unique<NullSink>();
  if (!config.influx_bucket.empty()) {
    if (config.influx_token.empty()) throw ConfigError("time-series output requested but INFLUXDB_TOKEN is not set");
    if (config.influx_url.empty()) throw ConfigError("time-series output requested but INFLUXDB_URL is not set");
    stack = std::make_unique<LineProtocolSink>(std::move(stack), db, open_line_protocol_writer(config), label);
  }
  if (!config.channel.empty()) {
    std::optional<Pacer> pacer;
    if (config.pacing) pacer.emplace(config.bitrate);
    stack = std::make_unique<ChannelSink>(std::move(stack), open_sender(parse_channel(config.channel)), std::move(pacer));
  }
  if (config.stdout_enabled) stack = std::make_unique<ConsoleSink>(std::move(stack), console, label);
  return stack;
}

}  // namespace simcan
