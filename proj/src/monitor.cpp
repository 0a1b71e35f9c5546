#include "simcan/monitor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "simcan/error.hpp"
#include "simcan/sinks.hpp"

namespace simcan {

namespace {

double parse_number(std::string_view text, std::string_view whole) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("malformed expectation '" + std::string(whole) + "': bad number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Expectation parse_expectation(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t colon = text.find(':', begin);
    parts.push_back(text.substr(begin, colon == std::string_view::npos ? std::string_view::npos : colon - begin));
    if (colon == std::string_view::npos) break;
    begin = colon + 1;
  }
  if (parts.size() != 4) {
    throw ConfigError("malformed expectation '" + std::string(text) + "': expected message.signal:min:max:count");
  }
  const std::size_t dot = parts[0].find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == parts[0].size()) {
    throw ConfigError("malformed expectation '" + std::string(text) + "': expected message.signal");
  }
  Expectation e;
  e.message = parts[0].substr(0, dot);
  e.signal = parts[0].substr(dot + 1);
  e.min = parse_number(parts[1], text);
  e.max = parse_number(parts[2], text);
  if (e.max < e.min) throw ConfigError("malformed expectation '" + std::string(text) + "': min exceeds max");
  std::size_t count = 0;
  auto [ptr, ec] = std::from_chars(parts[3].data(), parts[3].data() + parts[3].size(), count);
  if (parts[3].empty() || ec != std::errc{} || ptr != parts[3].data() + parts[3].size()) {
    throw ConfigError("malformed expectation '" + std::string(text) + "': bad count");
  }
  e.min_count = count;
  return e;
}

void validate_expectations(const DbcDatabase& db, const std::vector<Expectation>& expectations) {
  for (const Expectation& e : expectations) {
    try {
      lookup_signal(db, e.message, e.signal);
    } catch (const LookupError& err) {
      throw ConfigError("expectation on " + e.message + "." + e.signal + ": " + err.what());
    }
  }
}

Verdict check_expectations(const DbcDatabase& db, const std::vector<Expectation>& expectations,
                           const std::vector<ObservedValue>& observed) {
  validate_expectations(db, expectations);
  Verdict verdict;
  for (const Expectation& e : expectations) {
    ExpectationOutcome outcome{e, 0, false};
    for (const ObservedValue& v : observed) {
      if (v.message == e.message && v.signal == e.signal && v.value >= e.min && v.value <= e.max) ++outcome.in_range;
    }
    outcome.passed = outcome.in_range >= e.min_count;
    verdict.passed = verdict.passed && outcome.passed;
    verdict.outcomes.push_back(std::move(outcome));
  }
  return verdict;
}

std::string format_signal_value(const SignalDef& sig, double value) {
  const int decimals = std::max({1, sig.factor.scale(), sig.offset.scale()});
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

Monitor::Monitor(const DbcDatabase& db, std::string channel_label, std::vector<Expectation> expectations)
    : db_(db), label_(std::move(channel_label)), expectations_(std::move(expectations)) {
  validate_expectations(db_, expectations_);
}

std::string Monitor::on_frame(const CanFrame& frame) {
  ++frames_;
  std::string line = format_console(frame, label_);
  const MessageDef* msg = db_.find(frame.frame_id | (frame.extended ? 0x80000000u : 0u));
  if (!msg) {
    ++unmapped_;
    return line + " | unmapped";
  }
  PhysicalValueMap values;
  try {
    values = decode_frame(db_, frame);
  } catch (const Error& e) {
    ++decode_errors_;
    return line + " | decode error: " + e.what();
  }
  line += " |";
  for (const auto& [name, value] : values) {
    const SignalDef& sig = *msg->find_signal(name);
    line += ' ' + msg->name + '.' + name + '=' + format_signal_value(sig, value);
    if (!sig.unit.empty()) line += ' ' + sig.unit;
    observed_.push_back({msg->name, name, value});
  }
  return line;
}

Verdict Monitor::verdict() const { return check_expectations(db_, expectations_, observed_); }

int run_monitor(ChannelReceiver& receiver, const DbcDatabase& db, const MonitorOptions& options, std::ostream& out,
                std::ostream& log) {
  std::vector<Expectation> expectations;
  try {
    for (const std::string& text : options.expectations) expectations.push_back(parse_expectation(text));
    validate_expectations(db, expectations);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kMonitorError;
  }

  Monitor monitor(db, options.channel, expectations);
  while (!options.max_frames || monitor.frames() < *options.max_frames) {
    std::optional<CanFrame> frame;
    try {
      frame = receiver.recv(options.idle_timeout);
    } catch (const TransportError& e) {
      monitor.on_malformed();
      log << "warning: " << e.what() << '\n';
      continue;
    }
    if (!frame) break;
    out << monitor.on_frame(*frame) << '\n';
  }
  out.flush();

  log << "frames: " << monitor.frames() << ", unmapped: " << monitor.unmapped()
      << ", decode errors: " << monitor.decode_errors() << ", malformed: " << monitor.malformed() << '\n';
  if (monitor.frames() == 0) {
    log << "no traffic\n";
    return kMonitorNoTraffic;
  }
  const Verdict verdict = monitor.verdict();
  for (const ExpectationOutcome& o : verdict.outcomes) {
    log << (o.passed ? "PASS " : "FAIL ") << o.expectation.message << '.' << o.expectation.signal << " in ["
        << o.expectation.min << ", " << o.expectation.max << "]: " << o.in_range << "/" << o.expectation.min_count << '\n';
  }
  return verdict.passed ? kMonitorOk : kMonitorExpectationFailed;
}

int run_monitor(const MonitorOptions& options, std::ostream& out, std::ostream& log) {
  try {
    const DbcDatabase db = load_dbc(options.dbc_path);
    auto receiver = open_receiver(parse_channel(options.channel));
    log << "listening on " << options.channel << '\n';
    log.flush();
    return run_monitor(*receiver, db, options, out, log);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kMonitorError;
  }
}

}  // namespace simcan
