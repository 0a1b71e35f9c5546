#include "simcan/dbc.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "simcan/error.hpp"

namespace simcan {

namespace {

constexpr std::uint32_t kExtendedFlag = 0x80000000u;
constexpr std::uint32_t kMaxStandardId = 0x7FF;
constexpr std::uint32_t kMaxExtendedId = 0x1FFFFFFF;

std::string squote(std::string_view s) { return "'" + std::string(s) + "'"; }

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Cursor over one line of DBC text; columns are 1-based.
class LineCursor {
 public:
  LineCursor(std::string_view line, std::size_t line_no, const std::string& source)
      : line_(line), line_no_(line_no), source_(source) {}

  void skip_ws() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= line_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < line_.size() ? line_[pos_] : '\0';
  }

  std::size_t column() const { return pos_ + 1; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, column(), what); }

  void expect(char c) {
    skip_ws();
    if (pos_ >= line_.size() || line_[pos_] != c) {
      fail(std::string("expected '") + c + "'" + (pos_ < line_.size() ? std::string(", found '") + line_[pos_] + "'" : ", found end of line"));
    }
    ++pos_;
  }

  /// Same as expect() but without skipping whitespace first.
  void expect_here(char c) {
    if (pos_ >= line_.size() || line_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier(const char* what) {
    skip_ws();
    const std::size_t begin = pos_;
    while (pos_ < line_.size() && is_ident_char(line_[pos_])) ++pos_;
    if (begin == pos_) fail(std::string("expected ") + what);
    if (std::isdigit(static_cast<unsigned char>(line_[begin]))) {
      pos_ = begin;
      fail(std::string("expected ") + what + ", identifiers must not start with a digit");
    }
    return std::string(line_.substr(begin, pos_ - begin));
  }

  template <typename Int>
  Int integer(const char* what, bool skip = true) {
    if (skip) skip_ws();
    const std::size_t begin = pos_;
    Int value{};
    auto [ptr, ec] = std::from_chars(line_.data() + pos_, line_.data() + line_.size(), value);
    if (ec != std::errc{} || ptr == line_.data() + begin) fail(std::string("expected integer ") + what);
    pos_ = static_cast<std::size_t>(ptr - line_.data());
    return value;
  }

  Decimal decimal(const char* what) {
    skip_ws();
    const std::size_t begin = pos_;
    while (pos_ < line_.size() &&
           (std::isdigit(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '.' || line_[pos_] == '-' ||
            line_[pos_] == '+' || line_[pos_] == 'e' || line_[pos_] == 'E')) {
      ++pos_;
    }
    auto parsed = Decimal::parse(line_.substr(begin, pos_ - begin));
    if (!parsed) {
      pos_ = begin;
      fail(std::string("expected number ") + what);
    }
    return *parsed;
  }

  std::string quoted_string() {
    skip_ws();
    expect_here('"');
    const std::size_t open = pos_ - 1;
    const std::size_t close = line_.find('"', pos_);
    if (close == std::string_view::npos) {
      pos_ = open;
      fail("unterminated string");
    }
    std::string out(line_.substr(pos_, close - pos_));
    pos_ = close + 1;
    return out;
  }

  std::vector<std::string> receivers() {
    std::vector<std::string> out;
    while (!at_end()) {
      out.push_back(identifier("receiver"));
      if (peek() == ',') expect(',');
    }
    return out;
  }

 private:
  std::string_view line_;
  std::size_t line_no_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

std::string_view first_token(std::string_view line) {
  std::size_t b = line.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  std::size_t e = line.find_first_of(" \t", b);
  return line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b);
}

std::uint64_t signal_mask(const SignalDef& sig) {
  std::uint64_t mask = 0;
  for (int p : signal_bit_positions(sig)) {
    if (p >= 0 && p < 64) mask |= std::uint64_t{1} << p;
  }
  return mask;
}

void validate_message_header(const MessageDef& msg) {
  if (msg.dlc < 0 || msg.dlc > 8) {
    throw SemanticError("message " + squote(msg.name) + ": dlc " + std::to_string(msg.dlc) + " outside 0..8");
  }
  const std::uint32_t limit = msg.extended ? kMaxExtendedId : kMaxStandardId;
  if (msg.frame_id > limit) {
    throw SemanticError("message " + squote(msg.name) + ": frame id " + std::to_string(msg.frame_id) + " exceeds " +
                        (msg.extended ? "29" : "11") + "-bit range");
  }
}

/// Checks `sig` against the signals already accepted in `msg`.
void validate_against_siblings(const MessageDef& msg, const SignalDef& sig, std::size_t count) {
  const std::uint64_t mask = signal_mask(sig);
  for (std::size_t i = 0; i < count; ++i) {
    const SignalDef& other = msg.signals[i];
    if (other.name == sig.name) {
      throw SemanticError("message " + squote(msg.name) + ": duplicate signal " + squote(sig.name));
    }
    if (signal_mask(other) & mask) {
      throw SemanticError("message " + squote(msg.name) + ": signal " + squote(sig.name) + " overlaps signal " +
                          squote(other.name));
    }
  }
}

}  // namespace

const SignalDef* MessageDef::find_signal(std::string_view signal) const {
  auto it = std::find_if(signals.begin(), signals.end(), [&](const SignalDef& s) { return s.name == signal; });
  return it == signals.end() ? nullptr : &*it;
}

std::vector<int> signal_bit_positions(const SignalDef& sig) {
  std::vector<int> positions;
  positions.reserve(static_cast<std::size_t>(std::max(sig.bit_length, 0)));
  if (sig.byte_order == ByteOrder::little_endian) {
    for (int i = sig.bit_length - 1; i >= 0; --i) positions.push_back(sig.start_bit + i);
    return positions;
  }
  int pos = sig.start_bit;
  for (int i = 0; i < sig.bit_length; ++i) {
    positions.push_back(pos);
    pos = (pos % 8 == 0) ? pos + 15 : pos - 1;
  }
  return positions;
}

void validate_signal(const SignalDef& sig, int dlc, std::string_view message) {
  const std::string where = "message " + squote(message) + ": signal " + squote(sig.name);
  if (sig.bit_length < 1 || sig.bit_length > 64) {
    throw SemanticError(where + ": bit length " + std::to_string(sig.bit_length) + " outside 1..64");
  }
  if (sig.start_bit < 0 || sig.start_bit > 63) {
    throw SemanticError(where + ": start bit " + std::to_string(sig.start_bit) + " outside 0..63");
  }
  if (sig.factor.is_zero()) throw SemanticError(where + ": factor must be non-zero");
  if (sig.max_phys < sig.min_phys) throw SemanticError(where + ": minimum exceeds maximum");

  const int budget = dlc * 8;
  if (sig.byte_order == ByteOrder::little_endian) {
    if (sig.start_bit + sig.bit_length > budget) {
      throw SemanticError(where + " exceeds DLC (" + std::to_string(sig.start_bit) + "+" +
                          std::to_string(sig.bit_length) + " > " + std::to_string(budget) + " bits)");
    }
    return;
  }
  for (int p : signal_bit_positions(sig)) {
    if (p < 0 || p >= budget) {
      throw SemanticError(where + " exceeds DLC (bit " + std::to_string(p) + " outside " + std::to_string(budget) +
                          " bits)");
    }
  }
}

DbcDatabase::DbcDatabase(std::vector<MessageDef> messages) : messages_(std::move(messages)) {
  for (std::size_t i = 0; i < messages_.size(); ++i) {
    const MessageDef& msg = messages_[i];
    validate_message_header(msg);
    for (std::size_t s = 0; s < msg.signals.size(); ++s) {
      validate_signal(msg.signals[s], msg.dlc, msg.name);
      validate_against_siblings(msg, msg.signals[s], s);
    }
    const std::uint32_t key = msg.frame_id | (msg.extended ? kExtendedFlag : 0u);
    if (!by_id_.emplace(key, i).second) {
      throw SemanticError("message " + squote(msg.name) + ": duplicate frame id " + std::to_string(msg.frame_id));
    }
    if (!by_name_.emplace(msg.name, i).second) throw SemanticError("duplicate message name " + squote(msg.name));
  }
}

const MessageDef* DbcDatabase::find(std::string_view name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &messages_[it->second];
}

const MessageDef* DbcDatabase::find(std::uint32_t frame_id) const {
  auto it = by_id_.find(frame_id);
  return it == by_id_.end() ? nullptr : &messages_[it->second];
}

DbcDatabase parse_dbc(std::string_view text, const std::string& source) {
  std::vector<MessageDef> messages;
  std::map<std::uint32_t, std::string> seen_ids;
  std::map<std::string, std::size_t, std::less<>> seen_names;

  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    begin = end + 1;

    const std::string_view keyword = first_token(line);
    if (keyword != "BO_" && keyword != "SG_") continue;

    LineCursor cur(line, line_no, source);
    cur.identifier("keyword");

    if (keyword == "BO_") {
      MessageDef msg;
      cur.peek();
      const std::size_t id_col = cur.column();
      const auto raw_id = cur.integer<std::uint32_t>("frame id");
      msg.extended = (raw_id & kExtendedFlag) != 0;
      msg.frame_id = raw_id & ~kExtendedFlag;
      msg.name = cur.identifier("message name");
      cur.expect(':');
      msg.dlc = cur.integer<int>("dlc");
      msg.sender = cur.at_end() ? std::string() : cur.identifier("sender");
      if (!cur.at_end()) cur.fail("unexpected trailing text");
      try {
        validate_message_header(msg);
      } catch (const SemanticError& e) {
        throw SemanticError(source + ":" + std::to_string(line_no) + ":" + std::to_string(id_col) + ": " + e.what());
      }
      if (auto [it, fresh] = seen_ids.emplace(raw_id, msg.name); !fresh) {
        throw SemanticError(source + ":" + std::to_string(line_no) + ":" + std::to_string(id_col) + ": message " +
                            squote(msg.name) + ": duplicate frame id " + std::to_string(msg.frame_id) +
                            " (already used by " + squote(it->second) + ")");
      }
      if (!seen_names.emplace(msg.name, messages.size()).second) {
        throw SemanticError(source + ":" + std::to_string(line_no) + ": duplicate message name " + squote(msg.name));
      }
      messages.push_back(std::move(msg));
      continue;
    }

    if (messages.empty()) cur.fail("SG_ record outside of a BO_ block");
    MessageDef& msg = messages.back();
    SignalDef sig;
    cur.peek();
    const std::size_t name_col = cur.column();
    sig.name = cur.identifier("signal name");
    if (cur.peek() != ':') {
      const std::size_t mux_col = cur.column();
      std::string mux = cur.identifier("multiplexer indicator or ':'");
      if (!mux.empty() && (mux[0] == 'm' || mux[0] == 'M')) {
        throw ParseError(source, line_no, mux_col,
                         "signal " + squote(sig.name) + ": multiplexed signals are unsupported");
      }
      cur.fail("expected ':'");
    }
    cur.expect(':');
    sig.start_bit = cur.integer<int>("start bit");
    cur.expect_here('|');
    sig.bit_length = cur.integer<int>("bit length", false);
    cur.expect_here('@');
    const int order = cur.integer<int>("byte order", false);
    if (order != 0 && order != 1) cur.fail("byte order must be 0 or 1");
    sig.byte_order = order == 1 ? ByteOrder::little_endian : ByteOrder::big_endian;
    const char sign = cur.peek();
    if (sign != '+' && sign != '-') cur.fail("expected value type '+' or '-'");
    cur.expect(sign);
    sig.signedness = sign == '-' ? Signedness::signed_ : Signedness::unsigned_;
    cur.expect('(');
    sig.factor = cur.decimal("factor");
    cur.expect(',');
    sig.offset = cur.decimal("offset");
    cur.expect(')');
    cur.expect('[');
    sig.min_phys = cur.decimal("minimum");
    cur.expect('|');
    sig.max_phys = cur.decimal("maximum");
    cur.expect(']');
    sig.unit = cur.quoted_string();
    sig.receivers = cur.receivers();

    try {
      validate_signal(sig, msg.dlc, msg.name);
      validate_against_siblings(msg, sig, msg.signals.size());
    } catch (const SemanticError& e) {
      throw SemanticError(source + ":" + std::to_string(line_no) + ":" + std::to_string(name_col) + ": " + e.what());
    }
    msg.signals.push_back(std::move(sig));
  }
  return DbcDatabase(std::move(messages));
}

DbcDatabase load_dbc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open DBC file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dbc(buffer.str(), path.string());
}

std::string render_dbc(const DbcDatabase& db) {
  std::ostringstream out;
  for (const MessageDef& msg : db.messages()) {
    const std::uint32_t id = msg.frame_id | (msg.extended ? kExtendedFlag : 0u);
    out << "BO_ " << id << ' ' << msg.name << ": " << msg.dlc;
    if (!msg.sender.empty()) out << ' ' << msg.sender;
    out << '\n';
    for (const SignalDef& sig : msg.signals) {
      out << " SG_ " << sig.name << " : " << sig.start_bit << '|' << sig.bit_length << '@'
          << (sig.byte_order == ByteOrder::little_endian ? '1' : '0') << (sig.is_signed() ? '-' : '+') << " ("
          << sig.factor.to_string() << ',' << sig.offset.to_string() << ") [" << sig.min_phys.to_string() << '|'
          << sig.max_phys.to_string() << "] \"" << sig.unit << '"';
      for (std::size_t i = 0; i < sig.receivers.size(); ++i) out << (i == 0 ? " " : ",") << sig.receivers[i];
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

const SignalDef& lookup_signal(const DbcDatabase& db, std::string_view message, std::string_view signal) {
  const MessageDef* msg = db.find(message);
  if (!msg) throw LookupError(LookupError::Level::message, "unknown message " + squote(message));
  const SignalDef* sig = msg->find_signal(signal);
  if (!sig) {
    throw LookupError(LookupError::Level::signal, "unknown signal " + squote(signal) + " in message " + squote(message));
  }
  return *sig;
}

}  // namespace simcan
