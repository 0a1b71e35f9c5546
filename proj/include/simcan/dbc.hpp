#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "simcan/decimal.hpp"

namespace simcan {

enum class ByteOrder { little_endian, big_endian };
enum class Signedness { unsigned_, signed_ };

/// One `SG_` record.
///
/// Bit numbering follows the DBC convention: absolute bit `p` lives in byte
/// `p / 8` at bit `p % 8` (bit 0 = least significant bit of the byte).
///
/// Little endian (`@1`): `start_bit` is the least significant bit of the
/// signal; significance ascends with absolute bit position.
///
/// Big endian (`@0`, Motorola): `start_bit` is the most significant bit.
/// Walking towards less significant bits moves down inside a byte and wraps
/// to the top of the next byte ("sawtooth"):
///
///            bit  7  6  5  4  3  2  1  0
///   byte 0       [7][6][5][4][3][2][1][0]
///   byte 1      [15][14][13][12][11][10][9][8]
///
///   start 3, length 6:  3 2 1 0 -> 15 14   (MSB 3, LSB 14)
struct SignalDef {
  std::string name;
  int start_bit = 0;
  int bit_length = 1;
  ByteOrder byte_order = ByteOrder::little_endian;
  Signedness signedness = Signedness::unsigned_;
  Decimal factor{1, 0};
  Decimal offset;
  Decimal min_phys;
  Decimal max_phys;
  std::string unit;
  std::vector<std::string> receivers;

  bool is_signed() const { return signedness == Signedness::signed_; }
  /// min = max = 0 is the conventional "no declared range".
  bool has_phys_range() const { return !(min_phys.is_zero() && max_phys.is_zero()); }

  friend bool operator==(const SignalDef&, const SignalDef&) = default;
};

/// One `BO_` record with its signals in definition order.
struct MessageDef {
  std::uint32_t frame_id = 0;
  bool extended = false;
  std::string name;
  int dlc = 0;
  std::string sender;
  std::vector<SignalDef> signals;

  const SignalDef* find_signal(std::string_view signal) const;

  friend bool operator==(const MessageDef&, const MessageDef&) = default;
};

/// Parsed CAN database. Immutable after construction; safe to share between
/// threads for reading.
class DbcDatabase {
 public:
  DbcDatabase() = default;
  /// Validates every invariant; throws SemanticError on violation.
  explicit DbcDatabase(std::vector<MessageDef> messages);

  const std::vector<MessageDef>& messages() const { return messages_; }
  std::size_t size() const { return messages_.size(); }
  bool empty() const { return messages_.empty(); }

  const MessageDef* find(std::string_view name) const;
  const MessageDef* find(std::uint32_t frame_id) const;

  friend bool operator==(const DbcDatabase& a, const DbcDatabase& b) { return a.messages_ == b.messages_; }

 private:
  std::vector<MessageDef> messages_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
  std::map<std::uint32_t, std::size_t> by_id_;
};

/// Absolute payload bit positions of a signal, most significant first.
std::vector<int> signal_bit_positions(const SignalDef& sig);

/// Checks a signal against its own invariants and the bit budget of `dlc`.
/// Throws SemanticError naming `message` and the signal.
void validate_signal(const SignalDef& sig, int dlc, std::string_view message);

/// Parses the `BO_`/`SG_` subset of the DBC format. Other records are skipped.
/// Throws ParseError (with `source:line:column`) or SemanticError.
DbcDatabase parse_dbc(std::string_view text, const std::string& source = "<dbc>");
DbcDatabase load_dbc(const std::filesystem::path& path);

std::string render_dbc(const DbcDatabase& db);

/// Throws LookupError whose level says whether the message or the signal was missing.
const SignalDef& lookup_signal(const DbcDatabase& db, std::string_view message, std::string_view signal);

}  // namespace simcan
