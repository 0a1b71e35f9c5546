#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "simcan/codec.hpp"
#include "simcan/dbc.hpp"

namespace simcan::testing {

inline std::filesystem::path data_dir() { return SIMCAN_TEST_DATA; }
inline std::filesystem::path data_path(std::string_view name) { return data_dir() / name; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("simcan-" + std::string(tag) + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Sample database text with the throttle/brake units written as "%".
inline constexpr std::string_view kSampleDbc = R"(BO_ 177 sampleFrame2: 4 Vector__XXX
 SG_ wheelspeed : 16|16@1+ (0.2,0) [0|13107] "rpm" Vector__XXX

BO_ 161 sampleFrame1: 7 Vector__XXX
 SG_ throttle : 16|16@1+ (0.0001,0) [0|1] "%" Vector__XXX
 SG_ brake : 0|16@1+ (0.0001,0) [0|1] "%" Vector__XXX
 SG_ steering : 32|17@1- (0.01,0) [-655.36|655.35] "degree" Vector__XXX
)";

/// Reference packer: writes one bit at a time following the DBC start-bit
/// conventions directly (Intel: LSB at start, ascending; Motorola: MSB at
/// start, descending within a byte and wrapping to bit 7 of the next byte).
inline void reference_pack(std::vector<std::uint8_t>& payload, int start, int length, bool big_endian,
                           raw_int raw) {
  const auto as_unsigned = static_cast<unsigned __int128>(raw);
  int pos = start;
  for (int k = 0; k < length; ++k) {
    const int bit_index = big_endian ? length - 1 - k : k;
    const bool bit = ((as_unsigned >> bit_index) & 1u) != 0;
    auto& byte = payload.at(static_cast<std::size_t>(pos / 8));
    const auto mask = static_cast<std::uint8_t>(1u << (pos % 8));
    byte = bit ? static_cast<std::uint8_t>(byte | mask) : static_cast<std::uint8_t>(byte & ~mask);
    if (big_endian) {
      pos = (pos % 8 == 0) ? pos + 15 : pos - 1;
    } else {
      ++pos;
    }
  }
}

/// Reference unpacker matching reference_pack, with sign extension.
inline raw_int reference_unpack(const std::vector<std::uint8_t>& payload, int start, int length, bool big_endian,
                                bool is_signed) {
  unsigned __int128 value = 0;
  int pos = start;
  for (int k = 0; k < length; ++k) {
    const int bit_index = big_endian ? length - 1 - k : k;
    if ((payload.at(static_cast<std::size_t>(pos / 8)) >> (pos % 8)) & 1u) value |= static_cast<unsigned __int128>(1) << bit_index;
    pos = big_endian ? ((pos % 8 == 0) ? pos + 15 : pos - 1) : pos + 1;
  }
  if (is_signed && ((value >> (length - 1)) & 1u)) {
    return static_cast<raw_int>(value) - (static_cast<raw_int>(1) << length);
  }
  return static_cast<raw_int>(value);
}

/// Highest byte touched by a signal laid out with the reference walk; -1 if
/// the walk leaves an 8-byte payload.
inline int reference_last_byte(int start, int length, bool big_endian) {
  int pos = start;
  int last = 0;
  for (int k = 0; k < length; ++k) {
    if (pos < 0 || pos > 63) return -1;
    last = std::max(last, pos / 8);
    if (k + 1 < length) pos = big_endian ? ((pos % 8 == 0) ? pos + 15 : pos - 1) : pos + 1;
  }
  return last;
}

struct RandomLayout {
  SignalDef signal;
  int payload_bytes = 8;
};

/// Random signal with a layout that fits an 8-byte payload.
inline RandomLayout random_layout(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length_dist(1, 64);
  std::uniform_int_distribution<int> start_dist(0, 63);
  std::bernoulli_distribution coin(0.5);
  for (;;) {
    RandomLayout out;
    SignalDef& sig = out.signal;
    sig.name = "sig";
    sig.bit_length = length_dist(rng);
    sig.start_bit = start_dist(rng);
    sig.byte_order = coin(rng) ? ByteOrder::big_endian : ByteOrder::little_endian;
    sig.signedness = coin(rng) ? Signedness::signed_ : Signedness::unsigned_;
    const int last = reference_last_byte(sig.start_bit, sig.bit_length, sig.byte_order == ByteOrder::big_endian);
    if (last < 0) continue;
    out.payload_bytes = last + 1;
    return out;
  }
}

/// Uniform raw value over the full raw range of the signal.
inline raw_int random_raw(std::mt19937_64& rng, const SignalDef& sig) {
  const unsigned __int128 bits = (static_cast<unsigned __int128>(rng()) << 64) | rng();
  const unsigned __int128 mask = (static_cast<unsigned __int128>(1) << sig.bit_length) - 1;
  const auto u = static_cast<raw_int>(bits & mask);
  if (!sig.is_signed()) return u;
  return u - (static_cast<raw_int>(1) << (sig.bit_length - 1));
}

inline std::string hex_bytes(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i) out += ' ';
    out += kHex[bytes[i] >> 4];
    out += kHex[bytes[i] & 0xF];
  }
  return out;
}

}  // namespace simcan::testing
