#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "simcan/codec.hpp"
#include "simcan/dbc.hpp"
#include "simcan/error.hpp"
#include "support.hpp"

using namespace simcan;
using namespace std::chrono_literals;
namespace st = simcan::testing;

class CodecTest : public ::testing::Test {
 protected:
  DbcDatabase db = parse_dbc(st::kSampleDbc);
  const SignalDef& wheelspeed = lookup_signal(db, "sampleFrame2", "wheelspeed");
  const SignalDef& brake = lookup_signal(db, "sampleFrame1", "brake");
  const SignalDef& throttle = lookup_signal(db, "sampleFrame1", "throttle");
  const SignalDef& steering = lookup_signal(db, "sampleFrame1", "steering");
};

TEST_F(CodecTest, WheelspeedGoldenFrame) {
  const CanFrame frame = encode_message(db, "sampleFrame2", {{"wheelspeed", 100.0}}, 0ns);
  EXPECT_EQ(frame.frame_id, 177u);
  EXPECT_EQ(frame.dlc, 4);
  EXPECT_EQ(st::hex_bytes(frame.payload()), "00 00 F4 01");
}

TEST_F(CodecTest, ThrottleGoldenFrame) {
  const CanFrame frame = encode_message(db, "sampleFrame1", {{"throttle", 0.5}}, 0ns);
  EXPECT_EQ(st::hex_bytes(frame.payload()), "00 00 88 13 00 00 00");
}

TEST_F(CodecTest, SteeringGoldenBytes) {
  const CanFrame frame = encode_message(db, "sampleFrame1", {{"steering", -1.5}}, 0ns);
  EXPECT_EQ(st::hex_bytes(frame.payload()), "00 00 00 00 6A FF 01");
}

TEST_F(CodecTest, SampleFrame1GoldenFrame) {
  const CanFrame frame =
      encode_message(db, "sampleFrame1", {{"brake", 0.2}, {"throttle", 0.5}, {"steering", -1.5}}, 2s);
  EXPECT_EQ(frame.frame_id, 161u);
  EXPECT_EQ(frame.dlc, 7);
  EXPECT_EQ(frame.timestamp, 2s);
  EXPECT_EQ(st::hex_bytes(frame.payload()), "D0 07 88 13 6A FF 01");
}

TEST_F(CodecTest, GoldenFrameAgreesWithReferencePacker) {
  std::vector<std::uint8_t> expected(7, 0);
  st::reference_pack(expected, 0, 16, false, 2000);
  st::reference_pack(expected, 16, 16, false, 5000);
  st::reference_pack(expected, 32, 17, false, -150);
  const CanFrame frame =
      encode_message(db, "sampleFrame1", {{"brake", 0.2}, {"throttle", 0.5}, {"steering", -1.5}}, 0ns);
  EXPECT_EQ(std::vector<std::uint8_t>(frame.payload().begin(), frame.payload().end()), expected);
}

TEST_F(CodecTest, DecodeOrdersSignalsByStartBit) {
  const std::array<std::uint8_t, 7> bytes{0xD0, 0x07, 0x88, 0x13, 0x6A, 0xFF, 0x01};
  const PhysicalValueMap values = decode_frame(db, make_frame(161, bytes));
  ASSERT_EQ(values.size(), 3u);
  auto it = values.begin();
  EXPECT_EQ(it->first, "brake");
  EXPECT_NEAR(it->second, 0.2, 1e-12);
  ++it;
  EXPECT_EQ(it->first, "throttle");
  EXPECT_NEAR(it->second, 0.5, 1e-12);
  ++it;
  EXPECT_EQ(it->first, "steering");
  EXPECT_NEAR(it->second, -1.5, 1e-12);
}

TEST_F(CodecTest, UnknownFrameIdIsUnmapped) {
  const std::array<std::uint8_t, 2> bytes{1, 2};
  EXPECT_THROW(decode_frame(db, make_frame(0x123, bytes)), UnmappedFrameError);
}

TEST_F(CodecTest, OutOfRangeValuesClampAndAreCounted) {
  ClampCounter clamps;
  EXPECT_TRUE(phys_to_raw(wheelspeed, 20000.0, clamps) == 65535);
  EXPECT_EQ(clamps.count, 1u);
  EXPECT_TRUE(phys_to_raw(wheelspeed, -5.0, clamps) == 0);
  EXPECT_EQ(clamps.count, 2u);
  EXPECT_TRUE(phys_to_raw(wheelspeed, 100.0, clamps) == 500);
  EXPECT_EQ(clamps.count, 2u);

  const CanFrame frame = encode_message(db, "sampleFrame2", {{"wheelspeed", 20000.0}}, 0ns, &clamps);
  EXPECT_EQ(st::hex_bytes(frame.payload()), "00 00 FF FF");
  EXPECT_EQ(clamps.count, 3u);
}

TEST_F(CodecTest, RoundsHalfAwayFromZero) {
  SignalDef half;
  half.name = "half";
  half.bit_length = 8;
  half.signedness = Signedness::signed_;
  half.factor = Decimal(5, 1);
  EXPECT_TRUE(phys_to_raw(half, 0.25) == 1);
  EXPECT_TRUE(phys_to_raw(half, -0.25) == -1);
  EXPECT_TRUE(phys_to_raw(half, 0.75) == 2);
  EXPECT_TRUE(phys_to_raw(half, -0.75) == -2);
  EXPECT_TRUE(phys_to_raw(half, 0.2) == 0);
  EXPECT_TRUE(phys_to_raw(wheelspeed, 0.5) == 3);
  EXPECT_TRUE(phys_to_raw(steering, -0.0049) == 0);
  EXPECT_TRUE(phys_to_raw(steering, -0.0051) == -1);
}

TEST_F(CodecTest, SteeringRawExtremes) {
  EXPECT_DOUBLE_EQ(raw_to_phys(steering, -65536), -655.36);
  EXPECT_DOUBLE_EQ(raw_to_phys(steering, 65535), 655.35);
  EXPECT_THROW(raw_to_phys(steering, 65536), RangeError);
  EXPECT_DOUBLE_EQ(raw_to_phys(wheelspeed, 65535), 13107.0);
}

TEST_F(CodecTest, NonFiniteInputIsRejected) {
  EXPECT_THROW(phys_to_raw(wheelspeed, std::nan("")), RangeError);
}

TEST_F(CodecTest, QuantizationErrorIsBoundedByHalfAFactor) {
  std::mt19937_64 rng(7);
  for (const SignalDef* sig : {&wheelspeed, &brake, &throttle, &steering}) {
    const double lo = sig->min_phys.to_double();
    const double hi = sig->max_phys.to_double();
    const double half = sig->factor.to_double() / 2.0 + 1e-9;
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int i = 0; i < 2000; ++i) {
      const double v = dist(rng);
      const double back = raw_to_phys(*sig, phys_to_raw(*sig, v));
      ASSERT_LE(std::abs(back - v), half) << sig->name << " v=" << v;
    }
  }
}

TEST_F(CodecTest, PackingLeavesOtherBitsUntouched) {
  std::array<std::uint8_t, 7> payload;
  payload.fill(0xFF);
  pack_signal(payload, throttle, 0);
  EXPECT_EQ(st::hex_bytes(payload), "FF FF 00 00 FF FF FF");
  pack_signal(payload, steering, 0);
  EXPECT_EQ(st::hex_bytes(payload), "FF FF 00 00 00 00 FE");
}

TEST_F(CodecTest, RawOutsideBitWidthIsRejected) {
  std::array<std::uint8_t, 7> payload{};
  EXPECT_THROW(pack_signal(payload, brake, 65536), RangeError);
  EXPECT_THROW(pack_signal(payload, steering, -65537), RangeError);
}

TEST_F(CodecTest, ShortPayloadIsRejected) {
  std::array<std::uint8_t, 4> payload{};
  EXPECT_THROW(pack_signal(payload, steering, 1), RangeError);
}

TEST(CodecOracle, RandomLayoutsMatchReferencePacker) {
  std::mt19937_64 rng(0x5EED);
  std::uniform_int_distribution<int> byte(0, 255);
  int big_endian = 0;
  int signed_count = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto layout = st::random_layout(rng);
    const SignalDef& sig = layout.signal;
    const raw_int raw = st::random_raw(rng, sig);
    const bool be = sig.byte_order == ByteOrder::big_endian;
    big_endian += be;
    signed_count += sig.is_signed();

    std::vector<std::uint8_t> background(static_cast<std::size_t>(layout.payload_bytes));
    for (auto& b : background) b = static_cast<std::uint8_t>(byte(rng));
    std::vector<std::uint8_t> expected = background;
    st::reference_pack(expected, sig.start_bit, sig.bit_length, be, raw);

    std::vector<std::uint8_t> actual = background;
    pack_signal(actual, sig, raw);
    ASSERT_EQ(actual, expected) << "case " << i << " start " << sig.start_bit << " len " << sig.bit_length
                                << (be ? " @0" : " @1") << (sig.is_signed() ? "-" : "+") << " raw " << to_string(raw);
    ASSERT_TRUE(unpack_signal(actual, sig) == raw) << "case " << i;
    ASSERT_TRUE(st::reference_unpack(actual, sig.start_bit, sig.bit_length, be, sig.is_signed()) == raw);
  }
  EXPECT_GT(big_endian, 5000);
  EXPECT_GT(signed_count, 5000);
}

TEST(CodecOracle, SixtyFourBitExtremes) {
  for (ByteOrder order : {ByteOrder::little_endian, ByteOrder::big_endian}) {
    for (Signedness sign : {Signedness::unsigned_, Signedness::signed_}) {
      SignalDef sig;
      sig.name = "wide";
      sig.bit_length = 64;
      sig.start_bit = order == ByteOrder::little_endian ? 0 : 7;
      sig.byte_order = order;
      sig.signedness = sign;
      const auto range = raw_range(sig);
      for (raw_int raw : {range.min, range.max, raw_int{0}, raw_int{1}}) {
        std::vector<std::uint8_t> expected(8, 0);
        st::reference_pack(expected, sig.start_bit, 64, order == ByteOrder::big_endian, raw);
        std::vector<std::uint8_t> actual(8, 0);
        pack_signal(actual, sig, raw);
        EXPECT_EQ(actual, expected);
        EXPECT_TRUE(unpack_signal(actual, sig) == raw);
      }
    }
  }
}

TEST(CodecRaw, ToStringHandlesWideValues) {
  EXPECT_EQ(to_string(raw_int{0}), "0");
  EXPECT_EQ(to_string(raw_int{-150}), "-150");
  EXPECT_EQ(to_string(static_cast<raw_int>(UINT64_MAX)), "18446744073709551615");
}
