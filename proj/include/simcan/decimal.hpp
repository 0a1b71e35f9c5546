#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace simcan {

/// Exact decimal number `mantissa * 10^-scale`, kept normalized (no trailing
/// zero digits in the mantissa, scale >= 0). DBC factors such as 0.0001 are
/// stored exactly so that parse/render round trips are lossless.
class Decimal {
 public:
  constexpr Decimal() = default;
  constexpr Decimal(std::int64_t mantissa, int scale) : mantissa_(mantissa), scale_(scale) { normalize(); }

  /// Parses `[-+]digits[.digits][e[-+]digits]`. Returns nullopt on malformed
  /// text or when the value needs more than 18 significant digits.
  static std::optional<Decimal> parse(std::string_view text);

  /// Nearest decimal with at most `max_scale` fractional digits.
  static Decimal from_double(double value, int max_scale = 9);

  std::int64_t mantissa() const { return mantissa_; }
  int scale() const { return scale_; }

  bool is_zero() const { return mantissa_ == 0; }
  double to_double() const;
  long double to_long_double() const;

  /// Shortest exact text form, e.g. "0.0001", "-655.36", "13107".
  std::string to_string() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend bool operator<(const Decimal& a, const Decimal& b) { return a.to_long_double() < b.to_long_double(); }
  friend bool operator<=(const Decimal& a, const Decimal& b) { return !(b < a); }

 private:
  constexpr void normalize() {
    if (mantissa_ == 0) {
      scale_ = 0;
      return;
    }
    while (scale_ < 0) {
      mantissa_ *= 10;
      ++scale_;
    }
    while (scale_ > 0 && mantissa_ % 10 == 0) {
      mantissa_ /= 10;
      --scale_;
    }
  }

  std::int64_t mantissa_ = 0;
  int scale_ = 0;
};

/// 10^exponent as long double, exact for the exponents a Decimal can carry.
long double pow10l_exact(int exponent);

}  // namespace simcan
