#include "simcan/decimal.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace simcan {

namespace {

constexpr int kMaxDigits = 18;

}  // namespace

long double pow10l_exact(int exponent) {
  static const std::array<long double, 37> table = [] {
    std::array<long double, 37> t{};
    long double v = 1.0L;
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = v;
      v *= 10.0L;
    }
    return t;
  }();
  if (exponent >= 0 && exponent < static_cast<int>(table.size())) return table[exponent];
  if (exponent < 0 && -exponent < static_cast<int>(table.size())) return 1.0L / table[-exponent];
  return std::pow(10.0L, static_cast<long double>(exponent));
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }

  std::string digits;
  int fraction_digits = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      seen_digit = true;
      if (seen_point) ++fraction_digits;
      if (!(digits.empty() && c == '0')) digits.push_back(c);
      else if (seen_point) digits.push_back(c);
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return std::nullopt;

  int exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    if (i >= text.size()) return std::nullopt;
    for (; i < text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 400) return std::nullopt;
    }
    if (exp_negative) exponent = -exponent;
  }
  if (i != text.size()) return std::nullopt;

  // Leading zeros of the fractional part were kept; drop them from the count.
  std::size_t first = digits.find_first_not_of('0');
  if (first == std::string::npos) return Decimal{};
  digits.erase(0, first);
  while (digits.size() > 1 && digits.back() == '0') {
    digits.pop_back();
    --fraction_digits;
  }
  if (static_cast<int>(digits.size()) > kMaxDigits) return std::nullopt;

  std::int64_t mantissa = 0;
  for (char c : digits) mantissa = mantissa * 10 + (c - '0');

  int scale = fraction_digits - exponent;
  if (scale < 0) {
    if (static_cast<int>(digits.size()) - scale > kMaxDigits) return std::nullopt;
  }
  if (scale > 36) return std::nullopt;
  return Decimal{negative ? -mantissa : mantissa, scale};
}

Decimal Decimal::from_double(double value, int max_scale) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", max_scale, value);
  if (auto parsed = parse(buffer)) return *parsed;
  return Decimal{};
}

double Decimal::to_double() const { return static_cast<double>(to_long_double()); }

long double Decimal::to_long_double() const {
  return static_cast<long double>(mantissa_) / pow10l_exact(scale_);
}

std::string Decimal::to_string() const {
  std::string digits = std::to_string(mantissa_ < 0 ? -mantissa_ : mantissa_);
  const bool negative = mantissa_ < 0;
  if (scale_ > 0) {
    if (static_cast<int>(digits.size()) <= scale_) {
      digits.insert(0, static_cast<std::size_t>(scale_ + 1) - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(scale_), ".");
  }
  return negative ? "-" + digits : digits;
}

}  // namespace simcan
