#include "cityex/fraction.hpp"

#include <cctype>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace cityex {

Fraction::Fraction(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("fraction with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

Fraction Fraction::parse(std::string_view text) {
  auto fail = [&] { return std::invalid_argument(fmt::format("not a fraction: '{}'", text)); };
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw fail();

  auto digits = [&](std::string_view s, std::int64_t& value) {
    if (s.empty() || s.size() > 15) return false;
    value = 0;
    for (char ch : s) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
      value = value * 10 + (ch - '0');
    }
    return true;
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t a = 0, b = 0;
    if (!digits(text.substr(0, slash), a) || !digits(text.substr(slash + 1), b) || b == 0) throw fail();
    return Fraction(a, b);
  }

  const auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw fail();
  std::int64_t w = 0, f = 0;
  if (!whole.empty() && !digits(whole, w)) throw fail();
  if (!frac.empty() && !digits(frac, f)) throw fail();
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  return Fraction(w * scale + f, scale);
}

std::int64_t Fraction::ceil_times(std::int64_t count) const {
  const __int128 prod = static_cast<__int128>(num_) * count;
  __int128 q = prod / den_;
  if (prod % den_ != 0 && prod > 0) ++q;
  return static_cast<std::int64_t>(q);
}

std::string Fraction::str() const {
  if (den_ == 1) return fmt::format("{}", num_);
  return fmt::format("{}/{}", num_, den_);
}

}  // namespace cityex
