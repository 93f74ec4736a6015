// fraction.hpp - exact non-negative rational used for percentile levels and p_e
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cityex {

/// A reduced fraction num/den with den > 0. Percentiles such as "0.10" are
/// carried exactly so that expected counts n*p_e can be compared in integers.
class Fraction {
 public:
  constexpr Fraction() = default;
  Fraction(std::int64_t num, std::int64_t den);

  /// Parses a decimal ("0.10", ".2", "1e-1" is rejected) or "a/b" text.
  static Fraction parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// ceil(count * this), exact.
  std::int64_t ceil_times(std::int64_t count) const;

  bool is_proper_probability() const { return num_ > 0 && num_ < den_; }

  std::string str() const;

  friend bool operator==(const Fraction&, const Fraction&) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace cityex
