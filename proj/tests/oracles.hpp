// oracles.hpp - independent reference computations used only by the tests.
//
// None of these call into the library: the z statistic is evaluated with the
// textbook proportions in 50-digit decimal arithmetic, the normal tail with
// Boost's multiprecision erfc, thresholds by full sort and count.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_dec_float_50;

/// z = (p_o - p_e) / sqrt(p (1 - p) (2 / n)), p = (n_o + n p_e) / (2 n).
inline Big z_big(std::int64_t n, std::int64_t n_o, std::int64_t pe_num, std::int64_t pe_den) {
  const Big nn(n);
  const Big pe = Big(pe_num) / Big(pe_den);
  const Big po = Big(n_o) / nn;
  const Big p = (Big(n_o) + nn * pe) / (2 * nn);
  return (po - pe) / boost::multiprecision::sqrt(p * (1 - p) * (Big(2) / nn));
}

inline double z(std::int64_t n, std::int64_t n_o, std::int64_t pe_num = 1, std::int64_t pe_den = 10) {
  return static_cast<double>(z_big(n, n_o, pe_num, pe_den));
}

/// Two-sided standard normal tail, 2 (1 - Phi(|z|)) = erfc(|z| / sqrt 2).
inline double two_sided_tail(double zv) {
  const Big a = boost::multiprecision::abs(Big(zv)) / boost::multiprecision::sqrt(Big(2));
  return static_cast<double>(boost::math::erfc(a));
}

struct Threshold {
  std::int64_t k = 0;
  long cutoff = 0;
  std::int64_t top = 0;
};

/// Sort descending, take the k-th value, count everything at or above it.
inline Threshold threshold(std::vector<long> c, std::int64_t pnum, std::int64_t pden) {
  std::sort(c.begin(), c.end(), std::greater<>());
  const auto n = static_cast<std::int64_t>(c.size());
  Threshold t;
  t.k = (n * pnum + pden - 1) / pden;
  if (t.k < 1) t.k = 1;
  t.cutoff = c[t.k - 1];
  t.top = 0;
  for (long x : c)
    if (x >= t.cutoff) ++t.top;
  return t;
}

/// Exact rejection probability of the pooled z-test under Binomial(n, p):
/// sum of binomial masses over n_o with two-sided tail < alpha.
inline double exact_rejection_rate(std::int64_t n, std::int64_t pnum, std::int64_t pden, double alpha) {
  Big total = 0;
  const Big p = Big(pnum) / Big(pden);
  for (std::int64_t k = 0; k <= n; ++k) {
    const double zk = z(n, k, pnum, pden);
    if (two_sided_tail(zk) < alpha) {
      const Big mass = boost::math::binomial_coefficient<Big>(static_cast<unsigned>(n), static_cast<unsigned>(k)) *
                       boost::multiprecision::pow(p, k) * boost::multiprecision::pow(1 - p, n - k);
      total += mass;
    }
  }
  return static_cast<double>(total);
}

}  // namespace oracle
