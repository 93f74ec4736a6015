// excellence.hpp - top-p% threshold, two-proportion z-test, colours and radii
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cityex/address.hpp"
#include "cityex/fraction.hpp"
#include "cityex/geocoder.hpp"
#include "cityex/record.hpp"

namespace cityex {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThresholdResult {
  Fraction p;
  std::int64_t total = 0;     // N
  std::int64_t minimum = 0;   // k = ceil(p*N)
  long cutoff = 0;            // c: citations of the k-th most cited record
  std::int64_t top_size = 0;  // T = |{x >= c}|, ties at the cutoff included
};

/// Throws StatsError("empty corpus") for an empty multiset.
ThresholdResult citation_threshold(std::span<const long> citations, Fraction p);
ThresholdResult citation_threshold(const std::vector<Record>& corpus, Fraction p);

std::set<std::string> classify_top(const std::vector<Record>& corpus, const ThresholdResult& t);

/// z for the two-proportion test of n_o/n against p_e with pooled
/// p = (n_o + n*p_e) / (2n). Throws StatsError on a degenerate pooled
/// proportion or out-of-range input.
double z_score(std::int64_t n, std::int64_t n_observed, Fraction p_expected);

/// Two-sided normal tail probability 2*(1 - Phi(|z|)).
double p_value(double z);

enum class Significance { Significant, NotSignificant, NotTestable };

std::string_view to_string(Significance s);

/// Minimum expected count for the test to be carried out.
inline constexpr double kMinExpected = 5.0;

/// alpha / m, the per-test level.
double per_test_level(double alpha, int comparisons = 1);

Significance significance(double z, double n_expected, double alpha, int comparisons = 1);

enum class Color { DarkGreen, LightGreen, LimeGreen, Grey, Orange, OrangeRed, Red };

inline constexpr Color kAllColors[] = {Color::DarkGreen, Color::LightGreen, Color::LimeGreen,
                                       Color::Grey,      Color::Orange,     Color::OrangeRed,
                                       Color::Red};

/// "darkgreen", "lightgreen", "limegreen", "gray", "orange", "orangered", "red".
std::string_view color_name(Color c);
/// "#006400", ... standard web palette.
std::string_view color_hex(Color c);
std::string_view color_enum_name(Color c);  // DARK_GREEN etc.
std::optional<Color> parse_color(std::string_view name);

/// Colour rule. Equality of n_o and n_e = n*p_e is tested exactly.
Color assign_color(std::int64_t n, std::int64_t n_observed, Fraction p_expected, Significance sig);

/// |n_o - n*p_e| + 1.
double circle_radius(std::int64_t n, std::int64_t n_observed, Fraction p_expected);

struct CityStats {
  CityKey key;
  std::int64_t n = 0;
  std::int64_t observed = 0;
  Fraction p_expected;
  double level = 0.05;  // per-test significance level actually applied

  double expected = 0;  // n * p_e
  double p_observed = 0;
  double p_pooled = 0;
  double z = 0;
  double p_value = 1;
  bool testable = false;
  bool significant = false;
  std::optional<double> ratio;  // n_o / n_e
  Color color = Color::Grey;
  double radius = 1;
  GeoPoint point = GeoPoint::failure();

  Significance significance() const;
  /// |n_o*den - n*num|, the exact numerator of |n_o - n_e| (shared denominator).
  std::int64_t deviation_numerator() const;
};

/// Populates every derived field of CityStats from the counts.
CityStats make_city_stats(CityKey key, std::int64_t n, std::int64_t observed, Fraction p_expected,
                          double level, GeoPoint point);

struct TableOptions {
  Fraction p_expected{1, 10};
  double alpha = 0.05;
  bool bonferroni = false;
};

/// Number of tallies whose expected count reaches kMinExpected.
int count_testable(const std::vector<CityTally>& tallies, Fraction p_expected);

/// One row per tally, sorted by descending radius then key. Per-city work is
/// OpenMP-parallel; city_table_serial is the reference implementation.
std::vector<CityStats> city_table(const std::vector<CityTally>& tallies, const TableOptions& options,
                                  const std::map<CityKey, GeoPoint>& points);
std::vector<CityStats> city_table_serial(const std::vector<CityTally>& tallies,
                                         const TableOptions& options,
                                         const std::map<CityKey, GeoPoint>& points);

/// Sort rule shared by both table kernels.
void sort_city_stats(std::vector<CityStats>& stats);

/// Monte Carlo estimate of the rejection rate of the test under the null
/// (n_o ~ Binomial(n, p_e)). Trials are split into fixed blocks, each with its
/// own seeded engine, so the result does not depend on the thread count.
double simulate_rejection_rate(std::int64_t n, Fraction p_expected, double alpha,
                               std::int64_t trials, std::uint64_t seed);
double simulate_rejection_rate_serial(std::int64_t n, Fraction p_expected, double alpha,
                                      std::int64_t trials, std::uint64_t seed);

// Lossless intermediate between the `stats` and `map` stages.
void write_stats_tsv(std::ostream& out, const std::vector<CityStats>& stats);
std::vector<CityStats> read_stats_tsv(std::istream& in);

}  // namespace cityex
