#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <omp.h>

#include "cityex/excellence.hpp"

namespace cityex {
namespace {

using i128 = __int128;

void require_proper(Fraction p) {
  if (!p.is_proper_probability()) throw StatsError(fmt::format("proportion {} outside (0, 1)", p.str()));
}

// n_o*den - n*num: the signed numerator of n_o - n_e over den.
i128 deviation(std::int64_t n, std::int64_t observed, Fraction p) {
  return static_cast<i128>(observed) * p.den() - static_cast<i128>(n) * p.num();
}

bool testable_exact(std::int64_t n, Fraction p) {
  // n * num / den >= 5
  return static_cast<i128>(n) * p.num() >= static_cast<i128>(kMinExpected) * p.den();
}

Significance classify(double z, bool testable, double level) {
  if (!testable) return Significance::NotTestable;
  return p_value(z) < level ? Significance::Significant : Significance::NotSignificant;
}

}  // namespace

ThresholdResult citation_threshold(std::span<const long> citations, Fraction p) {
  if (citations.empty()) throw StatsError("empty corpus");
  require_proper(p);
  ThresholdResult t;
  t.p = p;
  t.total = static_cast<std::int64_t>(citations.size());
  t.minimum = std::max<std::int64_t>(1, p.ceil_times(t.total));

  std::vector<long> sorted(citations.begin(), citations.end());
  auto kth = sorted.begin() + (t.minimum - 1);
  std::nth_element(sorted.begin(), kth, sorted.end(), std::greater<>());
  t.cutoff = *kth;
  t.top_size = std::count_if(citations.begin(), citations.end(), [&](long x) { return x >= t.cutoff; });
  return t;
}

ThresholdResult citation_threshold(const std::vector<Record>& corpus, Fraction p) {
  std::vector<long> c;
  c.reserve(corpus.size());
  for (const auto& r : corpus) c.push_back(r.times_cited);
  return citation_threshold(std::span<const long>(c), p);
}

std::set<std::string> classify_top(const std::vector<Record>& corpus, const ThresholdResult& t) {
  std::set<std::string> top;
  for (const auto& r : corpus)
    if (r.times_cited >= t.cutoff) top.insert(r.ut);
  return top;
}

double z_score(std::int64_t n, std::int64_t n_observed, Fraction p_expected) {
  if (n < 1) throw StatsError("z-test needs n >= 1");
  if (n_observed < 0 || n_observed > n) throw StatsError("observed count outside [0, n]");
  require_proper(p_expected);

  // With D = den and A = n_o*D + n*num, the pooled proportion is A / (2nD);
  // z = (n_o*D - n*num) * sqrt(2n) / sqrt(A * (2nD - A)).
  const i128 d = p_expected.den();
  const i128 a = static_cast<i128>(n_observed) * d + static_cast<i128>(n) * p_expected.num();
  const i128 m = 2 * static_cast<i128>(n) * d - a;
  if (a <= 0 || m <= 0) throw StatsError("degenerate pooled proportion");
  const i128 b = deviation(n, n_observed, p_expected);
  if (b == 0) return 0.0;
  const double denom = std::sqrt(static_cast<double>(a)) * std::sqrt(static_cast<double>(m));
  return static_cast<double>(b) * std::sqrt(2.0 * static_cast<double>(n)) / denom;
}

double p_value(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

std::string_view to_string(Significance s) {
  switch (s) {
    case Significance::Significant: return "SIGNIFICANT";
    case Significance::NotSignificant: return "NOT_SIGNIFICANT";
    case Significance::NotTestable: return "NOT_TESTABLE";
  }
  return "?";
}

double per_test_level(double alpha, int comparisons) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw StatsError("alpha outside (0, 1)");
  if (comparisons < 1) throw StatsError("number of comparisons must be >= 1");
  return alpha / comparisons;
}

Significance significance(double z, double n_expected, double alpha, int comparisons) {
  return classify(z, n_expected >= kMinExpected, per_test_level(alpha, comparisons));
}

std::string_view color_name(Color c) {
  switch (c) {
    case Color::DarkGreen: return "darkgreen";
    case Color::LightGreen: return "lightgreen";
    case Color::LimeGreen: return "limegreen";
    case Color::Grey: return "gray";
    case Color::Orange: return "orange";
    case Color::OrangeRed: return "orangered";
    case Color::Red: return "red";
  }
  return "?";
}

std::string_view color_hex(Color c) {
  switch (c) {
    case Color::DarkGreen: return "#006400";
    case Color::LightGreen: return "#90EE90";
    case Color::LimeGreen: return "#32CD32";
    case Color::Grey: return "#808080";
    case Color::Orange: return "#FFA500";
    case Color::OrangeRed: return "#FF4500";
    case Color::Red: return "#FF0000";
  }
  return "?";
}

std::string_view color_enum_name(Color c) {
  switch (c) {
    case Color::DarkGreen: return "DARK_GREEN";
    case Color::LightGreen: return "LIGHT_GREEN";
    case Color::LimeGreen: return "LIME_GREEN";
    case Color::Grey: return "GREY";
    case Color::Orange: return "ORANGE";
    case Color::OrangeRed: return "ORANGE_RED";
    case Color::Red: return "RED";
  }
  return "?";
}

std::optional<Color> parse_color(std::string_view name) {
  for (Color c : kAllColors)
    if (name == color_name(c) || name == color_enum_name(c)) return c;
  return std::nullopt;
}

Color assign_color(std::int64_t n, std::int64_t n_observed, Fraction p_expected, Significance sig) {
  const i128 dev = deviation(n, n_observed, p_expected);
  if (dev == 0) return Color::Grey;
  if (dev > 0) {
    switch (sig) {
      case Significance::Significant: return Color::DarkGreen;
      case Significance::NotSignificant: return Color::LightGreen;
      case Significance::NotTestable: return Color::LimeGreen;
    }
  }
  switch (sig) {
    case Significance::Significant: return Color::Red;
    case Significance::NotSignificant: return Color::OrangeRed;
    case Significance::NotTestable: return Color::Orange;
  }
  return Color::Grey;
}

double circle_radius(std::int64_t n, std::int64_t n_observed, Fraction p_expected) {
  const i128 dev = deviation(n, n_observed, p_expected);
  const i128 mag = dev < 0 ? -dev : dev;
  return static_cast<double>(mag) / static_cast<double>(p_expected.den()) + 1.0;
}

Significance CityStats::significance() const {
  if (!testable) return Significance::NotTestable;
  return significant ? Significance::Significant : Significance::NotSignificant;
}

std::int64_t CityStats::deviation_numerator() const {
  const i128 dev = deviation(n, observed, p_expected);
  return static_cast<std::int64_t>(dev < 0 ? -dev : dev);
}

CityStats make_city_stats(CityKey key, std::int64_t n, std::int64_t observed, Fraction p_expected,
                          double level, GeoPoint point) {
  CityStats s;
  s.key = std::move(key);
  s.n = n;
  s.observed = observed;
  s.p_expected = p_expected;
  s.level = level;
  s.point = std::move(point);

  s.expected = static_cast<double>(static_cast<i128>(n) * p_expected.num()) /
               static_cast<double>(p_expected.den());
  s.p_observed = static_cast<double>(observed) / static_cast<double>(n);
  s.p_pooled = (static_cast<double>(observed) + s.expected) / (2.0 * static_cast<double>(n));
  s.z = z_score(n, observed, p_expected);
  s.p_value = p_value(s.z);
  s.testable = testable_exact(n, p_expected);
  const Significance sig = classify(s.z, s.testable, level);
  s.significant = sig == Significance::Significant;
  if (s.expected > 0) s.ratio = static_cast<double>(observed) / s.expected;
  s.color = assign_color(n, observed, p_expected, sig);
  s.radius = circle_radius(n, observed, p_expected);
  return s;
}

int count_testable(const std::vector<CityTally>& tallies, Fraction p_expected) {
  return static_cast<int>(std::count_if(tallies.begin(), tallies.end(), [&](const CityTally& t) {
    return testable_exact(t.n, p_expected);
  }));
}

void sort_city_stats(std::vector<CityStats>& stats) {
  std::sort(stats.begin(), stats.end(), [](const CityStats& a, const CityStats& b) {
    const i128 lhs = static_cast<i128>(a.deviation_numerator()) * b.p_expected.den();
    const i128 rhs = static_cast<i128>(b.deviation_numerator()) * a.p_expected.den();
    if (lhs != rhs) return lhs > rhs;
    return a.key < b.key;
  });
}

namespace {

double table_level(const std::vector<CityTally>& tallies, const TableOptions& options) {
  require_proper(options.p_expected);
  const int m = options.bonferroni ? std::max(1, count_testable(tallies, options.p_expected)) : 1;
  return per_test_level(options.alpha, m);
}

CityStats row_for(const CityTally& t, const TableOptions& options, double level,
                  const std::map<CityKey, GeoPoint>& points) {
  auto it = points.find(t.key);
  GeoPoint p = it == points.end() ? GeoPoint::failure() : it->second;
  return make_city_stats(t.key, t.n, t.n_top, options.p_expected, level, std::move(p));
}

}  // namespace

std::vector<CityStats> city_table_serial(const std::vector<CityTally>& tallies,
                                         const TableOptions& options,
                                         const std::map<CityKey, GeoPoint>& points) {
  const double level = table_level(tallies, options);
  std::vector<CityStats> out;
  out.reserve(tallies.size());
  for (const auto& t : tallies) out.push_back(row_for(t, options, level, points));
  sort_city_stats(out);
  return out;
}

std::vector<CityStats> city_table(const std::vector<CityTally>& tallies, const TableOptions& options,
                                  const std::map<CityKey, GeoPoint>& points) {
  const double level = table_level(tallies, options);
  std::vector<CityStats> out(tallies.size());
  const auto count = static_cast<std::int64_t>(tallies.size());
  // Exceptions must not escape the parallel region; on failure the serial
  // kernel rethrows the first error in order.
  bool bad = false;
#pragma omp parallel for schedule(static) reduction(|| : bad)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      out[i] = row_for(tallies[i], options, level, points);
    } catch (const StatsError&) {
      bad = true;
    }
  }
  if (bad) return city_table_serial(tallies, options, points);
  sort_city_stats(out);
  return out;
}

namespace {

constexpr std::int64_t kTrialsPerBlock = 4096;

std::int64_t run_block(std::int64_t block, std::int64_t trials, std::int64_t n, Fraction p,
                       double level, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  std::mt19937_64 engine(seq);
  std::binomial_distribution<std::int64_t> draw(n, p.value());
  const bool testable = testable_exact(n, p);
  const std::int64_t begin = block * kTrialsPerBlock;
  const std::int64_t end = std::min(trials, begin + kTrialsPerBlock);
  std::int64_t rejections = 0;
  for (std::int64_t t = begin; t < end; ++t) {
    const std::int64_t observed = draw(engine);
    if (classify(z_score(n, observed, p), testable, level) == Significance::Significant) ++rejections;
  }
  return rejections;
}

}  // namespace

double simulate_rejection_rate_serial(std::int64_t n, Fraction p_expected, double alpha,
                                      std::int64_t trials, std::uint64_t seed) {
  require_proper(p_expected);
  if (trials <= 0) throw StatsError("trials must be positive");
  if (n < 1) throw StatsError("z-test needs n >= 1");
  const double level = per_test_level(alpha, 1);
  const std::int64_t blocks = (trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::int64_t rejections = 0;
  for (std::int64_t b = 0; b < blocks; ++b) rejections += run_block(b, trials, n, p_expected, level, seed);
  return static_cast<double>(rejections) / static_cast<double>(trials);
}

double simulate_rejection_rate(std::int64_t n, Fraction p_expected, double alpha, std::int64_t trials,
                               std::uint64_t seed) {
  require_proper(p_expected);
  if (trials <= 0) throw StatsError("trials must be positive");
  if (n < 1) throw StatsError("z-test needs n >= 1");
  const double level = per_test_level(alpha, 1);
  const std::int64_t blocks = (trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::int64_t rejections = 0;
#pragma omp parallel for schedule(static) reduction(+ : rejections)
  for (std::int64_t b = 0; b < blocks; ++b) rejections += run_block(b, trials, n, p_expected, level, seed);
  return static_cast<double>(rejections) / static_cast<double>(trials);
}

// --- stats.tsv ------------------------------------------------------------------

void write_stats_tsv(std::ostream& out, const std::vector<CityStats>& stats) {
  out << "#city\tregion\tcountry\tn\tobserved\tpe_num\tpe_den\tlevel\tlat\tlon\tsource\n";
  for (const auto& s : stats) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", s.key.city, s.key.region,
                       s.key.country, s.n, s.observed, s.p_expected.num(), s.p_expected.den(),
                       s.level, s.point.lat, s.point.lon, s.point.source);
  }
}

std::vector<CityStats> read_stats_tsv(std::istream& in) {
  std::vector<CityStats> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> c;
    std::string_view rest = line;
    for (auto tab = rest.find('\t'); tab != std::string_view::npos; tab = rest.find('\t')) {
      c.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    c.push_back(rest);
    auto bad = [&] { return StatsError(fmt::format("stats line {}: malformed row", lineno)); };
    if (c.size() != 11) throw bad();
    std::int64_t n = 0, obs = 0, num = 0, den = 0;
    double level = 0, lat = 0, lon = 0;
    auto num_ok = [](std::string_view s, auto& v) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc{} && p == s.data() + s.size();
    };
    if (!num_ok(c[3], n) || !num_ok(c[4], obs) || !num_ok(c[5], num) || !num_ok(c[6], den) ||
        !num_ok(c[7], level) || !num_ok(c[8], lat) || !num_ok(c[9], lon) || den <= 0)
      throw bad();
    out.push_back(make_city_stats(CityKey{std::string(c[0]), std::string(c[1]), std::string(c[2])}, n,
                                  obs, Fraction(num, den), level,
                                  GeoPoint::at(lat, lon, std::string(c[10]))));
  }
  sort_city_stats(out);
  return out;
}

}  // namespace cityex
