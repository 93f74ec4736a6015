#include <doctest.h>

#include <random>
#include <sstream>

#include "cityex/excellence.hpp"
#include "oracles.hpp"

using namespace cityex;

namespace {

const Fraction kTenth{1, 10};

CityKey key(std::string city) { return {std::move(city), "", "LAND"}; }

}  // namespace

TEST_CASE("Fraction parsing") {
  CHECK(Fraction::parse("0.10") == Fraction(1, 10));
  CHECK(Fraction::parse(".2") == Fraction(1, 5));
  CHECK(Fraction::parse("3/40") == Fraction(3, 40));
  CHECK(Fraction::parse("1") == Fraction(1, 1));
  CHECK_THROWS(Fraction::parse("abc"));
  CHECK_THROWS(Fraction::parse("1e-1"));
  CHECK_THROWS(Fraction::parse("-0.1"));
  CHECK(Fraction(1, 10).ceil_times(15142) == 1515);
  CHECK(Fraction(1, 10).ceil_times(50) == 5);
  CHECK(Fraction(1, 5).ceil_times(50) == 10);
}

TEST_CASE("citation_threshold examples") {
  std::vector<long> plain = {5, 4, 3, 2, 1, 0, 0, 0, 0, 0};
  auto t = citation_threshold(plain, kTenth);
  CHECK(t.minimum == 1);
  CHECK(t.cutoff == 5);
  CHECK(t.top_size == 1);

  std::vector<long> tied = {8, 8, 8, 5, 4, 3, 2, 1, 0, 0};
  const auto o = oracle::threshold(tied, 1, 10);
  t = citation_threshold(tied, kTenth);
  CHECK(t.minimum == o.k);
  CHECK(t.cutoff == o.cutoff);
  CHECK(t.top_size == o.top);
  CHECK(t.top_size == 3);

  CHECK_THROWS_WITH_AS(citation_threshold(std::vector<long>{}, kTenth), "empty corpus", StatsError);
}

TEST_CASE("classify_top degenerate cases") {
  std::vector<Record> corpus(10);
  for (int i = 0; i < 10; ++i) corpus[i].ut = "R" + std::to_string(i);
  auto t = citation_threshold(corpus, kTenth);
  CHECK(t.cutoff == 0);
  CHECK(classify_top(corpus, t).size() == 10);

  corpus[3].times_cited = 100;
  t = citation_threshold(corpus, kTenth);
  CHECK(classify_top(corpus, t) == std::set<std::string>{"R3"});
}

TEST_CASE("threshold matches the sort oracle on random multisets") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 2000; ++round) {
    const int n = 1 + static_cast<int>(rng() % 60);
    std::vector<Record> corpus(n);
    std::vector<long> cites;
    for (int i = 0; i < n; ++i) {
      corpus[i].ut = "R" + std::to_string(i);
      corpus[i].times_cited = static_cast<long>(rng() % 12);
      cites.push_back(corpus[i].times_cited);
    }
    const std::int64_t den = 2 + static_cast<std::int64_t>(rng() % 20);
    const Fraction p(1 + static_cast<std::int64_t>(rng() % (den - 1)), den);
    const auto t = citation_threshold(corpus, p);
    const auto o = oracle::threshold(cites, p.num(), p.den());
    CHECK(t.minimum == o.k);
    CHECK(t.cutoff == o.cutoff);
    CHECK(t.top_size == o.top);
    CHECK(static_cast<std::int64_t>(classify_top(corpus, t).size()) == t.top_size);
    // Dropping the tie block at the cutoff leaves fewer than k.
    const auto above = std::count_if(cites.begin(), cites.end(), [&](long x) { return x > t.cutoff; });
    CHECK(above < t.minimum);
  }
}

TEST_CASE("z_score against the high-precision oracle") {
  CHECK(z_score(235, 1, kTenth) == doctest::Approx(-4.669007275908).epsilon(1e-12));
  CHECK(z_score(715, 147, kTenth) == doctest::Approx(5.549163748645).epsilon(1e-12));
  CHECK(z_score(100, 10, kTenth) == 0.0);
  CHECK(z_score(235, 1, kTenth) == doctest::Approx(oracle::z(235, 1)).epsilon(1e-13));

  CHECK_THROWS_AS(z_score(0, 0, kTenth), StatsError);
  CHECK_THROWS_AS(z_score(10, 11, kTenth), StatsError);
  CHECK_THROWS_AS(z_score(10, 1, Fraction(1, 1)), StatsError);
  CHECK_THROWS_AS(z_score(10, 1, Fraction(0, 1)), StatsError);
}

TEST_CASE("z_score laws") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 300; ++round) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 500);
    const std::int64_t den = 2 + static_cast<std::int64_t>(rng() % 30);
    const Fraction p(1 + static_cast<std::int64_t>(rng() % (den - 1)), den);
    double prev = -1e300;
    for (std::int64_t no = 0; no <= n; ++no) {
      const double z = z_score(n, no, p);
      const auto lhs = no * p.den();
      const auto rhs = n * p.num();
      if (lhs > rhs) CHECK(z > 0);
      if (lhs < rhs) CHECK(z < 0);
      if (lhs == rhs) CHECK(z == 0.0);
      CHECK(z > prev);  // strictly increasing in n_o
      prev = z;
    }
  }
}

TEST_CASE("p_value") {
  CHECK(p_value(0.0) == 1.0);
  CHECK(std::fabs(p_value(1.96) - 0.05) < 2e-4);
  CHECK(std::fabs(p_value(1.96) - 0.0499957902964409) < 1e-12);
  CHECK(std::fabs(p_value(-4.669) - 3.02669379018932e-6) < 1e-12);
  for (double z = -8.0; z <= 8.0; z += 0.01) {
    CHECK(std::fabs(p_value(z) - oracle::two_sided_tail(z)) <= 1e-12);
    CHECK(p_value(z) == p_value(-z));
  }
}

TEST_CASE("significance") {
  CHECK(significance(5.549, 71.5, 0.05) == Significance::Significant);
  CHECK(significance(3.0, 2.0, 0.05) == Significance::NotTestable);
  CHECK(significance(1.5, 10.0, 0.05) == Significance::NotSignificant);
  CHECK(significance(-2.0, 5.0, 0.05) == Significance::Significant);
  CHECK(per_test_level(0.05, 90) == doctest::Approx(5.5556e-4).epsilon(1e-4));
  CHECK_THROWS(per_test_level(0.05, 0));
  CHECK_THROWS(per_test_level(1.5, 1));
}

TEST_CASE("colour rule") {
  // Kiev: 1 observed against 23.5 expected, significant.
  CHECK(assign_color(235, 1, kTenth, Significance::Significant) == Color::Red);
  CHECK(assign_color(715, 147, kTenth, Significance::Significant) == Color::DarkGreen);
  CHECK(assign_color(20, 3, kTenth, Significance::NotTestable) == Color::LimeGreen);
  CHECK(assign_color(20, 2, kTenth, Significance::NotTestable) == Color::Grey);
  CHECK(assign_color(100, 12, kTenth, Significance::NotSignificant) == Color::LightGreen);
  CHECK(assign_color(100, 8, kTenth, Significance::NotSignificant) == Color::OrangeRed);
  CHECK(assign_color(20, 1, kTenth, Significance::NotTestable) == Color::Orange);
  // Equality is exact: 0.1 * 30 is not 3.0 in binary floating point.
  CHECK(assign_color(30, 3, kTenth, Significance::NotTestable) == Color::Grey);

  CHECK(color_hex(Color::DarkGreen) == "#006400");
  CHECK(color_hex(Color::Red) == "#FF0000");
  for (Color c : kAllColors) CHECK(parse_color(color_name(c)) == c);
}

TEST_CASE("circle_radius") {
  CHECK(circle_radius(100, 10, kTenth) == 1.0);
  CHECK(circle_radius(235, 1, kTenth) == 23.5);
  CHECK(circle_radius(715, 147, kTenth) == 76.5);
}

TEST_CASE("city_table") {
  SUBCASE("boundary of the validity rule") {
    auto rows = city_table({{key("X"), 50, 5, 50}}, {}, {});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].z == 0.0);
    CHECK(rows[0].color == Color::Grey);
    CHECK(rows[0].radius == 1.0);
    CHECK(rows[0].testable);
    CHECK(rows[0].point.failed);
  }
  SUBCASE("ordering by radius") {
    auto rows = city_table({{key("KIEV"), 235, 1, 235}, {key("LONDON"), 715, 147, 715}}, {}, {});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].key.city == "LONDON");
    CHECK(rows[1].key.city == "KIEV");
    CHECK(rows[1].color == Color::Red);
  }
  SUBCASE("ties in radius fall back to key order") {
    auto rows = city_table({{key("B"), 20, 3, 20}, {key("A"), 20, 1, 20}}, {}, {});
    CHECK(rows[0].key.city == "A");
  }
  SUBCASE("90 testable of 658") {
    std::vector<CityTally> tallies;
    for (int i = 0; i < 658; ++i) {
      const long n = i < 90 ? 50 + i : 1 + i % 49;
      tallies.push_back({key("C" + std::to_string(i)), n, n / 10, n});
    }
    CHECK(count_testable(tallies, kTenth) == 90);
    TableOptions o;
    o.bonferroni = true;
    auto rows = city_table(tallies, o, {});
    CHECK(std::count_if(rows.begin(), rows.end(), [](const CityStats& s) { return s.testable; }) == 90);
    CHECK(rows[0].level == doctest::Approx(0.05 / 90));
  }
}

TEST_CASE("make_city_stats invariants on random input") {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 3000; ++round) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 400);
    const std::int64_t no = static_cast<std::int64_t>(rng() % (n + 1));
    const auto s = make_city_stats(key("X"), n, no, kTenth, 0.05, GeoPoint::failure());
    CHECK(s.radius >= 1.0);
    if (s.significant) CHECK(s.testable);
    if (s.color == Color::DarkGreen || s.color == Color::Red) CHECK(s.testable);
    if (!s.testable) CHECK(n < 50);
    CHECK(s.p_pooled == doctest::Approx((no + n / 10.0) / (2.0 * n)));
  }
}

TEST_CASE("stats.tsv round-trips exactly") {
  std::map<CityKey, GeoPoint> pts = {{key("KIEV"), GeoPoint::at(50.4501, 30.5234, "atlas")}};
  TableOptions o;
  o.bonferroni = true;
  auto rows = city_table({{key("KIEV"), 235, 1, 235}, {key("LONDON"), 715, 147, 715}, {key("Q"), 3, 1, 3}}, o, pts);
  std::ostringstream out;
  write_stats_tsv(out, rows);
  std::istringstream in(out.str());
  auto back = read_stats_tsv(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].key == rows[i].key);
    CHECK(back[i].z == rows[i].z);
    CHECK(back[i].level == rows[i].level);
    CHECK(back[i].point == rows[i].point);
    CHECK(back[i].color == rows[i].color);
  }
}
