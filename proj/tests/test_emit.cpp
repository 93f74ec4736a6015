#include <doctest.h>

#include <random>
#include <sstream>

#include <json.hpp>

#include "cityex/emit.hpp"

using namespace cityex;

namespace {

const Fraction kTenth{1, 10};

CityStats city(std::string name, std::string country, std::int64_t n, std::int64_t no, double lat, double lon) {
  return make_city_stats({std::move(name), "", std::move(country)}, n, no, kTenth, 0.05,
                         GeoPoint::at(lat, lon, "atlas"));
}

std::vector<CityStats> sample() {
  std::vector<CityStats> s = {
      city("LONDON", "ENGLAND", 715, 147, 51.5074, -0.1278),
      city("BERLIN", "GERMANY", 194, 45, 52.52, 13.405),
      city("KIEV", "UKRAINE", 235, 1, 50.4501, 30.5234),
      city("NOWHERE", "LAND", 20, 2, 0.0, 0.0),
  };
  sort_city_stats(s);
  return s;
}

std::vector<std::string> lines(const std::string& body) {
  std::vector<std::string> out;
  std::istringstream in(body);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("describe labels") {
  CHECK(describe(city("LONDON", "ENGLAND", 715, 147, 1, 1)) == "obs: 147, exp: 71.50, ratio: 2.06*");
  CHECK(describe(city("BERLIN", "GERMANY", 194, 45, 1, 1)) == "obs: 45, exp: 19.40, ratio: 2.32*");
  CHECK(describe(city("X", "Y", 20, 3, 1, 1)) == "obs: 3, exp: 2.00, ratio: 1.50");
}

TEST_CASE("gpsviz") {
  CHECK(emit_gpsviz({}).body == "name\tdesc\tlatitude\tlongitude\tcolor\tn\n");
  CHECK(emit_gpsviz({}).feature_count == 0);

  const auto doc = emit_gpsviz(sample());
  const auto ls = lines(doc.body);
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == "name\tdesc\tlatitude\tlongitude\tcolor\tn");
  CHECK(ls[1] == "LONDON, ENGLAND\tobs: 147, exp: 71.50, ratio: 2.06*\t51.507400\t-0.127800\tdarkgreen\t76.50");
  CHECK(ls[2].starts_with("BERLIN, GERMANY\tobs: 45, exp: 19.40, ratio: 2.32*"));
  CHECK(ls[3] == "KIEV, UKRAINE\tobs: 1, exp: 23.50, ratio: 0.04*\t50.450100\t30.523400\tred\t23.50");
  CHECK(ls[4] == "# 1 cities without coordinates omitted");
  CHECK(doc.feature_count == 3);
}

TEST_CASE("geojson") {
  const auto doc = emit_geojson(sample());
  const auto json = nlohmann::json::parse(doc.body);
  CHECK(json["type"] == "FeatureCollection");
  REQUIRE(json["features"].size() == 3);
  CHECK(doc.feature_count == 3);
  const auto& kiev = json["features"][2];
  CHECK(kiev["geometry"]["coordinates"][0].get<double>() == doctest::Approx(30.5234));
  CHECK(kiev["geometry"]["coordinates"][1].get<double>() == doctest::Approx(50.4501));
  CHECK(kiev["properties"]["color"] == "#FF0000");
  CHECK(kiev["properties"]["z"].get<double>() == doctest::Approx(-4.669).epsilon(1e-4));
  CHECK(kiev["properties"]["radius"].get<double>() == 23.5);
  CHECK(doc.body.find("\"expected\":23.50") != std::string::npos);

  auto grey = emit_geojson({city("G", "H", 100, 10, 1, 2)});
  CHECK(nlohmann::json::parse(grey.body)["features"][0]["properties"]["radius"] == 1);

  CHECK(nlohmann::json::parse(emit_geojson({}).body)["features"].empty());
}

TEST_CASE("feature counts equal mapped cities on random fixtures") {
  std::mt19937 rng(17);
  for (int round = 0; round < 100; ++round) {
    std::vector<CityStats> stats;
    std::size_t mapped = 0;
    const int n = static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      const bool ok = rng() % 3 != 0;
      const std::int64_t total = 1 + rng() % 300;
      stats.push_back(city("C" + std::to_string(i), "L\"and", total, rng() % (total + 1), ok ? 10.0 + i : 0.0,
                           ok ? 20.0 : 0.0));
      mapped += ok;
    }
    sort_city_stats(stats);
    const auto geo = emit_geojson(stats);
    CHECK(nlohmann::json::parse(geo.body)["features"].size() == mapped);
    CHECK(emit_gpsviz(stats).feature_count == mapped);
    CHECK(emit_html(stats).feature_count == mapped);
    CHECK(lines(emit_table(stats).body).size() == stats.size() + 1);

    // Display radii keep the order of the raw radii.
    const auto d = display_radii(stats);
    for (std::size_t i = 0; i < stats.size(); ++i)
      for (std::size_t j = 0; j < stats.size(); ++j)
        if (stats[i].radius > stats[j].radius) CHECK(d[i] > d[j]);
  }
}

TEST_CASE("table") {
  const auto one = emit_table({city("BERLIN", "GERMANY", 194, 45, 52.52, 13.405)});
  const auto ls = lines(one.body);
  REQUIRE(ls.size() == 2);
  CHECK(ls[0] == kTableHeader);
  CHECK(ls[1] == "BERLIN,,GERMANY,194,45,19.40,2.32,3.4931,0.000477482,true,true,darkgreen,26.60,52.520000,13.405000");

  const auto all = emit_table(sample());
  CHECK(all.feature_count == 4);
  CHECK(all.body.find("NOWHERE,,LAND,20,2,2.00,1.00,0.0000,1,false,false,gray,1.00,0.000000,0.000000") !=
        std::string::npos);

  auto quoted = emit_table({city("SAINT, X", "A\"B", 10, 1, 1, 1)});
  CHECK(quoted.body.find("\"SAINT, X\",,\"A\"\"B\"") != std::string::npos);
}

TEST_CASE("html") {
  const auto doc = emit_html(sample(), {"Psychology 2008", ""});
  CHECK(doc.feature_count == 3);
  CHECK(doc.body.starts_with("<!DOCTYPE html>"));
  CHECK(doc.body.find("<title>Psychology 2008</title>") != std::string::npos);
  CHECK(doc.body.find("\"desc\":\"obs: 147, exp: 71.50, ratio: 2.06*\"") != std::string::npos);
  CHECK(doc.body.find("\"r\":30.000000") != std::string::npos);
  CHECK(doc.body.find("\"r\":9.215686") != std::string::npos);  // 23.5 / 76.5 * 30
  CHECK(doc.body.find("NOWHERE") == std::string::npos);
  CHECK(doc.body.find("http") == doc.body.find("http://www.w3.org/2000/svg"));  // no remote resources

  const auto data_start = doc.body.find("<script type=\"application/json\" id=\"cityex-data\">\n");
  REQUIRE(data_start != std::string::npos);
  const auto from = data_start + std::string("<script type=\"application/json\" id=\"cityex-data\">\n").size();
  const auto payload = nlohmann::json::parse(doc.body.substr(from, doc.body.find("</script>", from) - from));
  CHECK(payload["cities"].size() == 3);
  CHECK(payload["cities"][0]["properties"]["color"] == "#006400");

  auto tiles = emit_html(sample(), {"t", "https://tile.example.org/{z}/{x}/{y}.png"});
  CHECK(tiles.body.find("https://tile.example.org/{z}/{x}/{y}.png") != std::string::npos);

  // Equal radii render equal circles.
  const auto grey = display_radii({city("A", "B", 10, 1, 1, 1), city("C", "D", 20, 2, 1, 1)});
  CHECK(grey[0] == grey[1]);
  CHECK(grey[0] >= 1.0);

  auto escaped = emit_html({city("</script><b>", "X", 10, 1, 1, 1)}, {"<T&>", ""});
  CHECK(escaped.body.find("</script><b>") == std::string::npos);
  CHECK(escaped.body.find("<title>&lt;T&amp;&gt;</title>") != std::string::npos);
}

TEST_CASE("emitters are byte-stable") {
  const auto s = sample();
  CHECK(emit_gpsviz(s).body == emit_gpsviz(sample()).body);
  CHECK(emit_geojson(s).body == emit_geojson(sample()).body);
  CHECK(emit_table(s).body == emit_table(sample()).body);
  CHECK(emit_html(s).body == emit_html(sample()).body);
}
