#include <charconv>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "cityex/geocoder.hpp"

namespace cityex {
namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cols;
  for (auto tab = line.find('\t'); tab != std::string_view::npos; tab = line.find('\t')) {
    cols.emplace_back(line.substr(0, tab));
    line.remove_prefix(tab + 1);
  }
  cols.emplace_back(line);
  return cols;
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool in_range(double lat, double lon) {
  return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

// Shortest text that reads back to the same double.
std::string coord(double v) { return fmt::format("{}", v); }

// city, region, country, lat, lon, source[, extra...]
std::optional<std::pair<CityKey, GeoPoint>> parse_point_row(const std::vector<std::string>& cols) {
  if (cols.size() < 6) return std::nullopt;
  double lat = 0, lon = 0;
  if (!parse_double(cols[3], lat) || !parse_double(cols[4], lon) || !in_range(lat, lon))
    return std::nullopt;
  if (cols[0].empty() || cols[2].empty()) return std::nullopt;
  CityKey key{cols[0], cols[1], cols[2]};
  GeoPoint p = (lat == 0.0 && lon == 0.0) ? GeoPoint::failure(cols[5]) : GeoPoint::at(lat, lon, cols[5]);
  return std::pair{std::move(key), std::move(p)};
}

}  // namespace

GeoPoint GeoPoint::at(double lat, double lon, std::string source) {
  if (lat == 0.0 && lon == 0.0) return failure(std::move(source));
  return {lat, lon, std::move(source), false};
}

// --- gazetteer -------------------------------------------------------------

GazetteerBackend GazetteerBackend::read(std::istream& in) {
  std::map<CityKey, GeoPoint> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto row = parse_point_row(split_tabs(line));
    if (!row) throw std::runtime_error(fmt::format("gazetteer line {}: malformed row", lineno));
    entries.insert_or_assign(std::move(row->first), std::move(row->second));
  }
  return GazetteerBackend(std::move(entries));
}

GazetteerBackend GazetteerBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open gazetteer {}", path.string()));
  return read(in);
}

std::vector<std::optional<LatLon>> GazetteerBackend::resolve_batch(std::span<const CityKey> keys) {
  std::vector<std::optional<LatLon>> out;
  out.reserve(keys.size());
  for (const auto& k : keys) {
    auto it = entries_.find(k);
    if (it == entries_.end() || it->second.failed) out.emplace_back();
    else out.push_back(LatLon{it->second.lat, it->second.lon});
  }
  return out;
}

// --- http --------------------------------------------------------------------

HttpBackend::HttpBackend(std::string endpoint, std::string api_key, std::size_t batch,
                         std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), batch_(batch ? batch : 1), timeout_(timeout) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("endpoint must be an http(s) URL");
  const auto path = endpoint.find('/', scheme + 3);
  scheme_host_port_ = endpoint.substr(0, path);
  path_ = path == std::string::npos ? "/" : endpoint.substr(path);
}

std::vector<std::optional<LatLon>> HttpBackend::resolve_batch(std::span<const CityKey> keys) {
  nlohmann::json queries = nlohmann::json::array();
  for (const auto& k : keys) {
    std::string q = k.city;
    if (!k.region.empty()) q += ", " + k.region;
    q += ", " + k.country;
    queries.push_back({{"city", k.city}, {"region", k.region}, {"country", k.country}, {"q", q}});
  }
  const nlohmann::json body = {{"queries", queries}};

  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("X-Api-Key", api_key_);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransportError(fmt::format("geocoder request failed: {}", httplib::to_string(res.error())));
  if (res->status != 200) throw TransportError(fmt::format("geocoder answered HTTP {}", res->status));

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(fmt::format("geocoder reply is not JSON: {}", e.what()));
  }
  const auto it = reply.find("results");
  if (it == reply.end() || !it->is_array() || it->size() != keys.size())
    throw TransportError("geocoder reply has no matching results array");

  std::vector<std::optional<LatLon>> out;
  out.reserve(keys.size());
  for (const auto& r : *it) {
    if (r.is_object() && r.contains("lat") && r.contains("lon") && r["lat"].is_number() &&
        r["lon"].is_number()) {
      const double lat = r["lat"].get<double>();
      const double lon = r["lon"].get<double>();
      if (in_range(lat, lon) && !(lat == 0.0 && lon == 0.0)) {
        out.push_back(LatLon{lat, lon});
        continue;
      }
    }
    out.emplace_back();
  }
  return out;
}

// --- cache -------------------------------------------------------------------

GeoCache::GeoCache(std::filesystem::path path) : path_(std::move(path)) { load(); }

std::string GeoCache::default_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void GeoCache::load() {
  std::ifstream in(*path_);
  if (!in) return;  // no cache yet
  std::map<CityKey, GeoPoint> loaded;
  std::string line;
  std::size_t lineno = 0;
  bool corrupt = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    auto row = cols.size() == 7 ? parse_point_row(cols) : std::nullopt;
    if (!row) {
      corrupt = true;
      break;
    }
    loaded.insert_or_assign(std::move(row->first), std::move(row->second));
  }
  in.close();
  if (corrupt) {
    warnings_.push_back(fmt::format("cache {} corrupt at line {}; rebuilt from scratch", path_->string(), lineno));
    std::ofstream truncate(*path_, std::ios::trunc);
    return;
  }
  entries_ = std::move(loaded);
}

std::optional<GeoPoint> GeoCache::find(const CityKey& key) const {
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void GeoCache::store(const CityKey& key, const GeoPoint& point) {
  entries_.insert_or_assign(key, point);
  if (!path_) return;
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream out(*path_, std::ios::app);
  if (!out) throw std::runtime_error(fmt::format("cannot append to cache {}", path_->string()));
  out << key.city << '\t' << key.region << '\t' << key.country << '\t' << coord(point.lat) << '\t'
      << coord(point.lon) << '\t' << point.source << '\t' << timestamp() << '\n';
}

// --- resolution ----------------------------------------------------------------

GeocodeReport resolve_all(const std::set<CityKey>& keys, GeocodingBackend& backend, GeoCache& cache,
                          const GeocodeOptions& options, const std::map<CityKey, GeoPoint>* overrides) {
  GeocodeReport report;
  report.warnings = cache.warnings();
  std::vector<CityKey> pending;
  for (const auto& key : keys) {
    if (overrides) {
      if (auto it = overrides->find(key); it != overrides->end()) {
        report.points.emplace(key, it->second);
        ++report.override_hits;
        continue;
      }
    }
    if (auto hit = cache.find(key)) {
      report.points.emplace(key, *hit);
      ++report.cache_hits;
      continue;
    }
    pending.push_back(key);
  }

  auto sleep = options.sleep ? options.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  const std::size_t chunk = std::max<std::size_t>(1, std::min(options.chunk_size, backend.max_batch()));
  const std::span<const CityKey> all(pending);

  for (std::size_t begin = 0; begin < all.size(); begin += chunk) {
    const auto batch = all.subspan(begin, std::min(chunk, all.size() - begin));
    if (report.backend_batches > 0 && options.batch_spacing.count() > 0) sleep(options.batch_spacing);

    std::optional<std::vector<std::optional<LatLon>>> answers;
    for (int attempt = 0; attempt <= options.retries && !answers; ++attempt) {
      if (attempt > 0 && options.batch_spacing.count() > 0) sleep(options.batch_spacing);
      try {
        answers = backend.resolve_batch(batch);
        if (answers->size() != batch.size()) throw TransportError("backend returned wrong batch size");
      } catch (const TransportError& e) {
        answers.reset();
        report.warnings.push_back(fmt::format("{} batch {} attempt {}: {}", backend.name(),
                                              report.backend_batches + 1, attempt + 1, e.what()));
      }
    }
    ++report.backend_batches;

    for (std::size_t i = 0; i < batch.size(); ++i) {
      const CityKey& key = batch[i];
      if (!answers) {
        report.points.emplace(key, GeoPoint::failure(backend.name()));
        continue;  // transport failure, not cached
      }
      const auto& a = (*answers)[i];
      GeoPoint p = a ? GeoPoint::at(a->lat, a->lon, backend.name()) : GeoPoint::failure(backend.name());
      cache.store(key, p);
      report.points.emplace(key, std::move(p));
    }
  }

  for (const auto& [key, p] : report.points) {
    if (p.failed) {
      ++report.failures;
      report.warnings.push_back(fmt::format("no coordinates for {}", key.render()));
    }
  }
  return report;
}

void write_points(std::ostream& out, const std::map<CityKey, GeoPoint>& points) {
  for (const auto& [key, p] : points)
    out << key.city << '\t' << key.region << '\t' << key.country << '\t' << coord(p.lat) << '\t'
        << coord(p.lon) << '\t' << p.source << '\n';
}

std::map<CityKey, GeoPoint> read_points(std::istream& in) { return GazetteerBackend::read(in).entries(); }

}  // namespace cityex
