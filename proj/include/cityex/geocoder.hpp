// geocoder.hpp - resolve city keys to coordinates with a persistent cache
#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cityex/address.hpp"

namespace cityex {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  std::string source;
  bool failed = true;

  static GeoPoint failure(std::string source = "none") { return {0.0, 0.0, std::move(source), true}; }
  static GeoPoint at(double lat, double lon, std::string source);

  bool operator==(const GeoPoint&) const = default;
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Thrown by backends when the service cannot be reached or answers garbage.
/// resolve_all retries and then falls back to the failure sentinel.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeocodingBackend {
 public:
  virtual ~GeocodingBackend() = default;
  virtual std::string name() const = 0;
  /// Largest batch accepted in one call.
  virtual std::size_t max_batch() const { return 1000; }
  /// One entry per key, nullopt when the service knows no such place.
  virtual std::vector<std::optional<LatLon>> resolve_batch(std::span<const CityKey> keys) = 0;
};

/// Offline backend backed by a gazetteer file:
///   city <TAB> region <TAB> country <TAB> lat <TAB> lon <TAB> source
class GazetteerBackend : public GeocodingBackend {
 public:
  GazetteerBackend() = default;
  explicit GazetteerBackend(std::map<CityKey, GeoPoint> entries) : entries_(std::move(entries)) {}

  static GazetteerBackend load(const std::filesystem::path& path);
  static GazetteerBackend read(std::istream& in);

  std::string name() const override { return "gazetteer"; }
  std::vector<std::optional<LatLon>> resolve_batch(std::span<const CityKey> keys) override;

  const std::map<CityKey, GeoPoint>& entries() const { return entries_; }

 private:
  std::map<CityKey, GeoPoint> entries_;
};

/// JSON-over-HTTP batch geocoder. POSTs
///   {"queries":[{"city":..,"region":..,"country":..,"q":"City, Country"}, ...]}
/// to the endpoint and expects {"results":[{"lat":x,"lon":y} | null, ...]}.
/// The API key, when set, travels in the X-Api-Key header.
class HttpBackend : public GeocodingBackend {
 public:
  static constexpr const char* kApiKeyEnv = "CITYEX_GEOCODER_KEY";

  explicit HttpBackend(std::string endpoint, std::string api_key = {},
                       std::size_t batch = 1000,
                       std::chrono::milliseconds timeout = std::chrono::seconds(30));

  std::string name() const override { return "http"; }
  std::size_t max_batch() const override { return batch_; }
  std::vector<std::optional<LatLon>> resolve_batch(std::span<const CityKey> keys) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  std::size_t batch_;
  std::chrono::milliseconds timeout_;
};

/// Append-only TSV cache: city, region, country, lat, lon, source, timestamp.
class GeoCache {
 public:
  GeoCache() = default;  // in-memory only
  explicit GeoCache(std::filesystem::path path);

  std::optional<GeoPoint> find(const CityKey& key) const;
  void store(const CityKey& key, const GeoPoint& point);

  std::size_t size() const { return entries_.size(); }
  const std::map<CityKey, GeoPoint>& entries() const { return entries_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Clock used for timestamps; tests pin it.
  std::function<std::string()> timestamp = default_timestamp;
  static std::string default_timestamp();

 private:
  void load();

  std::optional<std::filesystem::path> path_;
  std::map<CityKey, GeoPoint> entries_;
  std::vector<std::string> warnings_;
};

struct GeocodeOptions {
  std::size_t chunk_size = 1000;
  std::chrono::milliseconds batch_spacing{100};
  int retries = 2;
  /// Sleep hook, replaced in tests.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct GeocodeReport {
  std::map<CityKey, GeoPoint> points;
  std::size_t cache_hits = 0;
  std::size_t override_hits = 0;
  std::size_t backend_batches = 0;
  std::size_t failures = 0;
  std::vector<std::string> warnings;
};

/// Lookup order per key: overrides, cache, backend (chunked and rate
/// limited). Every key ends up with exactly one point.
GeocodeReport resolve_all(const std::set<CityKey>& keys, GeocodingBackend& backend, GeoCache& cache,
                          const GeocodeOptions& options = {},
                          const std::map<CityKey, GeoPoint>* overrides = nullptr);

/// Gazetteer-format dump of resolved points (failed ones as 0,0 with their source).
void write_points(std::ostream& out, const std::map<CityKey, GeoPoint>& points);
std::map<CityKey, GeoPoint> read_points(std::istream& in);

}  // namespace cityex
