// pipeline.hpp - configuration and stage orchestration
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cityex/address.hpp"
#include "cityex/emit.hpp"
#include "cityex/excellence.hpp"
#include "cityex/geocoder.hpp"
#include "cityex/record.hpp"

namespace cityex {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;
  Fraction percentile{1, 10};
  double alpha = 0.05;
  bool bonferroni = false;
  bool empirical_pe = false;  // use T/N instead of the nominal percentile
  CountMode count_mode = CountMode::Paper;

  std::string geocoder = "offline";  // offline | http
  std::filesystem::path gazetteer;
  std::filesystem::path overrides;
  std::string endpoint;
  std::filesystem::path cache;
  std::size_t batch_size = 1000;
  int rate_limit_ms = 100;
  int retries = 2;

  std::filesystem::path out_dir = ".";
  std::set<OverlayFormat> formats{OverlayFormat::GpsVisualizer, OverlayFormat::GeoJson,
                                  OverlayFormat::Table, OverlayFormat::Html};
  std::map<OverlayFormat, std::string> file_names{{OverlayFormat::GpsVisualizer, "ztest.txt"},
                                                  {OverlayFormat::GeoJson, "cities.geojson"},
                                                  {OverlayFormat::Table, "ucities.csv"},
                                                  {OverlayFormat::Html, "map.html"}};
  // Empty set disables filtering. Matching is case-insensitive.
  std::set<std::string> doc_types{"ARTICLE"};

  std::string title = "City excellence map";
  std::string tile_url;

  /// Throws ConfigError when a value is out of range. Geocoder settings are
  /// only checked when the stage needs them.
  void validate(bool needs_geocoder = true) const;
};

/// Applies `key = value` lines (# comments, blank lines ignored) on top of
/// `config`. Unknown keys and bad values throw ConfigError.
void apply_config_text(PipelineConfig& config, std::string_view text);
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Sets one key; shared by the config file reader and the CLI.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

std::set<OverlayFormat> parse_formats(std::string_view list);

/// Expands directories to their *.txt files (sorted); plain files pass through.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs);

struct RunReport {
  std::size_t records = 0;  // N after filtering
  ThresholdResult threshold;
  std::size_t cities = 0;
  std::size_t testable = 0;
  std::size_t significant_positive = 0;
  std::size_t significant_negative = 0;
  std::size_t geocode_failures = 0;
  std::size_t unresolved_addresses = 0;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> warnings;

  void print(std::ostream& out) const;
};

// Individual stages. Each reads/writes the documented intermediate files.

struct ParseStageResult {
  std::vector<Record> corpus;
  ParseDiagnostics diagnostics;
  std::size_t filtered_out = 0;
};

ParseStageResult parse_stage(const PipelineConfig& config);

std::set<CityKey> corpus_keys(const std::vector<Record>& corpus);

/// Builds the configured backend and resolves every key.
GeocodeReport geocode_stage(const PipelineConfig& config, const std::set<CityKey>& keys);

struct StatsStageResult {
  ThresholdResult threshold;
  TallyResult tally;
  std::vector<CityStats> stats;
};

StatsStageResult stats_stage(const PipelineConfig& config, const std::vector<Record>& corpus,
                             const std::map<CityKey, GeoPoint>& points);

/// Writes every enabled format; returns the paths written.
std::vector<std::filesystem::path> map_stage(const PipelineConfig& config,
                                             const std::vector<CityStats>& stats);

/// parse -> extract -> threshold -> geocode -> stats -> emit.
/// Throws PipelineError("empty corpus") when nothing usable was read.
RunReport run_pipeline(const PipelineConfig& config);

RunReport summarize(const StatsStageResult& result, std::size_t records, std::size_t failures);

}  // namespace cityex
