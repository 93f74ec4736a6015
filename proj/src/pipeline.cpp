#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cityex/pipeline.hpp"

namespace cityex {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view list) {
  std::vector<std::string> out;
  while (!list.empty()) {
    auto comma = list.find(',');
    auto item = trim(list.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, v));
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  return out;
}

std::optional<OverlayFormat> parse_format(std::string_view name) {
  for (auto f : {OverlayFormat::GpsVisualizer, OverlayFormat::GeoJson, OverlayFormat::Table, OverlayFormat::Html})
    if (name == to_string(f)) return f;
  return std::nullopt;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError(fmt::format("cannot write {}", path.string()));
  out << body;
}

}  // namespace

std::set<OverlayFormat> parse_formats(std::string_view list) {
  std::set<OverlayFormat> out;
  for (const auto& item : split_list(list)) {
    if (item == "all") {
      out = {OverlayFormat::GpsVisualizer, OverlayFormat::GeoJson, OverlayFormat::Table, OverlayFormat::Html};
      continue;
    }
    auto f = parse_format(item);
    if (!f) throw ConfigError(fmt::format("unknown format '{}' (gpsviz, geojson, table, html)", item));
    out.insert(*f);
  }
  return out;
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  try {
    if (key == "input" || key == "inputs") {
      for (const auto& p : split_list(value)) c.inputs.emplace_back(p);
    } else if (key == "percentile") {
      c.percentile = Fraction::parse(value);
    } else if (key == "alpha") {
      c.alpha = parse_number<double>(key, value);
    } else if (key == "bonferroni") {
      c.bonferroni = parse_bool(key, value);
    } else if (key == "empirical_pe") {
      c.empirical_pe = parse_bool(key, value);
    } else if (key == "count_mode") {
      auto m = parse_count_mode(value);
      if (!m) throw ConfigError(fmt::format("count_mode: expected paper or occurrence, got '{}'", value));
      c.count_mode = *m;
    } else if (key == "geocoder") {
      c.geocoder = value;
    } else if (key == "gazetteer") {
      c.gazetteer = value;
    } else if (key == "overrides") {
      c.overrides = value;
    } else if (key == "endpoint") {
      c.endpoint = value;
    } else if (key == "cache") {
      c.cache = value;
    } else if (key == "batch_size") {
      c.batch_size = parse_number<std::size_t>(key, value);
    } else if (key == "rate_limit_ms") {
      c.rate_limit_ms = parse_number<int>(key, value);
    } else if (key == "retries") {
      c.retries = parse_number<int>(key, value);
    } else if (key == "out") {
      c.out_dir = value;
    } else if (key == "formats") {
      c.formats = parse_formats(value);
    } else if (key == "doc_types") {
      c.doc_types.clear();
      for (const auto& t : split_list(value))
        if (t != "any") c.doc_types.insert(upper(t));
    } else if (key == "title") {
      c.title = value;
    } else if (key == "tile_url") {
      c.tile_url = value;
    } else if (key.starts_with("file.")) {
      auto f = parse_format(key.substr(5));
      if (!f) throw ConfigError(fmt::format("unknown output '{}'", key));
      c.file_names[*f] = value;
    } else {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("config line {}: expected 'key = value'", lineno));
    set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void apply_config_file(PipelineConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str());
}

void PipelineConfig::validate(bool needs_geocoder) const {
  if (!percentile.is_proper_probability())
    throw ConfigError(fmt::format("percentile must lie in (0, 1), got {}", percentile.str()));
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (rate_limit_ms < 0 || retries < 0) throw ConfigError("rate_limit_ms and retries must be >= 0");
  if (!needs_geocoder) return;
  if (geocoder != "offline" && geocoder != "http" && geocoder != "none")
    throw ConfigError(fmt::format("geocoder must be offline, http or none, got '{}'", geocoder));
  if (geocoder == "offline" && gazetteer.empty()) throw ConfigError("offline geocoder needs a gazetteer file");
  if (geocoder == "http" && endpoint.empty()) throw ConfigError("http geocoder needs an endpoint URL");
}

std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".txt") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

void RunReport::print(std::ostream& out) const {
  out << fmt::format(
      "records (N): {}\n"
      "minimum top set (k): {}\n"
      "citation threshold (c): {}\n"
      "top set with ties (T): {}\n"
      "cities: {}\n"
      "testable cities: {}\n"
      "significantly above expectation: {}\n"
      "significantly below expectation: {}\n"
      "geocode failures: {}\n"
      "unresolved addresses: {}\n",
      records, threshold.minimum, threshold.cutoff, threshold.top_size, cities, testable,
      significant_positive, significant_negative, geocode_failures, unresolved_addresses);
  for (const auto& p : outputs) out << "wrote " << p.string() << '\n';
}

ParseStageResult parse_stage(const PipelineConfig& config) {
  std::vector<std::string> texts;
  for (const auto& p : expand_inputs(config.inputs)) texts.push_back(read_file(p));
  ParsedCorpus parsed = merge_exports(texts);

  ParseStageResult result;
  result.diagnostics = std::move(parsed.diagnostics);
  for (auto& r : parsed.records) {
    if (!config.doc_types.empty() && !r.doc_type.empty() && !config.doc_types.contains(upper(r.doc_type))) {
      ++result.filtered_out;
      continue;
    }
    result.corpus.push_back(std::move(r));
  }
  if (result.corpus.empty()) throw PipelineError("empty corpus");
  return result;
}

std::set<CityKey> corpus_keys(const std::vector<Record>& corpus) {
  std::set<CityKey> keys;
  for (const auto& t : tally(corpus, {}).tallies) keys.insert(t.key);
  return keys;
}

GeocodeReport geocode_stage(const PipelineConfig& config, const std::set<CityKey>& keys) {
  std::unique_ptr<GeocodingBackend> backend;
  if (config.geocoder == "offline") {
    backend = std::make_unique<GazetteerBackend>(GazetteerBackend::load(config.gazetteer));
  } else if (config.geocoder == "http") {
    const char* key = std::getenv(HttpBackend::kApiKeyEnv);
    backend = std::make_unique<HttpBackend>(config.endpoint, key ? key : "", config.batch_size);
  } else {
    backend = std::make_unique<GazetteerBackend>();
  }

  GeoCache cache = config.cache.empty() ? GeoCache() : GeoCache(config.cache);
  std::optional<std::map<CityKey, GeoPoint>> overrides;
  if (!config.overrides.empty()) overrides = GazetteerBackend::load(config.overrides).entries();

  GeocodeOptions options;
  options.chunk_size = config.batch_size;
  options.batch_spacing = std::chrono::milliseconds(config.rate_limit_ms);
  options.retries = config.retries;
  return resolve_all(keys, *backend, cache, options, overrides ? &*overrides : nullptr);
}

StatsStageResult stats_stage(const PipelineConfig& config, const std::vector<Record>& corpus,
                             const std::map<CityKey, GeoPoint>& points) {
  StatsStageResult result;
  result.threshold = citation_threshold(corpus, config.percentile);
  const auto top = classify_top(corpus, result.threshold);
  result.tally = tally(corpus, top, config.count_mode);
  if (result.tally.tallies.empty()) throw PipelineError("no extractable addresses in corpus");

  TableOptions options;
  options.p_expected = config.empirical_pe ? Fraction(result.threshold.top_size, result.threshold.total)
                                           : config.percentile;
  options.alpha = config.alpha;
  options.bonferroni = config.bonferroni;
  if (!options.p_expected.is_proper_probability())
    throw PipelineError("empirical top share is 1; every record tied at the cutoff");
  result.stats = city_table(result.tally.tallies, options, points);
  return result;
}

std::vector<fs::path> map_stage(const PipelineConfig& config, const std::vector<CityStats>& stats) {
  std::vector<fs::path> written;
  for (auto f : config.formats) {
    OverlayDocument doc = [&] {
      switch (f) {
        case OverlayFormat::GpsVisualizer: return emit_gpsviz(stats);
        case OverlayFormat::GeoJson: return emit_geojson(stats);
        case OverlayFormat::Table: return emit_table(stats);
        case OverlayFormat::Html: return emit_html(stats, {config.title, config.tile_url});
      }
      return emit_table(stats);
    }();
    const fs::path path = config.out_dir / config.file_names.at(f);
    write_file(path, doc.body);
    written.push_back(path);
  }
  return written;
}

RunReport summarize(const StatsStageResult& result, std::size_t records, std::size_t failures) {
  RunReport report;
  report.records = records;
  report.threshold = result.threshold;
  report.cities = result.stats.size();
  report.unresolved_addresses = result.tally.unresolved_addresses;
  for (const auto& s : result.stats) {
    if (s.testable) ++report.testable;
    if (s.significant && s.observed > s.expected) ++report.significant_positive;
    if (s.significant && s.observed < s.expected) ++report.significant_negative;
  }
  report.geocode_failures = failures;
  return report;
}

RunReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  ParseStageResult parsed = parse_stage(config);

  std::ostringstream corpus_tsv, cities_txt;
  write_corpus(corpus_tsv, parsed.corpus);
  write_cities_txt(cities_txt, parsed.corpus);

  const auto keys = corpus_keys(parsed.corpus);
  if (keys.empty()) throw PipelineError("no extractable addresses in corpus");
  GeocodeReport geo = geocode_stage(config, keys);
  std::ostringstream geo_tsv;
  write_points(geo_tsv, geo.points);

  StatsStageResult stats = stats_stage(config, parsed.corpus, geo.points);
  std::ostringstream stats_tsv;
  write_stats_tsv(stats_tsv, stats.stats);

  write_file(config.out_dir / "corpus.tsv", corpus_tsv.str());
  write_file(config.out_dir / "cities.txt", cities_txt.str());
  write_file(config.out_dir / "geo.tsv", geo_tsv.str());
  write_file(config.out_dir / "stats.tsv", stats_tsv.str());

  RunReport report = summarize(stats, parsed.corpus.size(), geo.failures);
  report.outputs = map_stage(config, stats.stats);
  for (const auto& w : parsed.diagnostics.warnings)
    report.warnings.push_back(w.line ? fmt::format("line {}: {}", w.line, w.message) : w.message);
  report.warnings.insert(report.warnings.end(), geo.warnings.begin(), geo.warnings.end());
  return report;
}

}  // namespace cityex
