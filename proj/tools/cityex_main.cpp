// cityex - map cities that publish more top-cited papers than expected.
//
//   cityex run      exports... --gazetteer g.tsv --out outdir
//   cityex parse    exports... --out outdir          -> corpus.tsv, cities.txt
//   cityex geocode  --out outdir                     -> geo.tsv
//   cityex stats    --out outdir                     -> stats.tsv
//   cityex map      --out outdir                     -> ztest.txt, cities.geojson, ucities.csv, map.html
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cityex/pipeline.hpp"

namespace {

using cityex::PipelineConfig;
namespace fs = std::filesystem;

struct Flags {
  std::string config_file;
  std::vector<std::string> inputs;
  bool bonferroni = false;
  bool empirical_pe = false;
  std::string corpus, points, stats;
};

void add_config_flags(CLI::App& cmd, Flags& f, std::map<std::string, std::string>& store) {
  cmd.add_option("--config", f.config_file, "key = value configuration file");
  const std::pair<const char*, const char*> options[] = {
      {"percentile", "top share defining excellent papers (default 0.10)"},
      {"alpha", "significance level (default 0.05)"},
      {"count-mode", "paper | occurrence (default paper)"},
      {"geocoder", "offline | http | none (default offline)"},
      {"gazetteer", "gazetteer TSV for the offline geocoder"},
      {"overrides", "gazetteer TSV of manual coordinates, consulted first"},
      {"endpoint", "geocoding service URL for the http geocoder"},
      {"cache", "persistent geocode cache file"},
      {"batch-size", "keys per geocoding request (default 1000)"},
      {"rate-limit-ms", "pause between geocoding batches (default 100)"},
      {"retries", "retries per failed geocoding batch (default 2)"},
      {"out", "output directory (default .)"},
      {"formats", "comma list of gpsviz,geojson,table,html (default all)"},
      {"doc-types", "accepted DT values, 'any' disables the filter (default Article)"},
      {"title", "HTML map title"},
      {"tile-url", "slippy tile URL template for the HTML map, e.g. https://tile.openstreetmap.org/{z}/{x}/{y}.png"},
  };
  for (const auto& [name, help] : options) cmd.add_option(std::string("--") + name, store[name], help);
  cmd.add_flag("--bonferroni", f.bonferroni, "divide alpha by the number of testable cities");
  cmd.add_flag("--empirical-pe", f.empirical_pe, "use the realised top share T/N as p_e");
}

PipelineConfig build_config(CLI::App& cmd, Flags& f, std::map<std::string, std::string>& store) {
  PipelineConfig config;
  if (!f.config_file.empty()) cityex::apply_config_file(config, f.config_file);
  for (auto& [name, value] : store) {
    if (cmd.count("--" + name) == 0) continue;
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    cityex::set_config_value(config, key, value);
  }
  if (f.bonferroni) config.bonferroni = true;
  if (f.empirical_pe) config.empirical_pe = true;
  if (!f.inputs.empty()) {
    config.inputs.clear();
    for (const auto& p : f.inputs) config.inputs.emplace_back(p);
  }
  return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cityex::PipelineError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw cityex::PipelineError(fmt::format("cannot write {}", path.string()));
  out << body;
}

std::vector<cityex::Record> load_corpus(const fs::path& path) {
  std::istringstream in(read_text(path));
  auto corpus = cityex::read_corpus(in);
  if (corpus.empty()) throw cityex::PipelineError("empty corpus");
  return corpus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Find cities publishing more top-cited papers than expected"};
  app.require_subcommand(1);

  Flags flags;

  auto* run = app.add_subcommand("run", "parse, geocode, test and emit all outputs");
  auto* parse = app.add_subcommand("parse", "parse exports into corpus.tsv and cities.txt");
  auto* geocode = app.add_subcommand("geocode", "resolve corpus cities into geo.tsv");
  auto* stats = app.add_subcommand("stats", "threshold, tally and z-test into stats.tsv");
  auto* map = app.add_subcommand("map", "emit overlays and the statistics table from stats.tsv");

  std::map<CLI::App*, std::map<std::string, std::string>> stores;
  for (auto* cmd : {run, parse, geocode, stats, map}) add_config_flags(*cmd, flags, stores[cmd]);
  run->add_option("inputs", flags.inputs, "export files or directories");
  parse->add_option("inputs", flags.inputs, "export files or directories");
  geocode->add_option("--corpus", flags.corpus, "corpus dump (default <out>/corpus.tsv)");
  stats->add_option("--corpus", flags.corpus, "corpus dump (default <out>/corpus.tsv)");
  stats->add_option("--points", flags.points, "geocoded points (default <out>/geo.tsv)");
  map->add_option("--stats", flags.stats, "statistics (default <out>/stats.tsv)");

  CLI11_PARSE(app, argc, argv);

  CLI::App* cmd = app.get_subcommands().front();
  try {
    PipelineConfig config = build_config(*cmd, flags, stores[cmd]);
    const fs::path out = config.out_dir;
    const fs::path corpus_path = flags.corpus.empty() ? out / "corpus.tsv" : fs::path(flags.corpus);

    if (cmd == run) {
      auto report = cityex::run_pipeline(config);
      print_warnings(report.warnings);
      report.print(std::cout);
    } else if (cmd == parse) {
      config.validate(false);
      auto parsed = cityex::parse_stage(config);
      std::ostringstream corpus_tsv, cities_txt;
      cityex::write_corpus(corpus_tsv, parsed.corpus);
      cityex::write_cities_txt(cities_txt, parsed.corpus);
      write_text(out / "corpus.tsv", corpus_tsv.str());
      write_text(out / "cities.txt", cities_txt.str());
      for (const auto& w : parsed.diagnostics.warnings)
        std::cerr << "warning: " << (w.line ? fmt::format("line {}: ", w.line) : "") << w.message << '\n';
      std::cout << fmt::format("records parsed: {}\nrecords skipped: {}\nrecords without address: {}\n"
                               "filtered by document type: {}\nrecords kept: {}\n",
                               parsed.diagnostics.records_parsed, parsed.diagnostics.records_skipped,
                               parsed.diagnostics.records_without_address, parsed.filtered_out,
                               parsed.corpus.size());
    } else if (cmd == geocode) {
      config.validate();
      const auto keys = cityex::corpus_keys(load_corpus(corpus_path));
      auto report = cityex::geocode_stage(config, keys);
      std::ostringstream geo;
      cityex::write_points(geo, report.points);
      write_text(out / "geo.tsv", geo.str());
      print_warnings(report.warnings);
      std::cout << fmt::format("cities: {}\ncache hits: {}\noverrides: {}\nbackend batches: {}\nfailures: {}\n",
                               keys.size(), report.cache_hits, report.override_hits, report.backend_batches,
                               report.failures);
    } else if (cmd == stats) {
      config.validate(false);
      const auto corpus = load_corpus(corpus_path);
      std::istringstream pin(read_text(flags.points.empty() ? out / "geo.tsv" : fs::path(flags.points)));
      const auto points = cityex::read_points(pin);
      auto result = cityex::stats_stage(config, corpus, points);
      std::ostringstream tsv;
      cityex::write_stats_tsv(tsv, result.stats);
      write_text(out / "stats.tsv", tsv.str());
      std::size_t failures = 0;
      for (const auto& s : result.stats) failures += s.point.failed;
      cityex::summarize(result, corpus.size(), failures).print(std::cout);
    } else if (cmd == map) {
      config.validate(false);
      std::istringstream in(read_text(flags.stats.empty() ? out / "stats.tsv" : fs::path(flags.stats)));
      for (const auto& p : cityex::map_stage(config, cityex::read_stats_tsv(in)))
        std::cout << "wrote " << p.string() << '\n';
    }
  } catch (const cityex::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
