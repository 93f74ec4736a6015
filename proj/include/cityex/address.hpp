// address.hpp - city keys, occurrence extraction and per-city tallies
#pragma once

#include <compare>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cityex/record.hpp"

namespace cityex {

struct CityKey {
  std::string city;
  std::string region;  // empty when not applicable
  std::string country;

  /// "CITY, REGION, COUNTRY" or "CITY, COUNTRY".
  std::string render() const;

  auto operator<=>(const CityKey&) const = default;
  bool operator==(const CityKey&) const = default;
};

/// Extracts (city, region, country) from a raw address. Returns nullopt when
/// the tail cannot be parsed (no comma, no usable country or city token).
std::optional<CityKey> normalize_city(std::string_view raw_address);

/// Drops a leading "[author; author]" group, collapses whitespace, trims.
std::string canonical_address(std::string_view raw_address);

struct CityOccurrence {
  std::string ut;
  CityKey key;
  int multiplicity = 1;

  bool operator==(const CityOccurrence&) const = default;
};

/// One occurrence per distinct address of the record, merged per city key.
/// `unresolved`, when given, receives the addresses that produced no key.
std::vector<CityOccurrence> extract_occurrences(const Record& record,
                                                std::vector<std::string>* unresolved = nullptr);

enum class CountMode { Paper, Occurrence };

std::optional<CountMode> parse_count_mode(std::string_view text);
std::string_view to_string(CountMode mode);

struct CityTally {
  CityKey key;
  long n = 0;
  long n_top = 0;
  long occurrences = 0;

  bool operator==(const CityTally&) const = default;
};

struct TallyResult {
  std::vector<CityTally> tallies;  // sorted by key
  std::size_t unresolved_addresses = 0;
  std::size_t records_with_city = 0;

  bool operator==(const TallyResult&) const = default;
};

/// Per-city counts over the corpus. Parallel over records (OpenMP); the
/// per-thread maps are merged in a fixed order so the result equals
/// tally_serial exactly.
TallyResult tally(const std::vector<Record>& corpus, const std::set<std::string>& top_ids,
                  CountMode mode = CountMode::Paper);
TallyResult tally_serial(const std::vector<Record>& corpus, const std::set<std::string>& top_ids,
                         CountMode mode = CountMode::Paper);

/// cities.txt-style dump: one line per occurrence unit, `city[, region], country`.
void write_cities_txt(std::ostream& out, const std::vector<Record>& corpus);

}  // namespace cityex
