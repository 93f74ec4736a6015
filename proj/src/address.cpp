#include <algorithm>
#include <cctype>
#include <map>

#include <omp.h>

#include "cityex/address.hpp"

namespace cityex {
namespace {

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

bool has_digit(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool all_alpha(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c); });
}

bool has_alpha(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c) || c >= 0x80; });
}

bool is_code(std::string_view s, std::size_t min_len, std::size_t max_len) {
  return s.size() >= min_len && s.size() <= max_len && all_alpha(s);
}

// Removes postal-code tokens: anything containing a digit, plus a two-letter
// suffix directly after a four-digit code ("1012 CX").
// "1012" and "NL-1012" both end in a four digit run.
std::size_t trailing_digits(std::string_view w) {
  std::size_t n = 0;
  while (n < w.size() && std::isdigit(static_cast<unsigned char>(w[w.size() - 1 - n]))) ++n;
  return n;
}

std::string strip_postal(std::string_view part) {
  const auto words = split_words(part);
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (has_digit(words[i])) continue;
    if (i > 0 && words[i].size() == 2 && all_alpha(words[i]) && trailing_digits(words[i - 1]) == 4) continue;
    kept.push_back(words[i]);
  }
  return join_words(kept);
}

// "MA 02138", "ON M5S 1A1", "NSW 2006": a state/province code followed by
// postal tokens only.
std::optional<std::string> code_with_postal(std::string_view part) {
  const auto words = split_words(part);
  if (words.size() < 2 || !is_code(words[0], 2, 3)) return std::nullopt;
  for (std::size_t i = 1; i < words.size(); ++i)
    if (!has_digit(words[i])) return std::nullopt;
  return words[0];
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  return out;
}

}  // namespace

std::string CityKey::render() const {
  if (region.empty()) return city + ", " + country;
  return city + ", " + region + ", " + country;
}

std::string canonical_address(std::string_view raw) {
  std::string_view s = raw;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  if (!s.empty() && s.front() == '[') {
    if (auto close = s.find(']'); close != std::string_view::npos) s.remove_prefix(close + 1);
  }
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::optional<CityKey> normalize_city(std::string_view raw_address) {
  std::string s = upper(canonical_address(raw_address));
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();

  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    std::string part = join_words(split_words(std::string_view(s).substr(start, comma - start)));
    if (!part.empty()) parts.push_back(std::move(part));
    start = comma + 1;
  }
  if (parts.size() < 2) return std::nullopt;

  CityKey key;
  std::size_t city_index = parts.size() - 2;

  // Old-style US tail: "MA 02138 USA" or "MA USA".
  const auto tail = split_words(parts.back());
  bool us_tail = false;
  if (tail.size() >= 2 && tail.back() == "USA" && is_code(tail[0], 2, 2)) {
    us_tail = std::all_of(tail.begin() + 1, tail.end() - 1, [](const std::string& w) { return has_digit(w); });
  }
  if (us_tail) {
    key.region = tail[0];
    key.country = "USA";
  } else {
    key.country = strip_postal(parts.back());
    if (parts.size() >= 3) {
      const std::string& prev = parts[parts.size() - 2];
      if (auto code = code_with_postal(prev)) {
        if (key.country == "USA") key.region = *code;
        city_index = parts.size() - 3;
      } else if (key.country == "USA" && is_code(prev, 2, 2)) {
        key.region = prev;
        city_index = parts.size() - 3;
      }
    }
  }
  key.city = strip_postal(parts[city_index]);

  if (key.city.empty() || key.country.empty() || !has_alpha(key.country) || !has_alpha(key.city))
    return std::nullopt;
  return key;
}

std::vector<CityOccurrence> extract_occurrences(const Record& record,
                                                std::vector<std::string>* unresolved) {
  std::vector<std::string> distinct;
  for (const auto& a : record.addresses) {
    std::string canon = canonical_address(a);
    if (canon.empty()) continue;
    if (std::find(distinct.begin(), distinct.end(), canon) == distinct.end())
      distinct.push_back(std::move(canon));
  }
  std::map<CityKey, int> merged;
  for (const auto& a : distinct) {
    if (auto key = normalize_city(a)) {
      ++merged[*key];
    } else if (unresolved) {
      unresolved->push_back(a);
    }
  }
  std::vector<CityOccurrence> out;
  out.reserve(merged.size());
  for (auto& [key, mult] : merged) out.push_back({record.ut, key, mult});
  return out;
}

std::optional<CountMode> parse_count_mode(std::string_view text) {
  if (text == "paper") return CountMode::Paper;
  if (text == "occurrence") return CountMode::Occurrence;
  return std::nullopt;
}

std::string_view to_string(CountMode mode) {
  return mode == CountMode::Paper ? "paper" : "occurrence";
}

namespace {

struct RecordCities {
  std::vector<CityOccurrence> occurrences;
  std::size_t unresolved = 0;
};

RecordCities record_cities(const Record& r) {
  std::vector<std::string> bad;
  RecordCities out{extract_occurrences(r, &bad), bad.size()};
  return out;
}

TallyResult accumulate(const std::vector<Record>& corpus, const std::vector<RecordCities>& per_record,
                       const std::set<std::string>& top_ids, CountMode mode) {
  std::map<CityKey, CityTally> acc;
  TallyResult result;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& rc = per_record[i];
    result.unresolved_addresses += rc.unresolved;
    if (!rc.occurrences.empty()) ++result.records_with_city;
    const bool top = top_ids.contains(corpus[i].ut);
    for (const auto& occ : rc.occurrences) {
      auto& t = acc[occ.key];
      const long weight = mode == CountMode::Paper ? 1 : occ.multiplicity;
      t.n += weight;
      if (top) t.n_top += weight;
      t.occurrences += occ.multiplicity;
    }
  }
  result.tallies.reserve(acc.size());
  for (auto& [key, t] : acc) {
    t.key = key;
    result.tallies.push_back(std::move(t));
  }
  return result;
}

}  // namespace

TallyResult tally_serial(const std::vector<Record>& corpus, const std::set<std::string>& top_ids,
                         CountMode mode) {
  std::vector<RecordCities> per_record;
  per_record.reserve(corpus.size());
  for (const auto& r : corpus) per_record.push_back(record_cities(r));
  return accumulate(corpus, per_record, top_ids, mode);
}

TallyResult tally(const std::vector<Record>& corpus, const std::set<std::string>& top_ids,
                  CountMode mode) {
  std::vector<RecordCities> per_record(corpus.size());
  const auto count = static_cast<std::int64_t>(corpus.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < count; ++i) per_record[i] = record_cities(corpus[i]);
  return accumulate(corpus, per_record, top_ids, mode);
}

void write_cities_txt(std::ostream& out, const std::vector<Record>& corpus) {
  for (const auto& r : corpus)
    for (const auto& occ : extract_occurrences(r))
      for (int m = 0; m < occ.multiplicity; ++m) out << occ.key.render() << '\n';
}

}  // namespace cityex
