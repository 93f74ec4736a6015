#include <algorithm>
#include <charconv>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "cityex/record.hpp"

namespace cityex {
namespace {

constexpr std::string_view kReplacement = "\xEF\xBF\xBD";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_tag_char(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); }

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

struct PendingRecord {
  std::size_t first_line = 0;
  bool active = false;
  Record record;
  bool has_ut = false;
  bool has_tc = false;
  bool tc_valid = true;
  std::string current_tag;

  void reset() { *this = PendingRecord{}; }
};

class ExportParser {
 public:
  explicit ExportParser(const ParseOptions& options) : options_(options) {}

  void feed_line(std::string line, std::size_t lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (const auto fixed = sanitize_utf8(line); fixed > 0)
      warn(lineno, fmt::format("invalid UTF-8: {} sequence(s) replaced", fixed));

    if (trim(line).empty()) return;

    if (after_ef_) {
      if (!warned_after_ef_) warn(lineno, "content after EF ignored");
      warned_after_ef_ = true;
      return;
    }

    if (line.starts_with("   ")) {
      continuation(trim(line), lineno);
      return;
    }

    if (line.size() < 2 || !is_tag_char(line[0]) || !is_tag_char(line[1]) ||
        (line.size() > 2 && line[2] != ' ')) {
      warn(lineno, "unrecognized line ignored");
      return;
    }
    const std::string tag = line.substr(0, 2);
    const std::string_view value = line.size() > 3 ? trim(std::string_view(line).substr(3)) : "";

    if (!seen_content_) {
      seen_content_ = true;
      if (tag != "FN") warn(lineno, "malformed header: missing FN line");
    }

    if (tag == "EF") {
      if (pending_.active) {
        warn(pending_.first_line, "record without ER before EF discarded");
        pending_.reset();
      }
      after_ef_ = true;
      return;
    }
    if (tag == "ER") {
      finish_record(lineno);
      return;
    }
    if (!pending_.active && (tag == "FN" || tag == "VR")) return;

    if (!pending_.active) {
      pending_.active = true;
      pending_.first_line = lineno;
    }
    pending_.current_tag = tag;
    field(tag, value, lineno);
  }

  ParsedCorpus finish(std::size_t last_line) {
    if (pending_.active) {
      warn(pending_.first_line, "truncated file: incomplete record discarded");
      pending_.reset();
    }
    if (!after_ef_ && seen_content_) warn(last_line, "truncated file: missing EF");
    return std::move(out_);
  }

 private:
  void warn(std::size_t line, std::string message) {
    out_.diagnostics.warnings.push_back({line, std::move(message)});
  }

  void field(const std::string& tag, std::string_view value, std::size_t lineno) {
    Record& r = pending_.record;
    if (tag == "UT") {
      r.ut = value;
      pending_.has_ut = !r.ut.empty();
    } else if (tag == "TC") {
      pending_.has_tc = true;
      pending_.tc_valid = parse_int(value, r.times_cited) && r.times_cited >= 0;
    } else if (tag == "PY") {
      if (!parse_int(value, r.pub_year)) warn(lineno, fmt::format("unreadable PY '{}'", value));
    } else if (tag == "DT") {
      r.doc_type = value;
    } else if (tag == "C1") {
      r.addresses.emplace_back(value);
    } else if (options_.keep_extras) {
      auto& slot = r.extras[tag];
      if (!slot.empty()) slot += ' ';
      slot += value;
    }
  }

  void continuation(std::string_view value, std::size_t lineno) {
    if (!pending_.active || pending_.current_tag.empty()) {
      warn(lineno, "continuation line outside a field ignored");
      return;
    }
    Record& r = pending_.record;
    const std::string& tag = pending_.current_tag;
    if (tag == "C1") {
      // A finished address ends with '.'; anything else is a wrapped line.
      if (r.addresses.empty() || r.addresses.back().ends_with('.')) {
        r.addresses.emplace_back(value);
      } else {
        r.addresses.back() += ' ';
        r.addresses.back() += value;
      }
    } else if (tag == "UT" || tag == "TC" || tag == "PY" || tag == "DT") {
      warn(lineno, fmt::format("unexpected continuation of {} ignored", tag));
    } else if (options_.keep_extras) {
      auto& slot = r.extras[tag];
      if (!slot.empty()) slot += ' ';
      slot += value;
    }
  }

  void finish_record(std::size_t lineno) {
    auto skip = [&](std::string why) {
      ++out_.diagnostics.records_skipped;
      warn(pending_.active ? pending_.first_line : lineno, std::move(why));
      pending_.reset();
    };
    if (!pending_.active) return skip("empty record skipped");
    if (!pending_.has_ut) return skip("record without UT skipped");
    if (!pending_.has_tc) return skip(fmt::format("record {} without TC skipped", pending_.record.ut));
    if (!pending_.tc_valid)
      return skip(fmt::format("record {} with invalid TC skipped", pending_.record.ut));
    if (!seen_ut_.insert(pending_.record.ut).second)
      return skip(fmt::format("duplicate UT {} skipped", pending_.record.ut));

    if (pending_.record.addresses.empty()) {
      ++out_.diagnostics.records_without_address;
      warn(pending_.first_line, fmt::format("record {} has no address", pending_.record.ut));
    }
    ++out_.diagnostics.records_parsed;
    out_.records.push_back(std::move(pending_.record));
    pending_.reset();
  }

  ParseOptions options_;
  ParsedCorpus out_;
  PendingRecord pending_;
  std::unordered_set<std::string> seen_ut_;
  bool seen_content_ = false;
  bool after_ef_ = false;
  bool warned_after_ef_ = false;
};

}  // namespace

std::size_t sanitize_utf8(std::string& text) {
  std::string out;
  std::size_t replaced = 0;
  std::size_t i = 0;
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  bool touched = false;
  while (i < n) {
    const unsigned char c = s[i];
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if (c >= 0xC2 && c <= 0xDF) len = 2;
    else if (c >= 0xE0 && c <= 0xEF) len = 3;
    else if (c >= 0xF0 && c <= 0xF4) len = 4;

    bool ok = len > 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) ok = (s[i + k] & 0xC0) == 0x80;
    if (ok && len == 3) {
      if (c == 0xE0 && s[i + 1] < 0xA0) ok = false;  // overlong
      if (c == 0xED && s[i + 1] >= 0xA0) ok = false;  // surrogate
    }
    if (ok && len == 4) {
      if (c == 0xF0 && s[i + 1] < 0x90) ok = false;
      if (c == 0xF4 && s[i + 1] >= 0x90) ok = false;
    }

    if (ok) {
      if (touched) out.append(text, i, len);
      i += len;
    } else {
      if (!touched) {
        out.assign(text, 0, i);
        touched = true;
      }
      out += kReplacement;
      ++replaced;
      ++i;
    }
  }
  if (touched) text = std::move(out);
  return replaced;
}

void ParseDiagnostics::merge(const ParseDiagnostics& other) {
  records_parsed += other.records_parsed;
  records_skipped += other.records_skipped;
  records_without_address += other.records_without_address;
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

bool ParseDiagnostics::has_warning_containing(std::string_view needle) const {
  return std::any_of(warnings.begin(), warnings.end(),
                     [&](const ParseWarning& w) { return w.message.find(needle) != std::string::npos; });
}

ParsedCorpus parse_export(std::istream& in, const ParseOptions& options) {
  ExportParser parser(options);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) parser.feed_line(std::move(line), ++lineno);
  return parser.finish(lineno);
}

ParsedCorpus parse_export_text(std::string_view text, const ParseOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_export(in, options);
}

ParsedCorpus merge_exports(const std::vector<std::string>& texts, const ParseOptions& options) {
  // Files parse independently; the merge below runs in input order.
  std::vector<ParsedCorpus> parts(texts.size());
  const auto count = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t f = 0; f < count; ++f) parts[f] = parse_export_text(texts[f], options);

  ParsedCorpus merged;
  std::unordered_set<std::string> seen;
  for (std::size_t f = 0; f < texts.size(); ++f) {
    ParsedCorpus& part = parts[f];
    for (auto& w : part.diagnostics.warnings) w.message = fmt::format("input {}: {}", f + 1, w.message);
    for (auto& r : part.records) {
      if (!seen.insert(r.ut).second) {
        --part.diagnostics.records_parsed;
        ++part.diagnostics.records_skipped;
        if (r.addresses.empty()) --part.diagnostics.records_without_address;
        part.diagnostics.warnings.push_back(
            {0, fmt::format("input {}: duplicate UT {} across inputs skipped", f + 1, r.ut)});
        continue;
      }
      merged.records.push_back(std::move(r));
    }
    merged.diagnostics.merge(part.diagnostics);
  }
  return merged;
}

namespace {
std::string tsv_safe(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\t', ' ');
  std::replace(out.begin(), out.end(), '\n', ' ');
  return out;
}
}  // namespace

void write_corpus(std::ostream& out, const std::vector<Record>& records) {
  for (const auto& r : records) {
    out << tsv_safe(r.ut) << '\t' << tsv_safe(r.doc_type) << '\t' << r.pub_year << '\t'
        << r.times_cited << '\t' << r.addresses.size() << '\n';
    for (const auto& a : r.addresses) out << '\t' << tsv_safe(a) << '\n';
  }
}

std::vector<Record> read_corpus(std::istream& in) {
  std::vector<Record> records;
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](std::string_view why) {
    return std::runtime_error(fmt::format("corpus line {}: {}", lineno, why));
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '\t') throw bad("address line without record");
    std::vector<std::string_view> cols;
    std::string_view rest = line;
    for (auto tab = rest.find('\t'); tab != std::string_view::npos; tab = rest.find('\t')) {
      cols.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    cols.push_back(rest);
    if (cols.size() != 5) throw bad("expected 5 columns");
    Record r;
    r.ut = cols[0];
    r.doc_type = cols[1];
    std::size_t count = 0;
    if (!parse_int(cols[2], r.pub_year) || !parse_int(cols[3], r.times_cited) ||
        !parse_int(cols[4], count))
      throw bad("bad number");
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(in, line)) throw bad("missing address lines");
      ++lineno;
      if (line.empty() || line.front() != '\t') throw bad("address line must start with a tab");
      r.addresses.push_back(line.substr(1));
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace cityex
