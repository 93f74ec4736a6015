// record.hpp - bibliographic records and export parsing
#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace cityex {

struct Record {
  std::string ut;        // accession number, unique within a corpus
  std::string doc_type;  // DT tag, empty when absent
  int pub_year = 0;
  long times_cited = 0;
  std::vector<std::string> addresses;  // one raw C1 entry each
  std::map<std::string, std::string> extras;

  bool has_addresses() const { return !addresses.empty(); }

  friend bool operator==(const Record&, const Record&) = default;
};

struct ParseWarning {
  std::size_t line = 0;  // 1-based, 0 when not tied to a line
  std::string message;

  friend bool operator==(const ParseWarning&, const ParseWarning&) = default;
};

struct ParseDiagnostics {
  std::size_t records_parsed = 0;
  std::size_t records_skipped = 0;
  std::size_t records_without_address = 0;
  std::vector<ParseWarning> warnings;

  void merge(const ParseDiagnostics& other);
  bool has_warning_containing(std::string_view needle) const;
};

struct ParseOptions {
  // Keep unknown tags in Record::extras; otherwise they are dropped.
  bool keep_extras = true;
};

struct ParsedCorpus {
  std::vector<Record> records;
  ParseDiagnostics diagnostics;
};

/// Parses one field-tagged "full record" plain text export (FN/VR header,
/// two-letter tags, three-space continuation lines, ER/EF terminators).
///
/// Never throws on malformed content: problems become warnings, and records
/// without UT or TC are skipped. Invariant:
///   records_parsed + records_skipped == number of ER lines.
ParsedCorpus parse_export(std::istream& in, const ParseOptions& options = {});
ParsedCorpus parse_export_text(std::string_view text, const ParseOptions& options = {});

/// Parses each input and concatenates, keeping the first record per UT.
/// Later duplicates count as skipped and produce a warning.
ParsedCorpus merge_exports(const std::vector<std::string>& texts,
                           const ParseOptions& options = {});

/// Replaces invalid UTF-8 sequences with U+FFFD. Returns the number of
/// replacements made.
std::size_t sanitize_utf8(std::string& text);

// Normalized corpus dump: one tab-separated header line per record
// (ut, doc_type, pub_year, times_cited, address_count) followed by
// address_count lines each starting with a tab.
void write_corpus(std::ostream& out, const std::vector<Record>& records);
std::vector<Record> read_corpus(std::istream& in);

}  // namespace cityex
