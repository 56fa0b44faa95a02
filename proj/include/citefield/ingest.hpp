#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citefield/core.hpp"

namespace citefield {

struct PersonName {
  std::string family;
  std::string given;

  bool operator==(const PersonName&) const = default;
};

struct PageRange {
  std::string first;
  std::string last;

  bool operator==(const PageRange&) const = default;
};

struct BibRecord {
  std::vector<PersonName> authors;
  std::string title;
  std::string venue;
  int year = 0;
  std::optional<std::string> volume;
  std::optional<std::string> issue;
  std::optional<PageRange> pages;
  std::optional<std::string> discipline;

  bool operator==(const BibRecord&) const = default;
};

inline constexpr int kMinYear = 1800;
inline constexpr int kMaxYear = 2100;

/// Empty string when the record satisfies its invariants, otherwise the
/// first problem found.
std::string check_record(const BibRecord& r);

enum class RecordFormat { Lines, Bibtex };

RecordFormat parse_record_format(std::string_view name);

struct RecordDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct ReadResult {
  std::vector<BibRecord> records;
  std::vector<RecordDiagnostic> diagnostics;
};

/// Lenient mode skips bad records and reports them; strict mode throws on
/// the first one.
ReadResult parse_records(std::string_view text, RecordFormat format, bool strict = false);
ReadResult read_records(const std::string& path, RecordFormat format, bool strict = false);

/// Parses a single @article / @inproceedings / @book entry.
BibRecord parse_bibtex_entry(std::string_view text);

/// "Family, Given" or "Given Family".
PersonName parse_person_name(std::string_view text);

std::string record_to_line(const BibRecord& r);
BibRecord record_from_line(std::string_view line);
void save_records(const std::string& path, std::span<const BibRecord> records);

}  // namespace citefield
