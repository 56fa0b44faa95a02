#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citefield/core.hpp"
#include "citefield/ingest.hpp"
#include "citefield/rng.hpp"

namespace citefield {

enum class SegmentSource { AuthorList, Year, Title, Venue, VolumeIssue, Pages, Literal };

struct StyleSegment {
  SegmentSource source = SegmentSource::Literal;
  std::string text;  // Literal only
  std::string prefix;
  std::string suffix;
};

enum class AuthorFormat { FamilyCommaInitials, InitialsFamily };

struct CitationStyle {
  std::string name;
  std::vector<StyleSegment> segments;
  AuthorFormat author_format = AuthorFormat::FamilyCommaInitials;
  std::string author_separator = ", ";
  std::string terminal = ".";
};

/// Empty when valid: AuthorList, Year, Title and Venue appear exactly once
/// and literals are non-empty.
std::string check_style(const CitationStyle& style);

struct RenderedCitation {
  LabeledCitation citation;
  std::string style_name;
};

/// "C. E." -> "C.E.", "Jane Q" -> "J.Q.", "J" -> "J".
std::string format_initials(std::string_view given);
std::string format_author(const PersonName& name, AuthorFormat format);
std::string format_author_list(std::span<const PersonName> authors, const CitationStyle& style);

/// Rendered text of one segment for a record; empty when the record lacks
/// the data (the segment is then dropped together with its affixes).
std::string segment_text(const BibRecord& record, const StyleSegment& segment,
                         const CitationStyle& style);

RenderedCitation render(const BibRecord& record, const CitationStyle& style);

struct CorpusOptions {
  std::size_t per_record_styles = 1;
  std::uint64_t seed = 0;
  bool balance = false;
  Origin origin = Origin::Generated;
};

std::vector<RenderedCitation> generate_corpus(std::span<const BibRecord> records,
                                              std::span<const CitationStyle> styles,
                                              const CorpusOptions& options);

/// Extraction-style corruption: each punctuation token is dropped with
/// probability drop_punct and each word is lower-cased with probability
/// lowercase. Tokens are re-joined with single spaces; labels follow their
/// tokens.
struct NoiseOptions {
  double drop_punct = 0.0;
  double lowercase = 0.0;
};

LabeledCitation add_noise(const LabeledCitation& c, const NoiseOptions& options, Rng& rng);

/// harvard-like, ieee-like, chicago-like, plain-numbered, abbrev-initials.
std::vector<CitationStyle> builtin_styles();
const CitationStyle& builtin_style(std::string_view name);

std::string styles_to_json(std::span<const CitationStyle> styles);
std::vector<CitationStyle> styles_from_json(std::string_view text);
std::vector<CitationStyle> load_styles(const std::string& path);

/// Seeded synthetic bibliography spanning five disciplines. Venue names are
/// drawn from journal/conference/proceedings/transactions templates.
std::vector<BibRecord> synthesize_records(std::size_t count, std::uint64_t seed);

}  // namespace citefield
