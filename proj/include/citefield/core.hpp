#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace citefield {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Label order is fixed and persisted with every model.
enum class FieldLabel : std::uint8_t { Author = 0, Title = 1, Venue = 2, Year = 3, Other = 4 };

inline constexpr std::size_t kNumLabels = 5;
inline constexpr std::array<FieldLabel, 4> kFieldLabels = {
    FieldLabel::Author, FieldLabel::Title, FieldLabel::Venue, FieldLabel::Year};

inline constexpr std::size_t label_index(FieldLabel l) { return static_cast<std::size_t>(l); }
inline constexpr FieldLabel label_from_index(std::size_t i) { return static_cast<FieldLabel>(i); }

std::string_view label_name(FieldLabel l);
FieldLabel parse_label(std::string_view name);

struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const Token&) const = default;
};

enum class Origin : std::uint8_t { Task, Generated };

std::string_view origin_name(Origin o);
Origin parse_origin(std::string_view name);

struct LabeledCitation {
  std::string source;
  std::vector<Token> tokens;
  std::vector<FieldLabel> labels;
  Origin origin = Origin::Task;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> words() const;
  bool operator==(const LabeledCitation&) const = default;
};

struct FieldSpan {
  FieldLabel label = FieldLabel::Other;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool operator==(const FieldSpan&) const = default;
};

/// Maximal runs of identical non-Other labels, in order.
std::vector<FieldSpan> spans_from_labels(std::span<const FieldLabel> labels);

/// Writes each span's label onto an all-Other vector of length n.
std::vector<FieldLabel> paint_spans(std::span<const FieldSpan> spans, std::size_t n);

enum class ViolationKind { LengthMismatch, Empty, BadSpan, NonMonotonic, TextMismatch };

struct Violation {
  ViolationKind kind;
  std::size_t token_index = 0;
  std::string message;
};

std::vector<Violation> validate_citation(const LabeledCitation& c);

/// Word-level tokenizer: whitespace separates, every ASCII punctuation
/// character is its own token, everything else (including UTF-8 bytes)
/// forms word runs.
std::vector<Token> tokenize_words(std::string_view source, std::size_t offset = 0);

bool is_punct_char(char c);

/// Builds an unlabeled citation (all Other) from raw text.
LabeledCitation citation_from_text(std::string source, Origin origin = Origin::Generated);

// Line-delimited JSON citation files. Serialization is canonical, so
// read -> write reproduces the input byte for byte.
std::string citation_to_line(const LabeledCitation& c);
LabeledCitation citation_from_line(std::string_view line);

void write_citations(std::ostream& out, std::span<const LabeledCitation> corpus);
std::vector<LabeledCitation> read_citations(std::istream& in);
void save_citations(const std::string& path, std::span<const LabeledCitation> corpus);
std::vector<LabeledCitation> load_citations(const std::string& path);

std::string normalize_whitespace(std::string_view s);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace citefield
