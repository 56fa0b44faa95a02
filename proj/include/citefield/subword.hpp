#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citefield/core.hpp"

namespace citefield {

inline constexpr std::string_view kContinuation = "##";

class SubwordVocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kMask = 2;
  static constexpr std::int32_t kCls = 3;
  static constexpr std::int32_t kNumSpecial = 4;

  SubwordVocab();
  explicit SubwordVocab(std::vector<std::string> pieces);

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(std::int32_t id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& pieces() const { return pieces_; }
  std::optional<std::int32_t> find(std::string_view piece) const;
  bool contains(std::string_view piece) const { return find(piece).has_value(); }

  /// Appends a piece if absent; returns its id.
  std::int32_t add(std::string piece);

  static bool is_special(std::int32_t id) { return id >= 0 && id < kNumSpecial; }

  /// One piece per line, line order = id.
  std::string serialize() const;
  static SubwordVocab deserialize(std::string_view text);
  void save(const std::string& path) const;
  static SubwordVocab load(const std::string& path);

  std::uint64_t hash() const;

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct SubwordSequence {
  std::vector<std::int32_t> ids;
  std::vector<std::optional<std::size_t>> word_index;  // nullopt for specials
  std::vector<FieldLabel> labels_subword;

  std::size_t size() const { return ids.size(); }
  /// Position of the first piece of each word, in word order.
  std::vector<std::size_t> word_starts() const;
  std::size_t word_count() const { return word_starts().size(); }
};

/// Splits into UTF-8 code points.
std::vector<std::string> utf8_chars(std::string_view word);

SubwordVocab build_vocab(std::span<const LabeledCitation> corpus, std::size_t target_size,
                         std::size_t min_char_count = 1);

std::vector<std::int32_t> tokenize_word(std::string_view word, const SubwordVocab& vocab);

inline constexpr std::size_t kNoTruncation = static_cast<std::size_t>(-1);

SubwordSequence encode_words(std::span<const std::string> words, std::span<const FieldLabel> labels,
                             const SubwordVocab& vocab, std::size_t max_len = kNoTruncation);

SubwordSequence encode_citation(const LabeledCitation& c, const SubwordVocab& vocab,
                                std::size_t max_len = kNoTruncation);

/// Word-level labels read off the first piece of each word.
std::vector<FieldLabel> word_labels(const SubwordSequence& seq);

}  // namespace citefield
