#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "citefield/core.hpp"

namespace citefield {

struct Counts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;

  Counts& operator+=(const Counts& o) {
    gold += o.gold;
    predicted += o.predicted;
    correct += o.correct;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool no_predictions = false;  // precision forced to 0
};

/// P = correct/predicted (0 when nothing predicted), R = correct/gold,
/// F1 = 2PR/(P+R) (0 when P+R = 0).
Prf prf(const Counts& c);

/// Counts for the four non-Other fields, indexed by label_index.
using FieldCounts = std::array<Counts, 4>;

FieldCounts token_level(std::span<const FieldLabel> gold, std::span<const FieldLabel> pred);
FieldCounts field_level(std::span<const FieldLabel> gold, std::span<const FieldLabel> pred);

struct CitationCounts {
  FieldCounts token;
  FieldCounts field;
};

CitationCounts score_citation(std::span<const FieldLabel> gold, std::span<const FieldLabel> pred);

struct LevelReport {
  std::array<Prf, 4> per_field;
  std::array<Counts, 4> counts;
  Prf micro;
  Prf macro;  // unweighted mean of per-field P, R and F1
};

struct EvalReport {
  LevelReport token;
  LevelReport field;
  std::size_t citations = 0;
};

/// Micro aggregation: counts are summed before any ratio is taken.
EvalReport aggregate(std::span<const CitationCounts> per_citation);

EvalReport evaluate(std::span<const LabeledCitation> gold, std::span<const LabeledCitation> pred);

std::string report_to_json(const EvalReport& report);

/// Overall micro field-level F1 for a subset-swapped pair of systems.
double overall_field_f1(std::span<const CitationCounts> counts);

struct SignificanceResult {
  double observed_diff = 0.0;  // F1(a) - F1(b), field level, overall micro
  double p_value = 1.0;
  bool exact = false;
  std::size_t trials = 0;
};

/// Paired approximate randomization on overall field-level F1. Corpora of
/// ten citations or fewer are enumerated exactly (p = hits / 2^n);
/// otherwise p = (hits + 1) / (trials + 1).
SignificanceResult significance(std::span<const std::vector<FieldLabel>> pred_a,
                                std::span<const std::vector<FieldLabel>> pred_b,
                                std::span<const std::vector<FieldLabel>> gold, std::size_t trials,
                                std::uint64_t seed);

SignificanceResult significance(std::span<const LabeledCitation> pred_a, std::span<const LabeledCitation> pred_b,
                                std::span<const LabeledCitation> gold, std::size_t trials, std::uint64_t seed);

using FrequencyTable = std::vector<std::pair<std::string, std::size_t>>;

/// Descending count, ties alphabetical.
FrequencyTable rank_frequencies(const std::vector<std::string>& words);

struct MaskingPlan;
struct AnchorSet;
class SubwordVocab;

struct WordRef {
  std::size_t citation = 0;
  std::size_t word = 0;

  bool operator==(const WordRef&) const = default;
};

/// Words touched by each plan (a word counts once per plan however many of
/// its pieces are masked). Sequences are re-encoded with `max_len`.
std::vector<WordRef> masked_words(std::span<const MaskingPlan> plans, std::span<const LabeledCitation> corpus,
                                  const SubwordVocab& vocab, std::size_t max_len);

std::vector<WordRef> anchor_words(std::span<const AnchorSet> sets);

/// Surface forms (case kept) of the referenced words, ranked.
FrequencyTable anchor_frequency(std::span<const WordRef> words, std::span<const LabeledCitation> corpus);

/// Fraction of the referenced words whose gold label is Venue.
double venue_share(std::span<const WordRef> words, std::span<const LabeledCitation> corpus);

std::string frequency_to_json(const FrequencyTable& table, std::size_t top);

}  // namespace citefield
