#include <algorithm>

#include "citefield/anchor.hpp"
#include "citefield/metrics.hpp"
#include "citefield/pretrain.hpp"
#include "json.hpp"

namespace citefield {

std::vector<WordRef> masked_words(std::span<const MaskingPlan> plans, std::span<const LabeledCitation> corpus,
                                  const SubwordVocab& vocab, std::size_t max_len) {
  std::vector<WordRef> out;
  for (const auto& plan : plans) {
    if (plan.citation_id >= corpus.size()) throw Error("masking plan refers to citation " + std::to_string(plan.citation_id));
    SubwordSequence seq = encode_citation(corpus[plan.citation_id], vocab, max_len);
    std::vector<std::size_t> words;
    for (const auto& m : plan.positions) {
      if (m.position < seq.size() && seq.word_index[m.position]) words.push_back(*seq.word_index[m.position]);
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (std::size_t w : words) out.push_back({plan.citation_id, w});
  }
  return out;
}

std::vector<WordRef> anchor_words(std::span<const AnchorSet> sets) {
  std::vector<WordRef> out;
  for (const auto& s : sets) {
    for (std::size_t m : s.members) out.push_back({s.citation_id, m});
  }
  return out;
}

FrequencyTable anchor_frequency(std::span<const WordRef> words, std::span<const LabeledCitation> corpus) {
  std::vector<std::string> forms;
  forms.reserve(words.size());
  for (const auto& r : words) {
    if (r.citation >= corpus.size() || r.word >= corpus[r.citation].size()) throw Error("anchor_frequency: reference out of range");
    forms.push_back(corpus[r.citation].tokens[r.word].text);
  }
  return rank_frequencies(forms);
}

double venue_share(std::span<const WordRef> words, std::span<const LabeledCitation> corpus) {
  if (words.empty()) return 0.0;
  std::size_t venue = 0;
  for (const auto& r : words) venue += corpus[r.citation].labels.at(r.word) == FieldLabel::Venue;
  return static_cast<double>(venue) / static_cast<double>(words.size());
}

std::string frequency_to_json(const FrequencyTable& table, std::size_t top) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(top, table.size()); ++i) {
    arr.push_back({{"token", table[i].first}, {"count", table[i].second}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace citefield
