#pragma once

#include <memory>
#include <string>
#include <vector>

#include "citefield/core.hpp"
#include "citefield/labeler.hpp"
#include "citefield/rng.hpp"
#include "citefield/subword.hpp"

namespace testutil {

using namespace citefield;

inline LabeledCitation make_citation(const std::vector<std::string>& words, const std::vector<FieldLabel>& labels) {
  std::string source;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) source += ' ';
    source += words[i];
  }
  LabeledCitation c = citation_from_text(source, Origin::Task);
  if (c.size() != labels.size()) throw Error("make_citation: tokenization changed the word count");
  c.labels = labels;
  return c;
}

// Lower-case letters plus digits and a few capitals, no merges.
inline std::shared_ptr<const SubwordVocab> char_vocab() {
  std::vector<std::string> pieces = {"[PAD]", "[UNK]", "[MASK]", "[CLS]"};
  for (char c = 'a'; c <= 'z'; ++c) pieces.emplace_back(1, c);
  for (char c : std::string("AJIPTV0123456789.,")) pieces.emplace_back(1, c);
  for (char c = 'a'; c <= 'z'; ++c) pieces.push_back("##" + std::string(1, c));
  return std::make_shared<const SubwordVocab>(pieces);
}

// Every parameter drawn from U(-scale, scale).
inline void randomize(ParamSet& p, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  for (Index i = 0; i < p.size(); ++i) p.values[i] = rng.uniform(-scale, scale);
}

inline LabelerModel tiny_model(std::uint64_t seed, Index d = 2, Index h = 2) {
  LabelerModel m(char_vocab(), LabelerDims{d, h}, seed);
  randomize(m.params, seed + 100);
  return m;
}

}  // namespace testutil
