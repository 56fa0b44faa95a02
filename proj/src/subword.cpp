#include "citefield/subword.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace citefield {

namespace {

constexpr std::size_t kMaxWordChars = 100;

std::string strip_continuation(std::string_view piece) {
  if (piece.substr(0, kContinuation.size()) == kContinuation) return std::string(piece.substr(kContinuation.size()));
  return std::string(piece);
}

}  // namespace

SubwordVocab::SubwordVocab() : SubwordVocab(std::vector<std::string>{}) {}

SubwordVocab::SubwordVocab(std::vector<std::string> pieces) {
  static const std::array<std::string, 4> specials = {"[PAD]", "[UNK]", "[MASK]", "[CLS]"};
  if (pieces.empty()) pieces.assign(specials.begin(), specials.end());
  for (std::size_t i = 0; i < specials.size(); ++i) {
    if (i >= pieces.size() || pieces[i] != specials[i]) throw Error("vocabulary must start with [PAD] [UNK] [MASK] [CLS]");
  }
  for (auto& p : pieces) {
    if (p.empty()) throw Error("vocabulary contains an empty piece");
    if (index_.count(p)) throw Error("vocabulary contains duplicate piece '" + p + "'");
    index_.emplace(p, static_cast<std::int32_t>(pieces_.size()));
    pieces_.push_back(std::move(p));
  }
}

std::optional<std::int32_t> SubwordVocab::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::int32_t SubwordVocab::add(std::string piece) {
  if (auto id = find(piece)) return *id;
  auto id = static_cast<std::int32_t>(pieces_.size());
  index_.emplace(piece, id);
  pieces_.push_back(std::move(piece));
  return id;
}

std::string SubwordVocab::serialize() const {
  std::string out;
  for (const auto& p : pieces_) {
    out += p;
    out += '\n';
  }
  return out;
}

SubwordVocab SubwordVocab::deserialize(std::string_view text) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    pieces.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return SubwordVocab(std::move(pieces));
}

void SubwordVocab::save(const std::string& path) const { write_file(path, serialize()); }

SubwordVocab SubwordVocab::load(const std::string& path) { return deserialize(read_file(path)); }

std::uint64_t SubwordVocab::hash() const { return fnv1a64(serialize()); }

std::vector<std::size_t> SubwordSequence::word_starts() const {
  std::vector<std::size_t> out;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < word_index.size(); ++i) {
    if (word_index[i] && word_index[i] != prev) out.push_back(i);
    prev = word_index[i];
  }
  return out;
}

std::vector<std::string> utf8_chars(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xe ? 3 : (lead >> 3) == 0x1e ? 4 : 1;
    len = std::min(len, word.size() - i);
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

SubwordVocab build_vocab(std::span<const LabeledCitation> corpus, std::size_t target_size,
                         std::size_t min_char_count) {
  if (corpus.empty()) throw Error("build_vocab: empty corpus");

  // Word types in first-seen order so the result depends only on corpus order.
  std::vector<std::string> types;
  std::unordered_map<std::string, std::size_t> type_index;
  std::vector<std::size_t> freq;
  for (const auto& c : corpus) {
    for (const auto& t : c.tokens) {
      auto [it, inserted] = type_index.emplace(t.text, types.size());
      if (inserted) {
        types.push_back(t.text);
        freq.push_back(0);
      }
      ++freq[it->second];
    }
  }

  // Symbol sequences: first char bare, later chars carry the continuation marker.
  std::vector<std::vector<std::string>> words(types.size());
  std::map<std::string, std::size_t> symbol_count;
  for (std::size_t w = 0; w < types.size(); ++w) {
    auto chars = utf8_chars(types[w]);
    for (std::size_t i = 0; i < chars.size(); ++i) {
      std::string s = i == 0 ? chars[i] : std::string(kContinuation) + chars[i];
      symbol_count[s] += freq[w];
      words[w].push_back(std::move(s));
    }
  }
  std::set<std::string> alphabet;
  for (const auto& [s, n] : symbol_count) {
    if (n >= min_char_count) alphabet.insert(s);
  }
  if (target_size < SubwordVocab::kNumSpecial + alphabet.size()) {
    throw Error("build_vocab: target_size " + std::to_string(target_size) + " is below 4 + alphabet size " +
                std::to_string(alphabet.size()));
  }

  SubwordVocab vocab;
  for (const auto& s : alphabet) vocab.add(s);

  // Symbols are interned so pair counting works on integer keys.
  std::vector<std::string> symbol_text;
  std::unordered_map<std::string, std::uint32_t> symbol_id;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = symbol_id.emplace(s, static_cast<std::uint32_t>(symbol_text.size()));
    if (inserted) symbol_text.push_back(s);
    return it->second;
  };

  // Words with out-of-alphabet symbols do not take part in merging.
  std::vector<std::size_t> active;
  std::vector<std::vector<std::uint32_t>> sym(words.size());
  for (std::size_t w = 0; w < words.size(); ++w) {
    bool ok = std::all_of(words[w].begin(), words[w].end(), [&](const std::string& s) { return alphabet.count(s) > 0; });
    if (!ok || words[w].size() < 2 || types[w].size() > kMaxWordChars) continue;
    for (const auto& s : words[w]) sym[w].push_back(intern(s));
    active.push_back(w);
  }

  std::unordered_map<std::uint64_t, std::size_t> pairs;
  while (vocab.size() < target_size) {
    pairs.clear();
    for (std::size_t w : active) {
      const auto& sq = sym[w];
      for (std::size_t i = 0; i + 1 < sq.size(); ++i) pairs[(std::uint64_t{sq[i]} << 32) | sq[i + 1]] += freq[w];
    }
    // Highest count wins; ties go to the lexicographically smallest pair.
    std::uint64_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [key, n] : pairs) {
      if (n < best_count || n < 2) continue;
      if (n == best_count) {
        auto a = std::tie(symbol_text[key >> 32], symbol_text[key & 0xffffffffu]);
        auto b = std::tie(symbol_text[best >> 32], symbol_text[best & 0xffffffffu]);
        if (!(a < b)) continue;
      }
      best = key;
      best_count = n;
    }
    if (best_count < 2) break;
    const auto left = static_cast<std::uint32_t>(best >> 32);
    const auto right = static_cast<std::uint32_t>(best & 0xffffffffu);
    const std::string merged_text = symbol_text[left] + strip_continuation(symbol_text[right]);
    vocab.add(merged_text);
    const std::uint32_t merged = intern(merged_text);

    std::vector<std::size_t> still_active;
    for (std::size_t w : active) {
      auto& sq = sym[w];
      std::size_t out = 0;
      for (std::size_t i = 0; i < sq.size(); ++i) {
        if (i + 1 < sq.size() && sq[i] == left && sq[i + 1] == right) {
          sq[out++] = merged;
          ++i;
        } else {
          sq[out++] = sq[i];
        }
      }
      sq.resize(out);
      if (sq.size() > 1) still_active.push_back(w);
    }
    active = std::move(still_active);
  }
  return vocab;
}

std::vector<std::int32_t> tokenize_word(std::string_view word, const SubwordVocab& vocab) {
  if (word.empty()) throw Error("tokenize_word: empty word");
  if (word.size() > kMaxWordChars) return {SubwordVocab::kUnk};
  auto chars = utf8_chars(word);
  std::vector<std::size_t> offsets;  // byte offset of each char, plus end
  std::size_t off = 0;
  for (const auto& c : chars) {
    offsets.push_back(off);
    off += c.size();
  }
  offsets.push_back(off);

  std::vector<std::int32_t> out;
  std::size_t start = 0;
  std::string candidate;
  while (start < chars.size()) {
    std::size_t end = chars.size();
    std::optional<std::int32_t> found;
    while (end > start) {
      candidate.clear();
      if (start > 0) candidate = kContinuation;
      candidate.append(word.substr(offsets[start], offsets[end] - offsets[start]));
      found = vocab.find(candidate);
      if (found) break;
      --end;
    }
    if (!found) return {SubwordVocab::kUnk};
    out.push_back(*found);
    start = end;
  }
  return out;
}

SubwordSequence encode_words(std::span<const std::string> words, std::span<const FieldLabel> labels,
                             const SubwordVocab& vocab, std::size_t max_len) {
  if (max_len < 2) throw Error("encode: max_len must be at least 2");
  if (!labels.empty() && labels.size() != words.size()) throw Error("encode: label count differs from word count");
  SubwordSequence seq;
  seq.ids.push_back(SubwordVocab::kCls);
  seq.word_index.push_back(std::nullopt);
  seq.labels_subword.push_back(FieldLabel::Other);
  for (std::size_t w = 0; w < words.size(); ++w) {
    auto pieces = tokenize_word(words[w], vocab);
    if (w == 0 && pieces.size() > max_len - 1) throw Error("encode: first word exceeds max_len");
    FieldLabel l = labels.empty() ? FieldLabel::Other : labels[w];
    for (auto id : pieces) {
      if (seq.ids.size() >= max_len) return seq;
      seq.ids.push_back(id);
      seq.word_index.push_back(w);
      seq.labels_subword.push_back(l);
    }
  }
  return seq;
}

SubwordSequence encode_citation(const LabeledCitation& c, const SubwordVocab& vocab, std::size_t max_len) {
  auto words = c.words();
  return encode_words(words, c.labels, vocab, max_len);
}

std::vector<FieldLabel> word_labels(const SubwordSequence& seq) {
  std::vector<FieldLabel> out;
  for (auto p : seq.word_starts()) out.push_back(seq.labels_subword[p]);
  return out;
}

}  // namespace citefield
