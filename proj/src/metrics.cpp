#include "citefield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "citefield/rng.hpp"
#include "json.hpp"

namespace citefield {

using nlohmann::json;

namespace {

void require_same_length(std::span<const FieldLabel> gold, std::span<const FieldLabel> pred) {
  if (gold.size() != pred.size()) {
    throw Error("label sequences differ in length (" + std::to_string(gold.size()) + " vs " +
                std::to_string(pred.size()) + ")");
  }
}

LevelReport level_report(const FieldCounts& counts) {
  LevelReport r;
  Counts pooled;
  for (std::size_t f = 0; f < 4; ++f) {
    r.counts[f] = counts[f];
    r.per_field[f] = prf(counts[f]);
    pooled += counts[f];
    r.macro.precision += r.per_field[f].precision / 4.0;
    r.macro.recall += r.per_field[f].recall / 4.0;
    r.macro.f1 += r.per_field[f].f1 / 4.0;
  }
  r.micro = prf(pooled);
  return r;
}

json prf_json(const Prf& p) {
  json j = {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
  if (p.no_predictions) j["no_predictions"] = true;
  return j;
}

json level_json(const LevelReport& r) {
  json fields = json::object();
  for (std::size_t f = 0; f < 4; ++f) {
    json cell = prf_json(r.per_field[f]);
    cell["gold"] = r.counts[f].gold;
    cell["predicted"] = r.counts[f].predicted;
    cell["correct"] = r.counts[f].correct;
    fields[std::string(label_name(label_from_index(f)))] = std::move(cell);
  }
  return {{"fields", std::move(fields)}, {"micro", prf_json(r.micro)}, {"macro", prf_json(r.macro)}};
}

}  // namespace

Prf prf(const Counts& c) {
  Prf p;
  p.no_predictions = c.predicted == 0;
  p.precision = c.predicted == 0 ? 0.0 : static_cast<double>(c.correct) / static_cast<double>(c.predicted);
  p.recall = c.gold == 0 ? 0.0 : static_cast<double>(c.correct) / static_cast<double>(c.gold);
  p.f1 = p.precision + p.recall == 0.0 ? 0.0 : 2.0 * p.precision * p.recall / (p.precision + p.recall);
  return p;
}

FieldCounts token_level(std::span<const FieldLabel> gold, std::span<const FieldLabel> pred) {
  require_same_length(gold, pred);
  FieldCounts c{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] != FieldLabel::Other) ++c[label_index(gold[i])].gold;
    if (pred[i] != FieldLabel::Other) ++c[label_index(pred[i])].predicted;
    if (gold[i] == pred[i] && gold[i] != FieldLabel::Other) ++c[label_index(gold[i])].correct;
  }
  return c;
}

FieldCounts field_level(std::span<const FieldLabel> gold, std::span<const FieldLabel> pred) {
  require_same_length(gold, pred);
  FieldCounts c{};
  auto gold_spans = spans_from_labels(gold);
  auto pred_spans = spans_from_labels(pred);
  for (const auto& s : gold_spans) ++c[label_index(s.label)].gold;
  for (const auto& s : pred_spans) {
    ++c[label_index(s.label)].predicted;
    if (std::find(gold_spans.begin(), gold_spans.end(), s) != gold_spans.end()) ++c[label_index(s.label)].correct;
  }
  return c;
}

CitationCounts score_citation(std::span<const FieldLabel> gold, std::span<const FieldLabel> pred) {
  return {token_level(gold, pred), field_level(gold, pred)};
}

EvalReport aggregate(std::span<const CitationCounts> per_citation) {
  if (per_citation.empty()) throw Error("aggregate: empty corpus");
  FieldCounts token{}, field{};
  for (const auto& c : per_citation) {
    for (std::size_t f = 0; f < 4; ++f) {
      token[f] += c.token[f];
      field[f] += c.field[f];
    }
  }
  EvalReport r;
  r.token = level_report(token);
  r.field = level_report(field);
  r.citations = per_citation.size();
  return r;
}

EvalReport evaluate(std::span<const LabeledCitation> gold, std::span<const LabeledCitation> pred) {
  if (gold.size() != pred.size()) throw Error("evaluate: gold and prediction corpora differ in size");
  std::vector<CitationCounts> counts;
  counts.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].source != pred[i].source) throw Error("evaluate: citation " + std::to_string(i) + " differs in source");
    counts.push_back(score_citation(gold[i].labels, pred[i].labels));
  }
  return aggregate(counts);
}

std::string report_to_json(const EvalReport& r) {
  json j = {{"citations", r.citations}, {"token_level", level_json(r.token)}, {"field_level", level_json(r.field)}};
  return j.dump(2) + "\n";
}

double overall_field_f1(std::span<const CitationCounts> counts) {
  Counts pooled;
  for (const auto& c : counts) {
    for (const auto& f : c.field) pooled += f;
  }
  return prf(pooled).f1;
}

SignificanceResult significance(std::span<const std::vector<FieldLabel>> pred_a,
                                std::span<const std::vector<FieldLabel>> pred_b,
                                std::span<const std::vector<FieldLabel>> gold, std::size_t trials,
                                std::uint64_t seed) {
  if (pred_a.size() != gold.size() || pred_b.size() != gold.size()) {
    throw Error("significance: prediction corpora are not aligned with gold");
  }
  const std::size_t n = gold.size();
  // Each citation contributes pooled field-level counts; swapping only
  // exchanges which system owns them.
  std::vector<Counts> ca(n), cb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& f : field_level(gold[i], pred_a[i])) ca[i] += f;
    for (const auto& f : field_level(gold[i], pred_b[i])) cb[i] += f;
  }
  auto diff_for = [&](auto&& swapped) {
    Counts a, b;
    for (std::size_t i = 0; i < n; ++i) {
      if (swapped(i)) {
        a += cb[i];
        b += ca[i];
      } else {
        a += ca[i];
        b += cb[i];
      }
    }
    return prf(a).f1 - prf(b).f1;
  };

  SignificanceResult r;
  r.observed_diff = diff_for([](std::size_t) { return false; });
  const double threshold = std::abs(r.observed_diff) - 1e-12;
  std::size_t hits = 0;
  if (n <= 10) {
    r.exact = true;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double d = diff_for([mask](std::size_t i) { return ((mask >> i) & 1U) != 0; });
      if (std::abs(d) >= threshold) ++hits;
    }
    r.trials = static_cast<std::size_t>(total);
    r.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return r;
  }
  Rng rng(derive_seed(seed, 0x516));
  std::vector<bool> swap(n);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) swap[i] = rng.bernoulli(0.5);
    double d = diff_for([&](std::size_t i) { return swap[i]; });
    if (std::abs(d) >= threshold) ++hits;
  }
  r.trials = trials;
  r.p_value = static_cast<double>(hits + 1) / static_cast<double>(trials + 1);
  return r;
}

SignificanceResult significance(std::span<const LabeledCitation> pred_a, std::span<const LabeledCitation> pred_b,
                                std::span<const LabeledCitation> gold, std::size_t trials, std::uint64_t seed) {
  std::vector<std::vector<FieldLabel>> a, b, g;
  for (const auto& c : pred_a) a.push_back(c.labels);
  for (const auto& c : pred_b) b.push_back(c.labels);
  for (const auto& c : gold) g.push_back(c.labels);
  return significance(a, b, g, trials, seed);
}

FrequencyTable rank_frequencies(const std::vector<std::string>& words) {
  std::map<std::string, std::size_t> counts;
  for (const auto& w : words) ++counts[w];
  FrequencyTable table(counts.begin(), counts.end());
  std::stable_sort(table.begin(), table.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  return table;
}

}  // namespace citefield
