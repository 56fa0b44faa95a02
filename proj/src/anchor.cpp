#include "citefield/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace citefield {

using nlohmann::json;

namespace {

constexpr auto kVenue = static_cast<Index>(label_index(FieldLabel::Venue));

std::vector<std::size_t> venue_positions(const LabeledCitation& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.labels.size(); ++i) {
    if (c.labels[i] == FieldLabel::Venue) out.push_back(i);
  }
  return out;
}

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Venue marginals of the remaining venue words after deleting `drop`.
std::vector<double> reduced_confidences(const ConfidenceModel& model, const std::vector<std::string>& words,
                                        const std::vector<std::size_t>& venue, std::size_t drop) {
  std::vector<std::string> kept;
  kept.reserve(words.size() - 1);
  for (std::size_t j = 0; j < words.size(); ++j) {
    if (j != drop) kept.push_back(words[j]);
  }
  MatrixXd m = model.marginals(kept);
  std::vector<double> out;
  for (std::size_t v : venue) {
    if (v == drop) continue;
    out.push_back(m(static_cast<Index>(v > drop ? v - 1 : v), kVenue));
  }
  return out;
}

AnchorSet score_citation(const ConfidenceModel& model, const LabeledCitation& c, std::size_t id,
                         const AnchorConfig& config) {
  AnchorSet set;
  set.citation_id = id;
  const auto venue = venue_positions(c);
  if (venue.size() < config.min_venue_tokens || venue.size() < 2) {
    set.degenerate = true;
    return set;
  }
  const auto words = c.words();
  MatrixXd full = model.marginals(words);
  std::vector<double> full_venue;
  for (std::size_t v : venue) full_venue.push_back(full(static_cast<Index>(v), kVenue));
  for (std::size_t v : venue) {
    const auto reduced = reduced_confidences(model, words, venue, v);
    double s = leave_one_out_score(full_venue, reduced);
    set.scores.push_back({v, s});
    if (s > config.delta) set.members.push_back(v);
  }
  return set;
}

void check_config(const AnchorConfig& config) {
  if (!(config.delta > 0)) throw Error("anchor config: delta must be positive");
}

}  // namespace

double leave_one_out_score(std::span<const double> full_venue, std::span<const double> reduced_venue) {
  if (full_venue.empty() || reduced_venue.empty()) throw DegenerateVenueError("leave-one-out score needs k >= 2");
  if (reduced_venue.size() + 1 != full_venue.size()) throw Error("leave-one-out score: expected k-1 reduced values");
  return mean(full_venue) - mean(reduced_venue);
}

AnchorScore anchor_score(const ConfidenceModel& model, const LabeledCitation& citation, std::size_t position,
                         const AnchorConfig& config) {
  check_config(config);
  if (position >= citation.labels.size() || citation.labels[position] != FieldLabel::Venue) {
    throw Error("anchor_score: word " + std::to_string(position) + " is not labeled Venue");
  }
  const auto venue = venue_positions(citation);
  if (venue.size() < std::max<std::size_t>(config.min_venue_tokens, 2)) {
    throw DegenerateVenueError("anchor_score: citation has " + std::to_string(venue.size()) + " venue words");
  }
  const auto words = citation.words();
  MatrixXd full = model.marginals(words);
  std::vector<double> full_venue;
  for (std::size_t v : venue) full_venue.push_back(full(static_cast<Index>(v), kVenue));
  return {position, leave_one_out_score(full_venue, reduced_confidences(model, words, venue, position))};
}

std::vector<AnchorSet> extract_anchor_sets(const ConfidenceModel& model, std::span<const LabeledCitation> dataset,
                                           const AnchorConfig& config) {
  check_config(config);
  std::vector<AnchorSet> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) out.push_back(score_citation(model, dataset[i], i, config));
  return out;
}

std::vector<AnchorSet> direct_anchor_sets(const ConfidenceModel& model, std::span<const LabeledCitation> corpus,
                                          const AnchorConfig& config) {
  return extract_anchor_sets(model, corpus, config);
}

// ---------------------------------------------------------------------------
// Selector

SelectorModel::SelectorModel(std::shared_ptr<const SubwordVocab> vocab, LabelerDims dims, std::uint64_t seed)
    : vocab_(std::move(vocab)) {
  if (!vocab_) throw Error("selector: null vocabulary");
  encoder_ = add_encoder(params, {static_cast<Index>(vocab_->size()), dims.embed_dim, dims.hidden_dim});
  head_weight = params.add("sel.weight", 2, 2 * dims.hidden_dim);
  head_bias = params.add("sel.bias", 2, 1);
  Rng rng(derive_seed(seed, 0x5e1ec7));
  init_encoder(params, encoder_, rng);
  uniform_fill(params.view(head_weight), 1.0 / std::sqrt(static_cast<double>(2 * dims.hidden_dim)), rng);
}

SelectorModel::SelectorModel(std::shared_ptr<const SubwordVocab> vocab, ParamSet p, double t)
    : params(std::move(p)), threshold(t), vocab_(std::move(vocab)) {
  encoder_ = find_encoder(params);
  head_weight = params.require("sel.weight");
  head_bias = params.require("sel.bias");
  if (encoder_.dims.vocab_size != static_cast<Index>(vocab_->size())) {
    throw Error("selector: embedding table does not match vocabulary size");
  }
}

SelectorModel SelectorModel::from_labeler(const LabelerModel& labeler, std::uint64_t seed) {
  SelectorModel s(labeler.vocab_ptr(), labeler.dims(), seed);
  s.params.copy_blocks_from(labeler.params, "enc.");
  return s;
}

std::string SelectorModel::serialized() const {
  json meta = {{"embed_dim", encoder_.dims.embed_dim},
               {"hidden_dim", encoder_.dims.hidden_dim},
               {"vocab_size", vocab_->size()},
               {"vocab_hash", hex64(vocab_->hash())},
               {"threshold", threshold}};
  return model_file_bytes({"selector", meta.dump(), params});
}

void SelectorModel::save(const std::string& path) const { write_file(path, serialized()); }

SelectorModel SelectorModel::load(const std::string& path, std::shared_ptr<const SubwordVocab> vocab) {
  ModelFile f = read_model_file(path);
  if (f.kind != "selector") throw Error("'" + path + "' holds a " + f.kind + " model, not a selector");
  json meta = json::parse(f.metadata);
  if (meta.at("vocab_hash").get<std::string>() != hex64(vocab->hash())) {
    throw Error("'" + path + "' was trained with a different vocabulary");
  }
  return SelectorModel(std::move(vocab), std::move(f.params), meta.at("threshold").get<double>());
}

MatrixXd SelectorModel::logits(const SubwordSequence& seq, EncoderTrace& trace) const {
  const auto starts = seq.word_starts();
  encoder_forward(params, encoder_, seq.ids, trace);
  MatrixXd pooled(trace.output.rows(), static_cast<Index>(starts.size()));
  for (std::size_t w = 0; w < starts.size(); ++w) pooled.col(static_cast<Index>(w)) = trace.output.col(static_cast<Index>(starts[w]));
  MatrixXd z = params.view(head_weight) * pooled;
  z.colwise() += params.view(head_bias).col(0);
  return z;  // 2 x n
}

namespace {

MatrixXd softmax_columns(const MatrixXd& z) {
  MatrixXd p(z.rows(), z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    const double m = z.col(j).maxCoeff();
    p.col(j) = (z.col(j).array() - m).exp().matrix();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

}  // namespace

MatrixXd SelectorModel::probabilities(std::span<const std::string> words) const {
  if (words.empty()) return MatrixXd(0, 2);
  SubwordSequence seq = encode_words(words, {}, *vocab_);
  EncoderTrace trace;
  return softmax_columns(logits(seq, trace)).transpose();
}

double SelectorModel::loss_and_gradient(const SubwordSequence& seq, std::span<const int> targets,
                                        double positive_weight, VectorXd& grad, double scale) const {
  EncoderTrace trace;
  MatrixXd z = logits(seq, trace);
  const Index n = z.cols();
  if (static_cast<std::size_t>(n) != targets.size()) throw Error("selector: target count differs from word count");
  MatrixXd p = softmax_columns(z);
  MatrixXd dz = p;
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index j = 0; j < n; ++j) {
    const int y = targets[static_cast<std::size_t>(j)];
    const double w = y == 1 ? positive_weight : 1.0;
    loss -= w * std::log(std::max(p(y, j), 1e-300));
    dz(y, j) -= 1.0;
    dz.col(j) *= w * inv_n * scale;
  }
  const auto starts = seq.word_starts();
  MatrixXd pooled(trace.output.rows(), n);
  for (Index w = 0; w < n; ++w) pooled.col(w) = trace.output.col(static_cast<Index>(starts[static_cast<std::size_t>(w)]));
  params.view(grad, head_weight).noalias() += dz * pooled.transpose();
  params.view(grad, head_bias).col(0) += dz.rowwise().sum();
  MatrixXd pooled_grad = params.view(head_weight).transpose() * dz;
  MatrixXd output_grad = MatrixXd::Zero(trace.output.rows(), trace.output.cols());
  for (Index w = 0; w < n; ++w) output_grad.col(static_cast<Index>(starts[static_cast<std::size_t>(w)])) = pooled_grad.col(w);
  encoder_backward(params, encoder_, trace, output_grad, grad);
  return loss * inv_n;
}

namespace {

std::vector<int> anchor_targets(const AnchorSet& set, std::size_t n) {
  std::vector<int> t(n, 0);
  for (std::size_t m : set.members) {
    if (m < n) t[m] = 1;
  }
  return t;
}

}  // namespace

TrainedSelector train_selector(std::span<const AnchorSet> anchor_sets, std::span<const LabeledCitation> dataset,
                               const SelectorConfig& config, const LabelerModel& init) {
  if (anchor_sets.size() != dataset.size()) throw Error("train_selector: anchor sets are not aligned with the dataset");
  if (dataset.empty()) throw Error("train_selector: empty dataset");
  if (config.batch_size == 0) throw Error("train_selector: batch_size must be positive");

  SelectorModel model = SelectorModel::from_labeler(init, derive_seed(config.seed, 1));
  model.threshold = config.threshold;

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(config.seed, 2));
  split_rng.shuffle(order);
  const auto n_hold = static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> hold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_hold, order.size() - 1)));
  std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(hold.size()), order.end());
  std::sort(hold.begin(), hold.end());
  std::sort(fit.begin(), fit.end());

  struct Item {
    SubwordSequence seq;
    std::vector<int> targets;
  };
  std::vector<Item> items;
  TrainedSelector out{std::move(model), {}};
  SelectorReport& report = out.report;
  for (std::size_t i : fit) {
    const auto& c = dataset[i];
    if (anchor_sets[i].citation_id != i) throw Error("train_selector: anchor set " + std::to_string(i) + " has a different citation id");
    Item it{encode_citation(c, out.model.vocab()), anchor_targets(anchor_sets[i], c.size())};
    for (int t : it.targets) (t == 1 ? report.positives : report.negatives) += 1;
    items.push_back(std::move(it));
  }
  report.train_citations = fit.size();
  report.holdout_citations = hold.size();
  if (report.positives == 0) throw Error("train_selector: no anchor words in the training split");
  report.class_weight = config.class_weight >= 0
                            ? config.class_weight
                            : static_cast<double>(report.negatives) / static_cast<double>(report.positives);

  if (config.epochs == 0) {
    report.warning = "epochs=0: selector is untrained";
  } else {
    Adam adam(out.model.params.size(), {config.learning_rate, 0.9, 0.999, 1e-6, 1.0});
    std::vector<std::size_t> perm(items.size());
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      Rng rng(derive_seed(config.seed, 100 + epoch));
      rng.shuffle(perm);
      double total = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < perm.size(); start += config.batch_size) {
        const std::size_t end = std::min(perm.size(), start + config.batch_size);
        VectorXd grad = out.model.params.zeros_like();
        double loss = 0.0;
        const double scale = 1.0 / static_cast<double>(end - start);
        for (std::size_t b = start; b < end; ++b) {
          const Item& it = items[perm[b]];
          loss += out.model.loss_and_gradient(it.seq, it.targets, report.class_weight, grad, scale) * scale;
        }
        if (!std::isfinite(loss)) throw Error("train_selector: non-finite loss in epoch " + std::to_string(epoch));
        adam.step(out.model.params.values, grad);
        total += loss;
        ++batches;
      }
      report.epoch_loss.push_back(total / static_cast<double>(batches));
    }
  }

  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i : hold) {
    const auto words = dataset[i].words();
    MatrixXd p = out.model.probabilities(words);
    const auto t = anchor_targets(anchor_sets[i], words.size());
    for (std::size_t w = 0; w < words.size(); ++w) {
      const bool pred = p(static_cast<Index>(w), 1) > out.model.threshold;
      tp += pred && t[w] == 1;
      fp += pred && t[w] == 0;
      fn += !pred && t[w] == 1;
    }
  }
  report.holdout_precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  report.holdout_recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (report.holdout_recall == 0.0 && tp + fn > 0) {
    if (!report.warning.empty()) report.warning += "; ";
    report.warning += "held-out anchor recall is 0";
  }
  return out;
}

std::vector<AnchorSet> select_anchors(const SelectorModel& selector, std::span<const LabeledCitation> corpus) {
  std::vector<AnchorSet> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    AnchorSet s;
    s.citation_id = i;
    const auto words = corpus[i].words();
    MatrixXd p = selector.probabilities(words);
    for (std::size_t w = 0; w < words.size(); ++w) {
      const double a = p(static_cast<Index>(w), 1);
      s.scores.push_back({w, a});
      if (a > selector.threshold) s.members.push_back(w);
    }
    out.push_back(std::move(s));
  }
  return out;
}

double anchor_agreement(std::span<const AnchorSet> a, std::span<const AnchorSet> b) {
  std::set<std::pair<std::size_t, std::size_t>> sa, sb;
  for (const auto& s : a) {
    for (auto m : s.members) sa.insert({s.citation_id, m});
  }
  for (const auto& s : b) {
    for (auto m : s.members) sb.insert({s.citation_id, m});
  }
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

std::string anchor_set_to_line(const AnchorSet& s) {
  json scores = json::array();
  for (const auto& x : s.scores) scores.push_back(json::array({x.token_index, x.score}));
  json j = {{"citation", s.citation_id}, {"members", s.members}, {"scores", std::move(scores)},
            {"degenerate", s.degenerate}};
  return j.dump();
}

AnchorSet anchor_set_from_line(std::string_view line) {
  json j = json::parse(line);
  AnchorSet s;
  s.citation_id = j.at("citation").get<std::size_t>();
  s.members = j.at("members").get<std::vector<std::size_t>>();
  for (const auto& x : j.at("scores")) s.scores.push_back({x.at(0).get<std::size_t>(), x.at(1).get<double>()});
  s.degenerate = j.value("degenerate", false);
  return s;
}

void save_anchor_sets(const std::string& path, std::span<const AnchorSet> sets) {
  std::string out;
  for (const auto& s : sets) {
    out += anchor_set_to_line(s);
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<AnchorSet> load_anchor_sets(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<AnchorSet> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(anchor_set_from_line(line));
    } catch (const json::exception& e) {
      throw Error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace citefield
