#include "citefield/labeler.hpp"

#include <cmath>

#include "json.hpp"

namespace citefield {

using nlohmann::json;

namespace {

json label_order() {
  json arr = json::array();
  for (std::size_t i = 0; i < kNumLabels; ++i) arr.push_back(label_name(label_from_index(i)));
  return arr;
}

}  // namespace

LabelerModel::LabelerModel(std::shared_ptr<const SubwordVocab> vocab, LabelerDims dims, std::uint64_t seed)
    : vocab_(std::move(vocab)), dims_(dims) {
  if (!vocab_) throw Error("labeler: null vocabulary");
  const auto labels = static_cast<Index>(kNumLabels);
  encoder_ = add_encoder(params, {static_cast<Index>(vocab_->size()), dims.embed_dim, dims.hidden_dim});
  emit_weight = params.add("emit.weight", labels, 2 * dims.hidden_dim);
  emit_bias = params.add("emit.bias", labels, 1);
  crf_transitions = params.add("crf.transitions", labels, labels);
  crf_start = params.add("crf.start", labels, 1);
  crf_stop = params.add("crf.stop", labels, 1);
  Rng rng(derive_seed(seed, 0x1abe1));
  init_encoder(params, encoder_, rng);
  uniform_fill(params.view(emit_weight), 1.0 / std::sqrt(static_cast<double>(2 * dims.hidden_dim)), rng);
}

LabelerModel::LabelerModel(std::shared_ptr<const SubwordVocab> vocab, ParamSet p)
    : params(std::move(p)), vocab_(std::move(vocab)) {
  resolve_blocks();
}

void LabelerModel::resolve_blocks() {
  encoder_ = find_encoder(params);
  dims_ = {encoder_.dims.embed_dim, encoder_.dims.hidden_dim};
  emit_weight = params.require("emit.weight");
  emit_bias = params.require("emit.bias");
  crf_transitions = params.require("crf.transitions");
  crf_start = params.require("crf.start");
  crf_stop = params.require("crf.stop");
  if (encoder_.dims.vocab_size != static_cast<Index>(vocab_->size())) {
    throw Error("labeler: embedding table does not match vocabulary size");
  }
}

std::string LabelerModel::serialized() const {
  json meta = {{"embed_dim", dims_.embed_dim},
               {"hidden_dim", dims_.hidden_dim},
               {"vocab_size", vocab_->size()},
               {"vocab_hash", hex64(vocab_->hash())},
               {"labels", label_order()}};
  return model_file_bytes({"labeler", meta.dump(), params});
}

void LabelerModel::save(const std::string& path) const { write_file(path, serialized()); }

LabelerModel LabelerModel::load(const std::string& path, std::shared_ptr<const SubwordVocab> vocab) {
  ModelFile f = read_model_file(path);
  if (f.kind != "labeler") throw Error("'" + path + "' holds a " + f.kind + " model, not a labeler");
  json meta = json::parse(f.metadata);
  if (meta.at("vocab_hash").get<std::string>() != hex64(vocab->hash())) {
    throw Error("'" + path + "' was trained with a different vocabulary");
  }
  if (meta.at("labels") != label_order()) throw Error("'" + path + "' uses a different label order");
  return LabelerModel(std::move(vocab), std::move(f.params));
}

CrfParams LabelerModel::crf() const {
  return {params.view(crf_transitions), params.view(crf_start).col(0), params.view(crf_stop).col(0)};
}

MatrixXd LabelerModel::score_table(const SubwordSequence& seq) const {
  EncoderTrace trace;
  return score_table(seq, trace);
}

MatrixXd LabelerModel::score_table(const SubwordSequence& seq, EncoderTrace& trace) const {
  const auto starts = seq.word_starts();
  if (starts.empty()) throw Error("score_table: sequence has no words");
  encoder_forward(params, encoder_, seq.ids, trace);
  MatrixXd pooled(trace.output.rows(), static_cast<Index>(starts.size()));
  for (std::size_t w = 0; w < starts.size(); ++w) pooled.col(static_cast<Index>(w)) = trace.output.col(static_cast<Index>(starts[w]));
  MatrixXd scores = params.view(emit_weight) * pooled;
  scores.colwise() += params.view(emit_bias).col(0);
  return scores.transpose();
}

void LabelerModel::backward_emissions(const SubwordSequence& seq, const EncoderTrace& trace,
                                      const MatrixXd& emissions_grad, VectorXd& grad, MatrixXd* input_grad) const {
  const auto starts = seq.word_starts();
  MatrixXd pooled(trace.output.rows(), static_cast<Index>(starts.size()));
  for (std::size_t w = 0; w < starts.size(); ++w) pooled.col(static_cast<Index>(w)) = trace.output.col(static_cast<Index>(starts[w]));
  // emissions_grad is n x 5; the forward map is scores = W * pooled + b.
  params.view(grad, emit_weight).noalias() += emissions_grad.transpose() * pooled.transpose();
  params.view(grad, emit_bias).col(0) += emissions_grad.colwise().sum().transpose();
  MatrixXd pooled_grad = params.view(emit_weight).transpose() * emissions_grad.transpose();
  MatrixXd output_grad = MatrixXd::Zero(trace.output.rows(), trace.output.cols());
  for (std::size_t w = 0; w < starts.size(); ++w) output_grad.col(static_cast<Index>(starts[w])) = pooled_grad.col(static_cast<Index>(w));
  encoder_backward(params, encoder_, trace, output_grad, grad, input_grad);
}

void LabelerModel::add_crf_grad(const CrfParams& g, VectorXd& grad) const {
  params.view(grad, crf_transitions) += g.transitions;
  params.view(grad, crf_start).col(0) += g.start;
  params.view(grad, crf_stop).col(0) += g.stop;
}

ConfidenceVector make_confidence(MatrixXd marginals, std::span<const FieldLabel> reference) {
  ConfidenceVector c;
  c.marginals = std::move(marginals);
  const auto venue = static_cast<Index>(label_index(FieldLabel::Venue));
  for (std::size_t i = 0; i < reference.size() && static_cast<Index>(i) < c.marginals.rows(); ++i) {
    if (reference[i] == FieldLabel::Venue) {
      c.venue_positions.push_back(i);
      c.venue_confidences.push_back(c.marginals(static_cast<Index>(i), venue));
    }
  }
  c.k = c.venue_positions.size();
  return c;
}

LabelPath to_path(std::span<const FieldLabel> labels) {
  LabelPath p;
  p.reserve(labels.size());
  for (auto l : labels) p.push_back(label_index(l));
  return p;
}

std::vector<FieldLabel> to_labels(const LabelPath& path) {
  std::vector<FieldLabel> out;
  out.reserve(path.size());
  for (auto i : path) out.push_back(label_from_index(i));
  return out;
}

LabeledExample make_example(const LabeledCitation& c, const SubwordVocab& vocab) {
  LabeledExample e{encode_citation(c, vocab), to_path(c.labels)};
  if (e.seq.word_count() != e.gold.size()) throw Error("example: encoded word count differs from label count");
  return e;
}

LossAndGradient nll_and_gradient(const LabelerModel& model, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw Error("nll_and_gradient: empty batch");
  LossAndGradient out{0.0, model.params.zeros_like()};
  const CrfParams crf = model.crf();
  EncoderTrace trace;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    MatrixXd em = model.score_table(batch[b].seq, trace);
    CrfLoss l = crf_nll(em, crf, batch[b].gold);
    if (!std::isfinite(l.nll) || !em.allFinite()) {
      throw Error("nll_and_gradient: non-finite value at batch item " + std::to_string(b));
    }
    out.loss += l.nll;
    model.add_crf_grad(l.grad, out.grad);
    model.backward_emissions(batch[b].seq, trace, l.emissions_grad, out.grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  out.grad *= inv;
  return out;
}

double mean_nll(const LabelerModel& model, std::span<const LabeledExample> examples) {
  if (examples.empty()) return 0.0;
  const CrfParams crf = model.crf();
  double total = 0.0;
  for (const auto& e : examples) {
    MatrixXd em = model.score_table(e.seq);
    total += forward_backward(em, crf).log_partition - path_score(em, crf, e.gold);
  }
  return total / static_cast<double>(examples.size());
}

double word_accuracy(const LabelerModel& model, std::span<const LabeledExample> examples) {
  const CrfParams crf = model.crf();
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& e : examples) {
    LabelPath p = viterbi(model.score_table(e.seq), crf);
    for (std::size_t i = 0; i < p.size(); ++i) correct += p[i] == e.gold[i];
    total += p.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainReport train(LabelerModel& model, std::span<const LabeledCitation> train_set,
                  std::span<const LabeledCitation> validation, const TrainConfig& config) {
  if (train_set.empty()) throw Error("train: empty dataset");
  if (config.batch_size == 0) throw Error("train: batch_size must be positive");
  if (!(config.learning_rate > 0)) throw Error("train: learning_rate must be positive");

  std::vector<LabeledExample> examples;
  examples.reserve(train_set.size());
  for (const auto& c : train_set) examples.push_back(make_example(c, model.vocab()));
  std::vector<LabeledExample> val;
  for (const auto& c : validation) val.push_back(make_example(c, model.vocab()));

  TrainReport report;
  report.initial_loss = mean_nll(model, examples);
  if (config.epochs == 0) return report;

  Adam adam(model.params.size(), {config.learning_rate, 0.9, 0.999, 1e-6, config.clip_norm});
  VectorXd best_params = model.params.values;
  double best_acc = val.empty() ? 0.0 : word_accuracy(model, val);

  std::vector<std::size_t> order(examples.size());
  std::vector<LabeledExample> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(config.seed, epoch));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(examples[order[i]]);
      }
      LossAndGradient lg = nll_and_gradient(model, batch);
      if (!std::isfinite(lg.loss)) throw Error("train: non-finite loss in epoch " + std::to_string(epoch));
      adam.step(model.params.values, lg.grad);
      if (!model.params.all_finite()) throw Error("train: parameters diverged in epoch " + std::to_string(epoch));
      epoch_loss += lg.loss;
      ++batches;
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
    if (!val.empty()) {
      double acc = word_accuracy(model, val);
      report.val_accuracy.push_back(acc);
      if (acc > best_acc) {
        best_acc = acc;
        best_params = model.params.values;
        report.best_epoch = epoch;
      }
    } else {
      report.best_epoch = epoch;
    }
  }
  if (!val.empty()) model.params.values = best_params;
  return report;
}

MatrixXd word_marginals(const LabelerModel& model, std::span<const std::string> words) {
  SubwordSequence seq = encode_words(words, {}, model.vocab());
  return forward_backward(model.score_table(seq), model.crf()).marginals;
}

Prediction predict(const LabelerModel& model, const LabeledCitation& citation) {
  auto words = citation.words();
  SubwordSequence seq = encode_words(words, {}, model.vocab());
  MatrixXd em = model.score_table(seq);
  const CrfParams crf = model.crf();
  Prediction p;
  p.labels = to_labels(viterbi(em, crf));
  p.confidence = make_confidence(forward_backward(em, crf).marginals, citation.labels);
  return p;
}

std::vector<LabeledCitation> predict_corpus(const LabelerModel& model, std::span<const LabeledCitation> corpus) {
  std::vector<LabeledCitation> out;
  out.reserve(corpus.size());
  const CrfParams crf = model.crf();
  for (const auto& c : corpus) {
    LabeledCitation p = c;
    auto words = c.words();
    p.labels = to_labels(viterbi(model.score_table(encode_words(words, {}, model.vocab())), crf));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace citefield
