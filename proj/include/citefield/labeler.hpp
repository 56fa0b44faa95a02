#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "citefield/core.hpp"
#include "citefield/crf.hpp"
#include "citefield/encoder.hpp"
#include "citefield/subword.hpp"

namespace citefield {

struct LabelerDims {
  Index embed_dim = 64;
  Index hidden_dim = 64;
};

/// Embedding + one bidirectional LSTM layer + per-word emission map +
/// linear-chain CRF over [Author, Title, Venue, Year, Other].
class LabelerModel {
 public:
  LabelerModel(std::shared_ptr<const SubwordVocab> vocab, LabelerDims dims, std::uint64_t seed);

  static LabelerModel load(const std::string& path, std::shared_ptr<const SubwordVocab> vocab);
  void save(const std::string& path) const;
  std::string serialized() const;

  const SubwordVocab& vocab() const { return *vocab_; }
  std::shared_ptr<const SubwordVocab> vocab_ptr() const { return vocab_; }
  LabelerDims dims() const { return dims_; }
  const EncoderLayout& encoder() const { return encoder_; }

  CrfParams crf() const;

  /// n x 5 emission scores, one row per word (first-piece pooling).
  MatrixXd score_table(const SubwordSequence& seq) const;
  MatrixXd score_table(const SubwordSequence& seq, EncoderTrace& trace) const;

  /// Accumulates gradients of a loss whose derivative w.r.t. the emission
  /// table is `emissions_grad` (n x 5) into `grad`.
  void backward_emissions(const SubwordSequence& seq, const EncoderTrace& trace, const MatrixXd& emissions_grad,
                          VectorXd& grad, MatrixXd* input_grad = nullptr) const;
  void add_crf_grad(const CrfParams& crf_grad, VectorXd& grad) const;

  ParamSet params;

  Index emit_weight = -1;  // 5 x 2h
  Index emit_bias = -1;    // 5 x 1
  Index crf_transitions = -1;
  Index crf_start = -1;
  Index crf_stop = -1;

 private:
  LabelerModel(std::shared_ptr<const SubwordVocab> vocab, ParamSet params);
  void resolve_blocks();

  std::shared_ptr<const SubwordVocab> vocab_;
  LabelerDims dims_;
  EncoderLayout encoder_;
};

struct ConfidenceVector {
  MatrixXd marginals;                    // n x 5
  std::vector<std::size_t> venue_positions;
  std::vector<double> venue_confidences; // Venue column at venue_positions
  std::size_t k = 0;
};

ConfidenceVector make_confidence(MatrixXd marginals, std::span<const FieldLabel> reference);

struct LabeledExample {
  SubwordSequence seq;
  LabelPath gold;
};

LabeledExample make_example(const LabeledCitation& c, const SubwordVocab& vocab);
LabelPath to_path(std::span<const FieldLabel> labels);
std::vector<FieldLabel> to_labels(const LabelPath& path);

struct LossAndGradient {
  double loss = 0.0;
  VectorXd grad;
};

/// Mean over the batch of (log Z - gold score) with exact gradients.
LossAndGradient nll_and_gradient(const LabelerModel& model, std::span<const LabeledExample> batch);

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  double clip_norm = 1.0;
};

struct TrainReport {
  std::vector<double> epoch_loss;        // mean training NLL per epoch
  std::vector<double> val_accuracy;      // word accuracy after each epoch
  double initial_loss = 0.0;             // mean training NLL before any update
  std::size_t best_epoch = 0;            // 1-based; 0 = initialization kept
};

/// Trains in place. When `validation` is non-empty the parameters of the
/// epoch with the highest validation word accuracy are kept.
TrainReport train(LabelerModel& model, std::span<const LabeledCitation> train_set,
                  std::span<const LabeledCitation> validation, const TrainConfig& config);

double mean_nll(const LabelerModel& model, std::span<const LabeledExample> examples);
double word_accuracy(const LabelerModel& model, std::span<const LabeledExample> examples);

struct Prediction {
  std::vector<FieldLabel> labels;
  ConfidenceVector confidence;
};

Prediction predict(const LabelerModel& model, const LabeledCitation& citation);

/// Marginals over words only (no reference labels needed).
MatrixXd word_marginals(const LabelerModel& model, std::span<const std::string> words);

/// Predicted labels for every citation; the returned corpus keeps the
/// source/tokens and replaces labels.
std::vector<LabeledCitation> predict_corpus(const LabelerModel& model, std::span<const LabeledCitation> corpus);

}  // namespace citefield
