#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "citefield/anchor.hpp"
#include "citefield/labeler.hpp"

namespace citefield {

enum class MaskingKind { AnchorPlusRandom, RandomOnly, AttentionProxy, None };

std::string_view masking_kind_name(MaskingKind k);  // anchor, random, attention, none
MaskingKind parse_masking_kind(std::string_view name);

struct ReplacePolicy {
  double mask_prob = 0.8;
  double random_prob = 0.1;
  double keep_prob = 0.1;
};

struct MaskingStrategy {
  MaskingKind kind = MaskingKind::AnchorPlusRandom;
  double mask_fraction = 0.15;
  ReplacePolicy policy;
};

void check_strategy(const MaskingStrategy& s);

enum class MaskAction : std::uint8_t { MaskToken, RandomToken, Keep };

struct MaskedPosition {
  std::size_t position = 0;  // subword position
  MaskAction action = MaskAction::MaskToken;
  std::int32_t replacement = 0;  // id fed to the encoder
  std::int32_t target = 0;       // original id

  bool operator==(const MaskedPosition&) const = default;
};

struct MaskingPlan {
  std::size_t citation_id = 0;
  std::vector<MaskedPosition> positions;  // ascending by position

  bool operator==(const MaskingPlan&) const = default;
};

/// max(1, round(fraction * length)), never more than the non-special positions.
std::size_t mask_budget(const SubwordSequence& seq, double fraction);

/// `anchors` is used by AnchorPlusRandom (may be null: pure random fill);
/// `saliency` holds per-word scores for AttentionProxy.
MaskingPlan build_plan(const SubwordSequence& seq, const AnchorSet* anchors, std::span<const double> saliency,
                       const MaskingStrategy& strategy, std::uint64_t seed, std::size_t vocab_size,
                       std::size_t citation_id = 0);

/// Input ids after applying the plan's replacements.
std::vector<std::int32_t> apply_plan(const SubwordSequence& seq, const MaskingPlan& plan);

/// L1 norm of d(loss)/d(embedding) summed over each word's subwords, where
/// the loss is the labeling NLL against the model's own Viterbi path.
std::vector<double> saliency_proxy(const LabelerModel& model, const SubwordSequence& seq);

/// Encoder + masked-token head. Logits = E^T tanh(T h + t) + b with E the
/// embedding table when tied, a separate V x d matrix otherwise.
class MlmModel {
 public:
  MlmModel(const LabelerModel& base, bool tied, std::uint64_t seed);

  bool tied() const { return tied_; }
  const EncoderLayout& encoder() const { return encoder_; }
  std::size_t vocab_size() const { return static_cast<std::size_t>(encoder_.dims.vocab_size); }

  /// V x m logits for the given subword positions.
  MatrixXd logits(std::span<const std::int32_t> ids, std::span<const std::size_t> positions) const;

  ParamSet params;
  Index transform = -1;       // d x 2h
  Index transform_bias = -1;  // d x 1
  Index output = -1;          // V x d, untied only
  Index output_bias = -1;     // V x 1

 private:
  EncoderLayout encoder_;
  bool tied_ = true;
};

/// Mean cross-entropy over the columns of a V x m logit matrix.
double cross_entropy(const MatrixXd& logits, std::span<const std::int32_t> targets);

struct MlmLoss {
  double loss = 0.0;
  VectorXd grad;
};

/// Mean cross-entropy over the plan's positions. `grad` is allocated when
/// `with_grad` is set.
MlmLoss mlm_loss(const MlmModel& model, const MaskingPlan& plan, const SubwordSequence& seq, bool with_grad = true);

struct PretrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 32;
  double learning_rate = 5e-5;
  std::uint64_t seed = 0;
  bool tied_head = true;
  std::size_t max_len = 128;
  std::size_t eval_size = 64;  // citations in the fixed before/after probe
};

struct PretrainReport {
  std::vector<double> step_loss;
  double initial_loss = 0.0;  // probe loss before the first step
  double final_loss = 0.0;    // probe loss after the last step
  std::size_t masked_positions = 0;
};

/// Updates `model`'s encoder in place; the head is discarded. With strategy
/// None or steps = 0 the model is left untouched.
PretrainReport task_guided_pretrain(LabelerModel& model, std::span<const LabeledCitation> corpus,
                                    std::span<const AnchorSet> anchor_sets,
                                    std::span<const std::vector<double>> saliency, const MaskingStrategy& strategy,
                                    const PretrainConfig& config);

/// Plans task_guided_pretrain would use for its first pass over the corpus.
std::vector<MaskingPlan> preview_plans(const SubwordVocab& vocab, std::span<const LabeledCitation> corpus,
                                       std::span<const AnchorSet> anchor_sets,
                                       std::span<const std::vector<double>> saliency,
                                       const MaskingStrategy& strategy, std::uint64_t seed, std::size_t max_len);

}  // namespace citefield
