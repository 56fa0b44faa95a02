#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "citefield/labeler.hpp"

namespace citefield {

struct AnchorScore {
  std::size_t token_index = 0;
  double score = 0.0;

  bool operator==(const AnchorScore&) const = default;
};

struct AnchorSet {
  std::size_t citation_id = 0;
  std::vector<std::size_t> members;  // ascending word positions
  std::vector<AnchorScore> scores;   // every evaluated position
  bool degenerate = false;           // fewer venue words than min_venue_tokens

  bool operator==(const AnchorSet&) const = default;
};

struct AnchorConfig {
  double delta = 0.05;
  std::size_t min_venue_tokens = 2;
};

class DegenerateVenueError : public Error {
 public:
  using Error::Error;
};

/// Anything that yields per-word label marginals (n x 5) for a word list.
class ConfidenceModel {
 public:
  virtual ~ConfidenceModel() = default;
  virtual MatrixXd marginals(std::span<const std::string> words) const = 0;
};

class LabelerConfidence final : public ConfidenceModel {
 public:
  explicit LabelerConfidence(const LabelerModel& model) : model_(model) {}
  MatrixXd marginals(std::span<const std::string> words) const override { return word_marginals(model_, words); }

 private:
  const LabelerModel& model_;
};

/// Mean venue confidence over the full sequence minus the mean over the
/// remaining venue words once one has been deleted.
double leave_one_out_score(std::span<const double> full_venue, std::span<const double> reduced_venue);

AnchorScore anchor_score(const ConfidenceModel& model, const LabeledCitation& citation, std::size_t position,
                         const AnchorConfig& config = {});

/// Scores every venue word of every citation; members are the positions
/// scoring strictly above delta.
std::vector<AnchorSet> extract_anchor_sets(const ConfidenceModel& model, std::span<const LabeledCitation> dataset,
                                           const AnchorConfig& config = {});

/// Applies the same scoring directly to a labeled generated corpus.
std::vector<AnchorSet> direct_anchor_sets(const ConfidenceModel& model, std::span<const LabeledCitation> corpus,
                                          const AnchorConfig& config = {});

/// Per-word binary anchor classifier sharing the labeler's encoder family.
class SelectorModel {
 public:
  SelectorModel(std::shared_ptr<const SubwordVocab> vocab, LabelerDims dims, std::uint64_t seed);

  /// Starts from a labeler's encoder weights.
  static SelectorModel from_labeler(const LabelerModel& labeler, std::uint64_t seed);

  static SelectorModel load(const std::string& path, std::shared_ptr<const SubwordVocab> vocab);
  void save(const std::string& path) const;
  std::string serialized() const;

  const SubwordVocab& vocab() const { return *vocab_; }

  /// n x 2 per-word probabilities; column 1 is the anchor class.
  MatrixXd probabilities(std::span<const std::string> words) const;

  /// Mean weighted cross-entropy over words and its gradient.
  double loss_and_gradient(const SubwordSequence& seq, std::span<const int> targets, double positive_weight,
                           VectorXd& grad, double scale) const;

  ParamSet params;
  Index head_weight = -1;  // 2 x 2h
  Index head_bias = -1;    // 2 x 1
  double threshold = 0.5;

 private:
  SelectorModel(std::shared_ptr<const SubwordVocab> vocab, ParamSet params, double threshold);
  MatrixXd logits(const SubwordSequence& seq, EncoderTrace& trace) const;

  std::shared_ptr<const SubwordVocab> vocab_;
  EncoderLayout encoder_;
};

struct SelectorConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double class_weight = -1.0;  // weight on anchor words; negative = #negatives / #positives
  double holdout_fraction = 0.1;
  double threshold = 0.5;
};

struct SelectorReport {
  std::size_t train_citations = 0;
  std::size_t holdout_citations = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double class_weight = 0.0;  // weight actually used
  std::vector<double> epoch_loss;
  double holdout_precision = 0.0;
  double holdout_recall = 0.0;
  std::string warning;
};

struct TrainedSelector {
  SelectorModel model;
  SelectorReport report;
};

/// The selector starts from `init`'s encoder weights and vocabulary.
TrainedSelector train_selector(std::span<const AnchorSet> anchor_sets, std::span<const LabeledCitation> dataset,
                               const SelectorConfig& config, const LabelerModel& init);

/// Members are words whose anchor probability is strictly above the
/// selector threshold. Labels on the corpus are not consulted.
std::vector<AnchorSet> select_anchors(const SelectorModel& selector, std::span<const LabeledCitation> corpus);

/// |A ∩ B| / |A ∪ B| over all (citation, position) members; 1 when both empty.
double anchor_agreement(std::span<const AnchorSet> a, std::span<const AnchorSet> b);

std::string anchor_set_to_line(const AnchorSet& s);
AnchorSet anchor_set_from_line(std::string_view line);
void save_anchor_sets(const std::string& path, std::span<const AnchorSet> sets);
std::vector<AnchorSet> load_anchor_sets(const std::string& path);

}  // namespace citefield
