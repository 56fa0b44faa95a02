#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citefield/anchor.hpp"
#include "citefield/labeler.hpp"
#include "citefield/metrics.hpp"
#include "citefield/pretrain.hpp"
#include "citefield/styler.hpp"

namespace citefield {

struct PipelineConfig {
  std::string preset = "desk";
  std::uint64_t seed = 1;  // master seed: data, vocabulary, basic model, selector

  // Inputs. Empty paths mean the built-in synthetic bibliography / styles.
  std::string records_path;
  std::string styles_path;

  std::size_t generated = 5000;
  std::size_t task_train = 500;
  std::size_t task_val = 250;
  std::size_t task_test = 500;
  NoiseOptions task_noise{0.5, 0.2};  // applied to the task splits only
  std::size_t vocab_size = 1200;
  std::size_t max_len = 128;
  LabelerDims dims{32, 32};

  TrainConfig finetune;
  AnchorConfig anchor;
  SelectorConfig selector;
  MaskingStrategy masking;
  PretrainConfig pretrain;
  bool direct_anchors = false;  // bypass the selector and score D_Generate directly

  std::string strategy = "anchor";  // single-run strategy
  std::vector<std::string> strategies = {"none", "anchor", "attention", "random"};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t significance_trials = 1000;
};

/// "paper" keeps the published hyperparameters; "desk" fits a laptop CPU.
PipelineConfig preset_config(std::string_view name);

std::string config_to_json(const PipelineConfig& c);
/// Starts from the preset named in the document (default desk) and applies
/// every key present.
PipelineConfig config_from_json(std::string_view text);
PipelineConfig load_config(const std::string& path);
void validate_config(const PipelineConfig& c);

/// Artifact hashes and seeds for one run directory.
class Manifest {
 public:
  void seed(const std::string& stage, std::uint64_t value);
  void artifact(const std::string& name, const std::string& path);
  void note(const std::string& key, const std::string& value);
  std::string to_json() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, std::string> artifacts_;
  std::map<std::string, std::string> notes_;
};

/// Stages shared by every (strategy, seed) run.
struct SharedStage {
  std::vector<LabeledCitation> generated, train, val, test;
  std::shared_ptr<const SubwordVocab> vocab;
  std::optional<LabelerModel> basic;
  std::vector<AnchorSet> task_anchors;
  std::vector<AnchorSet> generated_anchors;
  std::vector<std::vector<double>> saliency;  // per generated citation
  SelectorReport selector_report;
  double anchor_agreement = -1.0;  // only when direct sets were also computed
};

SharedStage prepare_shared(const PipelineConfig& config, const std::string& dir, Manifest& manifest);

struct RunResult {
  std::string strategy;
  std::uint64_t seed = 0;
  EvalReport report;
  PretrainReport pretrain;
  TrainReport finetune;
  std::vector<LabeledCitation> predictions;
};

RunResult run_strategy(const PipelineConfig& config, const SharedStage& shared, MaskingKind strategy,
                       std::uint64_t seed, const std::string& dir, Manifest& manifest);

/// Full flow for config.strategy and config.seed; writes into `dir`.
RunResult run_pipeline(const PipelineConfig& config, const std::string& dir);

struct AblationRow {
  std::string strategy;
  std::array<double, 5> mean_f1{};  // Author, Title, Venue, Year, Overall (field level)
  std::vector<std::array<double, 5>> per_seed;
};

struct PairwiseTest {
  std::string a, b;
  SignificanceResult result;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<PairwiseTest> pairwise;
  std::map<std::string, std::size_t> wins_over_none;  // Venue F1 strictly above none, per seed
  std::map<std::string, std::size_t> wins_over_random;
  FrequencyTable masked_top;       // AnchorPlusRandom first-pass plans
  double masked_venue_share = 0.0;
  FrequencyTable anchor_top;  // members of the generated-corpus anchor sets
  double anchor_venue_share = 0.0;
  SelectorReport selector_report;
};

AblationResult run_ablation(const PipelineConfig& config, const std::string& dir);

std::string ablation_to_json(const AblationResult& r);
std::string ablation_to_table(const AblationResult& r);

}  // namespace citefield
