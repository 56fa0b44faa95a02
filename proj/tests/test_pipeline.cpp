#include <filesystem>

#include "citefield/pipeline.hpp"
#include "doctest.h"

using namespace citefield;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig c = preset_config("desk");
  c.generated = 120;
  c.task_train = 40;
  c.task_val = 10;
  c.task_test = 20;
  c.vocab_size = 150;
  c.dims = {6, 6};
  c.finetune.epochs = 2;
  c.selector.epochs = 1;
  c.pretrain.steps = 4;
  c.pretrain.batch_size = 4;
  c.pretrain.eval_size = 8;
  c.significance_trials = 20;
  return c;
}

std::string scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("citefield_test_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("presets and config files") {
  PipelineConfig paper = preset_config("paper");
  CHECK(paper.pretrain.learning_rate == 5e-5);
  CHECK(paper.finetune.learning_rate == 5e-5);
  CHECK(paper.pretrain.batch_size == 32);
  CHECK(paper.anchor.delta == 0.05);
  CHECK(paper.masking.mask_fraction == 0.15);
  CHECK_THROWS_AS(preset_config("huge"), Error);

  PipelineConfig c = small_config();
  c.strategies = {"none", "random"};
  c.seeds = {3, 4};
  PipelineConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));

  CHECK_NOTHROW(validate_config(c));
  PipelineConfig bad = c;
  bad.strategy = "everything";
  CHECK_THROWS_AS(validate_config(bad), Error);
  bad = c;
  bad.records_path = "/no/such/file.jsonl";
  CHECK_THROWS_AS(validate_config(bad), Error);
  bad = c;
  bad.masking.policy.mask_prob = 0.5;
  CHECK_THROWS_AS(validate_config(bad), Error);
}

TEST_CASE("end-to-end run is reproducible") {
  PipelineConfig c = small_config();
  c.strategy = "anchor";
  const std::string a = scratch("run_a"), b = scratch("run_b");
  RunResult ra = run_pipeline(c, a);
  RunResult rb = run_pipeline(c, b);
  CHECK(ra.report.citations == 20);
  CHECK(read_file(a + "/manifest.json") == read_file(b + "/manifest.json"));
  CHECK(read_file(a + "/run/final.model") == read_file(b + "/run/final.model"));
  CHECK(fs::exists(a + "/anchors_task.jsonl"));
  CHECK(fs::exists(a + "/run/report.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("strategy none skips pre-training") {
  PipelineConfig c = small_config();
  c.strategy = "none";
  const std::string dir = scratch("run_none");
  RunResult r = run_pipeline(c, dir);
  CHECK(r.pretrain.step_loss.empty());
  fs::remove_all(dir);
}

TEST_CASE("ablation table shape") {
  PipelineConfig c = small_config();
  c.strategies = {"none"};
  c.seeds = {1};
  const std::string dir = scratch("ablate_one");
  AblationResult r = run_ablation(c, dir);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].strategy == "none");
  CHECK(r.rows[0].per_seed.size() == 1);
  const std::string table = ablation_to_table(r);
  CHECK(table.find("| Author | Title | Venue | Year | Overall |") != std::string::npos);
  CHECK(fs::exists(dir + "/ablation.json"));
  fs::remove_all(dir);
}
