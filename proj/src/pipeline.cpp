#include "citefield/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "citefield/ingest.hpp"
#include "citefield/styler.hpp"
#include "json.hpp"

namespace citefield {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fixed offsets from the master / run seed for each stage.
enum : std::uint64_t {
  kSeedPoolGenerate = 11,
  kSeedPoolTask = 12,
  kSeedRenderGenerate = 13,
  kSeedRenderTask = 14,
  kSeedTaskNoise = 15,
  kSeedBasicInit = 21,
  kSeedBasicTrain = 22,
  kSeedSelector = 31,
  kSeedPreview = 71,
  kSeedRunInit = 41,
  kSeedRunPretrain = 51,
  kSeedRunFinetune = 61,
  kSeedSignificance = 81,
};

class Stopwatch {
 public:
  explicit Stopwatch(std::string stage) : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::fprintf(stderr, "[%s] %.1fs\n", stage_.c_str(), s);
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::vector<LabeledCitation> citations_of(std::vector<RenderedCitation> rendered) {
  std::vector<LabeledCitation> out;
  out.reserve(rendered.size());
  for (auto& r : rendered) out.push_back(std::move(r.citation));
  return out;
}

std::array<double, 5> field_f1_row(const EvalReport& r) {
  return {r.field.per_field[0].f1, r.field.per_field[1].f1, r.field.per_field[2].f1, r.field.per_field[3].f1,
          r.field.micro.f1};
}

template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error("stage " + stage + ": " + e.what());
  }
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size}, {"epochs", t.epochs}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

PipelineConfig preset_config(std::string_view name) {
  PipelineConfig c;
  if (name == "paper") {
    c.preset = "paper";
    c.dims = {64, 64};
    c.vocab_size = 3000;
    c.finetune = {5e-5, 32, 20, 0, 1.0};
    c.selector.learning_rate = 5e-5;
    c.selector.epochs = 20;
    c.pretrain.steps = 20000;
    c.pretrain.learning_rate = 5e-5;
    c.significance_trials = 10000;
    return c;
  }
  if (name == "desk") {
    c.preset = "desk";
    c.dims = {32, 32};
    c.vocab_size = 1200;
    c.finetune = {2e-3, 32, 20, 0, 1.0};
    c.selector.learning_rate = 2e-3;
    c.selector.epochs = 8;
    c.pretrain.steps = 2000;
    c.pretrain.learning_rate = 2e-3;
    c.significance_trials = 1000;
    return c;
  }
  throw Error("unknown preset '" + std::string(name) + "' (expected paper|desk)");
}

std::string config_to_json(const PipelineConfig& c) {
  json j = {
      {"preset", c.preset},
      {"seed", c.seed},
      {"records", c.records_path},
      {"styles", c.styles_path},
      {"generated", c.generated},
      {"task_train", c.task_train},
      {"task_val", c.task_val},
      {"task_test", c.task_test},
      {"task_noise", {{"drop_punct", c.task_noise.drop_punct}, {"lowercase", c.task_noise.lowercase}}},
      {"vocab_size", c.vocab_size},
      {"max_len", c.max_len},
      {"embed_dim", c.dims.embed_dim},
      {"hidden_dim", c.dims.hidden_dim},
      {"finetune", train_json(c.finetune)},
      {"anchor", {{"delta", c.anchor.delta}, {"min_venue_tokens", c.anchor.min_venue_tokens}}},
      {"selector",
       {{"learning_rate", c.selector.learning_rate},
        {"epochs", c.selector.epochs},
        {"batch_size", c.selector.batch_size},
        {"class_weight", c.selector.class_weight},
        {"holdout_fraction", c.selector.holdout_fraction},
        {"threshold", c.selector.threshold}}},
      {"masking",
       {{"mask_fraction", c.masking.mask_fraction},
        {"mask_prob", c.masking.policy.mask_prob},
        {"random_prob", c.masking.policy.random_prob},
        {"keep_prob", c.masking.policy.keep_prob}}},
      {"pretrain",
       {{"steps", c.pretrain.steps},
        {"batch_size", c.pretrain.batch_size},
        {"learning_rate", c.pretrain.learning_rate},
        {"tied_head", c.pretrain.tied_head},
        {"eval_size", c.pretrain.eval_size}}},
      {"direct_anchors", c.direct_anchors},
      {"strategy", c.strategy},
      {"strategies", c.strategies},
      {"seeds", c.seeds},
      {"significance_trials", c.significance_trials},
  };
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(std::string_view text) {
  json j = json::parse(text);
  PipelineConfig c = preset_config(j.value("preset", std::string("desk")));
  auto get = [&](const json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
  };
  get(j, "seed", c.seed);
  get(j, "records", c.records_path);
  get(j, "styles", c.styles_path);
  get(j, "generated", c.generated);
  get(j, "task_train", c.task_train);
  get(j, "task_val", c.task_val);
  get(j, "task_test", c.task_test);
  if (j.contains("task_noise")) {
    get(j.at("task_noise"), "drop_punct", c.task_noise.drop_punct);
    get(j.at("task_noise"), "lowercase", c.task_noise.lowercase);
  }
  get(j, "vocab_size", c.vocab_size);
  get(j, "max_len", c.max_len);
  get(j, "embed_dim", c.dims.embed_dim);
  get(j, "hidden_dim", c.dims.hidden_dim);
  if (j.contains("finetune")) {
    const json& f = j.at("finetune");
    get(f, "learning_rate", c.finetune.learning_rate);
    get(f, "batch_size", c.finetune.batch_size);
    get(f, "epochs", c.finetune.epochs);
  }
  if (j.contains("anchor")) {
    get(j.at("anchor"), "delta", c.anchor.delta);
    get(j.at("anchor"), "min_venue_tokens", c.anchor.min_venue_tokens);
  }
  if (j.contains("selector")) {
    const json& s = j.at("selector");
    get(s, "learning_rate", c.selector.learning_rate);
    get(s, "epochs", c.selector.epochs);
    get(s, "batch_size", c.selector.batch_size);
    get(s, "class_weight", c.selector.class_weight);
    get(s, "holdout_fraction", c.selector.holdout_fraction);
    get(s, "threshold", c.selector.threshold);
  }
  if (j.contains("masking")) {
    const json& m = j.at("masking");
    get(m, "mask_fraction", c.masking.mask_fraction);
    get(m, "mask_prob", c.masking.policy.mask_prob);
    get(m, "random_prob", c.masking.policy.random_prob);
    get(m, "keep_prob", c.masking.policy.keep_prob);
  }
  if (j.contains("pretrain")) {
    const json& p = j.at("pretrain");
    get(p, "steps", c.pretrain.steps);
    get(p, "batch_size", c.pretrain.batch_size);
    get(p, "learning_rate", c.pretrain.learning_rate);
    get(p, "tied_head", c.pretrain.tied_head);
    get(p, "eval_size", c.pretrain.eval_size);
  }
  get(j, "direct_anchors", c.direct_anchors);
  get(j, "strategy", c.strategy);
  get(j, "strategies", c.strategies);
  get(j, "seeds", c.seeds);
  get(j, "significance_trials", c.significance_trials);
  validate_config(c);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  try {
    return config_from_json(read_file(path));
  } catch (const json::exception& e) {
    throw Error("config '" + path + "': " + e.what());
  }
}

void validate_config(const PipelineConfig& c) {
  auto fail = [](const std::string& m) { throw Error("config: " + m); };
  if (c.generated == 0) fail("generated must be positive");
  if (c.task_train == 0 || c.task_test == 0) fail("task_train and task_test must be positive");
  if (c.vocab_size <= static_cast<std::size_t>(SubwordVocab::kNumSpecial)) fail("vocab_size too small");
  for (double p : {c.task_noise.drop_punct, c.task_noise.lowercase}) {
    if (p < 0 || p > 1) fail("task_noise probabilities must lie in [0,1]");
  }
  if (c.max_len < 2) fail("max_len must be at least 2");
  if (c.dims.embed_dim <= 0 || c.dims.hidden_dim <= 0) fail("dimensions must be positive");
  if (!(c.finetune.learning_rate > 0) || c.finetune.batch_size == 0) fail("finetune learning_rate/batch_size invalid");
  if (!(c.anchor.delta > 0)) fail("anchor delta must be positive");
  if (c.selector.threshold <= 0 || c.selector.threshold >= 1) fail("selector threshold must lie in (0,1)");
  if (c.selector.holdout_fraction < 0 || c.selector.holdout_fraction >= 1) fail("holdout_fraction must lie in [0,1)");
  check_strategy(c.masking);
  if (c.pretrain.batch_size == 0 || !(c.pretrain.learning_rate > 0)) fail("pretrain batch_size/learning_rate invalid");
  parse_masking_kind(c.strategy);
  for (const auto& s : c.strategies) parse_masking_kind(s);
  if (c.seeds.empty()) fail("at least one seed is required");
  if (!c.records_path.empty() && !fs::exists(c.records_path)) fail("records file '" + c.records_path + "' not found");
  if (!c.styles_path.empty() && !fs::exists(c.styles_path)) fail("styles file '" + c.styles_path + "' not found");
}

// ---------------------------------------------------------------------------
// Manifest

void Manifest::seed(const std::string& stage, std::uint64_t value) { seeds_[stage] = value; }

void Manifest::artifact(const std::string& name, const std::string& path) {
  artifacts_[name] = hex64(fnv1a64(read_file(path)));
}

void Manifest::note(const std::string& key, const std::string& value) { notes_[key] = value; }

std::string Manifest::to_json() const {
  json j = {{"seeds", seeds_}, {"artifacts_fnv1a64", artifacts_}, {"notes", notes_}};
  return j.dump(2) + "\n";
}

void Manifest::save(const std::string& path) const { write_file(path, to_json()); }

// ---------------------------------------------------------------------------
// Stages

SharedStage prepare_shared(const PipelineConfig& config, const std::string& dir, Manifest& manifest) {
  validate_config(config);
  fs::create_directories(dir);
  SharedStage s;
  const std::uint64_t seed = config.seed;

  in_stage("generate", [&] {
    Stopwatch sw("generate");
    const std::size_t task_total = config.task_train + config.task_val + config.task_test;
    std::vector<BibRecord> pool_gen, pool_task;
    if (config.records_path.empty()) {
      pool_gen = synthesize_records(config.generated, derive_seed(seed, kSeedPoolGenerate));
      pool_task = synthesize_records(task_total, derive_seed(seed, kSeedPoolTask));
    } else {
      auto records = read_records(config.records_path, RecordFormat::Lines).records;
      if (records.size() < task_total + 1) throw Error("records file has too few records for the task split");
      Rng rng(derive_seed(seed, kSeedPoolTask));
      rng.shuffle(records);
      pool_task.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(task_total));
      pool_gen.assign(records.begin() + static_cast<std::ptrdiff_t>(task_total), records.end());
    }
    const auto styles = config.styles_path.empty() ? builtin_styles() : load_styles(config.styles_path);
    const std::size_t per_record = (config.generated + pool_gen.size() - 1) / pool_gen.size();
    s.generated = citations_of(generate_corpus(
        pool_gen, styles, {std::min(per_record, styles.size()), derive_seed(seed, kSeedRenderGenerate), false, Origin::Generated}));
    if (s.generated.size() > config.generated) s.generated.resize(config.generated);
    auto task = citations_of(
        generate_corpus(pool_task, styles, {1, derive_seed(seed, kSeedRenderTask), false, Origin::Task}));
    Rng noise_rng(derive_seed(seed, kSeedTaskNoise));
    for (auto& c : task) c = add_noise(c, config.task_noise, noise_rng);
    s.train.assign(task.begin(), task.begin() + static_cast<std::ptrdiff_t>(config.task_train));
    s.val.assign(task.begin() + static_cast<std::ptrdiff_t>(config.task_train),
                 task.begin() + static_cast<std::ptrdiff_t>(config.task_train + config.task_val));
    s.test.assign(task.begin() + static_cast<std::ptrdiff_t>(config.task_train + config.task_val), task.end());
    save_records(join(dir, "records_generate.jsonl"), pool_gen);
    save_records(join(dir, "records_task.jsonl"), pool_task);
    save_citations(join(dir, "generated.jsonl"), s.generated);
    save_citations(join(dir, "task_train.jsonl"), s.train);
    save_citations(join(dir, "task_val.jsonl"), s.val);
    save_citations(join(dir, "task_test.jsonl"), s.test);
    for (const char* f : {"generated.jsonl", "task_train.jsonl", "task_val.jsonl", "task_test.jsonl"}) {
      manifest.artifact(f, join(dir, f));
    }
    manifest.seed("generate.pool_generate", derive_seed(seed, kSeedPoolGenerate));
    manifest.seed("generate.pool_task", derive_seed(seed, kSeedPoolTask));
    return 0;
  });

  in_stage("vocab", [&] {
    std::vector<LabeledCitation> both = s.generated;
    both.insert(both.end(), s.train.begin(), s.train.end());
    s.vocab = std::make_shared<const SubwordVocab>(build_vocab(both, config.vocab_size));
    s.vocab->save(join(dir, "vocab.txt"));
    manifest.artifact("vocab.txt", join(dir, "vocab.txt"));
    return 0;
  });

  in_stage("finetune-basic", [&] {
    Stopwatch sw("finetune-basic");
    s.basic.emplace(s.vocab, config.dims, derive_seed(seed, kSeedBasicInit));
    TrainConfig tc = config.finetune;
    tc.seed = derive_seed(seed, kSeedBasicTrain);
    train(*s.basic, s.train, s.val, tc);
    s.basic->save(join(dir, "basic.model"));
    manifest.artifact("basic.model", join(dir, "basic.model"));
    manifest.seed("finetune-basic.init", derive_seed(seed, kSeedBasicInit));
    manifest.seed("finetune-basic.train", tc.seed);
    return 0;
  });

  LabelerConfidence confidence(*s.basic);
  in_stage("anchors", [&] {
    Stopwatch sw("anchors");
    s.task_anchors = extract_anchor_sets(confidence, s.train, config.anchor);
    save_anchor_sets(join(dir, "anchors_task.jsonl"), s.task_anchors);
    manifest.artifact("anchors_task.jsonl", join(dir, "anchors_task.jsonl"));
    return 0;
  });

  in_stage("selector", [&] {
    Stopwatch sw("selector");
    SelectorConfig sc = config.selector;
    sc.seed = derive_seed(seed, kSeedSelector);
    const bool any_anchor = std::any_of(s.task_anchors.begin(), s.task_anchors.end(),
                                        [](const AnchorSet& a) { return !a.members.empty(); });
    SelectorReport report;
    if (any_anchor) {
      TrainedSelector ts = train_selector(s.task_anchors, s.train, sc, *s.basic);
      report = ts.report;
      ts.model.save(join(dir, "selector.model"));
      manifest.artifact("selector.model", join(dir, "selector.model"));
      manifest.seed("selector", sc.seed);
      s.generated_anchors = select_anchors(ts.model, s.generated);
    } else {
      // Nothing to learn from: every generated set is empty and anchor
      // masking reduces to random masking.
      report.warning = "no anchor words in the task training split; selector skipped";
      std::cerr << "warning: " << report.warning << "\n";
      s.generated_anchors.resize(s.generated.size());
      for (std::size_t i = 0; i < s.generated.size(); ++i) s.generated_anchors[i].citation_id = i;
    }
    s.selector_report = report;
    const SelectorReport& rs = s.selector_report;
    if (config.direct_anchors) {
      auto direct = direct_anchor_sets(confidence, s.generated, config.anchor);
      s.anchor_agreement = anchor_agreement(direct, s.generated_anchors);
      s.generated_anchors = std::move(direct);
    }
    save_anchor_sets(join(dir, "anchors_generated.jsonl"), s.generated_anchors);
    manifest.artifact("anchors_generated.jsonl", join(dir, "anchors_generated.jsonl"));
    json rep = {{"train_citations", rs.train_citations},
                {"holdout_citations", rs.holdout_citations},
                {"positives", rs.positives},
                {"negatives", rs.negatives},
                {"class_weight", rs.class_weight},
                {"epoch_loss", rs.epoch_loss},
                {"holdout_precision", rs.holdout_precision},
                {"holdout_recall", rs.holdout_recall},
                {"warning", rs.warning}};
    if (s.anchor_agreement >= 0) rep["direct_agreement"] = s.anchor_agreement;
    write_file(join(dir, "selector_report.json"), rep.dump(2) + "\n");
    return 0;
  });

  bool need_saliency = false;
  for (const auto& name : config.strategies) need_saliency |= parse_masking_kind(name) == MaskingKind::AttentionProxy;
  need_saliency |= parse_masking_kind(config.strategy) == MaskingKind::AttentionProxy;
  if (need_saliency) {
    in_stage("saliency", [&] {
      Stopwatch sw("saliency");
      s.saliency.reserve(s.generated.size());
      for (const auto& c : s.generated) s.saliency.push_back(saliency_proxy(*s.basic, encode_citation(c, *s.vocab, config.max_len)));
      return 0;
    });
  }
  return s;
}

RunResult run_strategy(const PipelineConfig& config, const SharedStage& shared, MaskingKind strategy,
                       std::uint64_t seed, const std::string& dir, Manifest& manifest) {
  fs::create_directories(dir);
  RunResult r;
  r.strategy = std::string(masking_kind_name(strategy));
  r.seed = seed;
  const std::string tag = r.strategy + "/" + std::to_string(seed);

  LabelerModel model(shared.vocab, config.dims, derive_seed(seed, kSeedRunInit));
  in_stage("pretrain " + tag, [&] {
    Stopwatch sw("pretrain " + tag);
    MaskingStrategy ms = config.masking;
    ms.kind = strategy;
    PretrainConfig pc = config.pretrain;
    pc.seed = derive_seed(seed, kSeedRunPretrain);
    pc.max_len = config.max_len;
    r.pretrain = task_guided_pretrain(model, shared.generated, shared.generated_anchors, shared.saliency, ms, pc);
    manifest.seed("pretrain", pc.seed);
    json log = {{"initial_loss", r.pretrain.initial_loss},
                {"final_loss", r.pretrain.final_loss},
                {"masked_positions", r.pretrain.masked_positions},
                {"step_loss", r.pretrain.step_loss}};
    write_file(join(dir, "pretrain_log.json"), log.dump() + "\n");
    return 0;
  });

  in_stage("finetune " + tag, [&] {
    Stopwatch sw("finetune " + tag);
    TrainConfig tc = config.finetune;
    tc.seed = derive_seed(seed, kSeedRunFinetune);
    r.finetune = train(model, shared.train, shared.val, tc);
    model.save(join(dir, "final.model"));
    manifest.artifact("final.model", join(dir, "final.model"));
    manifest.seed("finetune", tc.seed);
    manifest.seed("init", derive_seed(seed, kSeedRunInit));
    return 0;
  });

  in_stage("evaluate " + tag, [&] {
    r.predictions = predict_corpus(model, shared.test);
    r.report = evaluate(shared.test, r.predictions);
    save_citations(join(dir, "predictions.jsonl"), r.predictions);
    write_file(join(dir, "report.json"), report_to_json(r.report));
    manifest.artifact("predictions.jsonl", join(dir, "predictions.jsonl"));
    manifest.artifact("report.json", join(dir, "report.json"));
    return 0;
  });
  return r;
}

RunResult run_pipeline(const PipelineConfig& config, const std::string& dir) {
  Manifest manifest;
  manifest.note("preset", config.preset);
  manifest.seed("master", config.seed);
  fs::create_directories(dir);
  write_file(join(dir, "config.json"), config_to_json(config));
  SharedStage shared = prepare_shared(config, dir, manifest);
  RunResult r = run_strategy(config, shared, parse_masking_kind(config.strategy), config.seed, join(dir, "run"), manifest);
  manifest.save(join(dir, "manifest.json"));
  return r;
}

AblationResult run_ablation(const PipelineConfig& config, const std::string& dir) {
  Manifest manifest;
  manifest.note("preset", config.preset);
  manifest.seed("master", config.seed);
  fs::create_directories(dir);
  write_file(join(dir, "config.json"), config_to_json(config));
  const std::string shared_dir = join(dir, "shared");
  SharedStage shared = prepare_shared(config, shared_dir, manifest);

  AblationResult out;
  out.selector_report = shared.selector_report;
  {
    MaskingStrategy ms = config.masking;
    ms.kind = MaskingKind::AnchorPlusRandom;
    auto plans = preview_plans(*shared.vocab, shared.generated, shared.generated_anchors, {}, ms,
                               derive_seed(config.seed, kSeedPreview), config.max_len);
    auto words = masked_words(plans, shared.generated, *shared.vocab, config.max_len);
    out.masked_top = anchor_frequency(words, shared.generated);
    out.masked_venue_share = venue_share(words, shared.generated);
    write_file(join(shared_dir, "masked_frequency.json"), frequency_to_json(out.masked_top, 50));
    const auto anchors = anchor_words(shared.generated_anchors);
    out.anchor_top = anchor_frequency(anchors, shared.generated);
    out.anchor_venue_share = venue_share(anchors, shared.generated);
    write_file(join(shared_dir, "anchor_frequency.json"), frequency_to_json(out.anchor_top, 50));
  }

  std::map<std::string, std::vector<RunResult>> runs;
  for (const auto& name : config.strategies) {
    const MaskingKind kind = parse_masking_kind(name);
    AblationRow row;
    row.strategy = std::string(masking_kind_name(kind));
    for (std::uint64_t seed : config.seeds) {
      Manifest run_manifest;
      const std::string run_dir = join(dir, "runs/" + row.strategy + "-" + std::to_string(seed));
      RunResult r = run_strategy(config, shared, kind, seed, run_dir, run_manifest);
      run_manifest.save(join(run_dir, "manifest.json"));
      manifest.artifact("runs/" + row.strategy + "-" + std::to_string(seed) + "/report.json", join(run_dir, "report.json"));
      row.per_seed.push_back(field_f1_row(r.report));
      runs[row.strategy].push_back(std::move(r));
    }
    for (const auto& f : row.per_seed) {
      for (std::size_t k = 0; k < 5; ++k) row.mean_f1[k] += f[k] / static_cast<double>(row.per_seed.size());
    }
    out.rows.push_back(std::move(row));
  }

  const std::size_t venue = label_index(FieldLabel::Venue);
  auto count_wins = [&](const std::string& base, std::map<std::string, std::size_t>& wins) {
    const AblationRow* b = nullptr;
    for (const auto& r : out.rows) {
      if (r.strategy == base) b = &r;
    }
    if (!b) return;
    for (const auto& r : out.rows) {
      if (r.strategy == base) continue;
      std::size_t w = 0;
      for (std::size_t i = 0; i < r.per_seed.size(); ++i) w += r.per_seed[i][venue] > b->per_seed[i][venue];
      wins[r.strategy] = w;
    }
  };
  count_wins("none", out.wins_over_none);
  count_wins("random", out.wins_over_random);

  // Pairwise tests pool every (seed, citation) pair as one unit.
  std::vector<LabeledCitation> gold;
  for (std::size_t i = 0; i < config.seeds.size(); ++i) gold.insert(gold.end(), shared.test.begin(), shared.test.end());
  for (std::size_t a = 0; a < out.rows.size(); ++a) {
    for (std::size_t b = a + 1; b < out.rows.size(); ++b) {
      std::vector<LabeledCitation> pa, pb;
      for (const auto& r : runs[out.rows[a].strategy]) pa.insert(pa.end(), r.predictions.begin(), r.predictions.end());
      for (const auto& r : runs[out.rows[b].strategy]) pb.insert(pb.end(), r.predictions.begin(), r.predictions.end());
      out.pairwise.push_back({out.rows[a].strategy, out.rows[b].strategy,
                              significance(pa, pb, gold, config.significance_trials,
                                           derive_seed(config.seed, kSeedSignificance))});
    }
  }

  write_file(join(dir, "ablation.json"), ablation_to_json(out));
  write_file(join(dir, "ablation.md"), ablation_to_table(out));
  manifest.artifact("ablation.json", join(dir, "ablation.json"));
  manifest.save(join(dir, "manifest.json"));
  return out;
}

std::string ablation_to_json(const AblationResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"strategy", row.strategy}, {"mean", row.mean_f1}, {"per_seed", row.per_seed}});
  }
  json pairs = json::array();
  for (const auto& p : r.pairwise) {
    pairs.push_back({{"a", p.a},
                     {"b", p.b},
                     {"observed_diff", p.result.observed_diff},
                     {"p_value", p.result.p_value},
                     {"trials", p.result.trials}});
  }
  json top = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(10, r.masked_top.size()); ++i) {
    top.push_back({{"token", r.masked_top[i].first}, {"count", r.masked_top[i].second}});
  }
  json anchor_top = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(10, r.anchor_top.size()); ++i) {
    anchor_top.push_back({{"token", r.anchor_top[i].first}, {"count", r.anchor_top[i].second}});
  }
  json j = {{"columns", {"Author", "Title", "Venue", "Year", "Overall"}},
            {"rows", rows},
            {"pairwise", pairs},
            {"venue_wins_over_none", r.wins_over_none},
            {"venue_wins_over_random", r.wins_over_random},
            {"masked_top10", top},
            {"masked_venue_share", r.masked_venue_share},
            {"anchor_top10", anchor_top},
            {"anchor_venue_share", r.anchor_venue_share},
            {"selector_holdout_precision", r.selector_report.holdout_precision},
            {"selector_holdout_recall", r.selector_report.holdout_recall}};
  return j.dump(2) + "\n";
}

std::string ablation_to_table(const AblationResult& r) {
  std::string out = "| Strategy | Author | Title | Venue | Year | Overall |\n|---|---|---|---|---|---|\n";
  char buf[64];
  for (const auto& row : r.rows) {
    out += "| " + row.strategy + " |";
    for (double v : row.mean_f1) {
      std::snprintf(buf, sizeof buf, " %.2f |", 100.0 * v);
      out += buf;
    }
    out += "\n";
  }
  out += "\nMost frequent anchor words on the generated corpus:";
  for (std::size_t i = 0; i < std::min<std::size_t>(10, r.anchor_top.size()); ++i) {
    out += (i ? ", " : " ") + r.anchor_top[i].first + " (" + std::to_string(r.anchor_top[i].second) + ")";
  }
  std::snprintf(buf, sizeof buf, "\nVenue share: anchors %.3f, all masked words %.3f\n", r.anchor_venue_share,
                r.masked_venue_share);
  out += buf;
  return out;
}

}  // namespace citefield
