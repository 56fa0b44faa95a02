// citefield command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "citefield/anchor.hpp"
#include "citefield/ingest.hpp"
#include "citefield/labeler.hpp"
#include "citefield/metrics.hpp"
#include "citefield/pipeline.hpp"
#include "citefield/pretrain.hpp"
#include "citefield/styler.hpp"
#include "json.hpp"

using namespace citefield;

namespace {

std::shared_ptr<const SubwordVocab> load_vocab(const std::string& path) {
  return std::make_shared<const SubwordVocab>(SubwordVocab::load(path));
}

std::vector<LabeledCitation> load_many(const std::vector<std::string>& paths) {
  std::vector<LabeledCitation> out;
  for (const auto& p : paths) {
    auto part = load_citations(p);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void print_table(const FrequencyTable& t, std::size_t top) {
  for (std::size_t i = 0; i < std::min(top, t.size()); ++i) std::printf("%6zu  %s\n", t[i].second, t[i].first.c_str());
}

// Config file (or preset) with command-line overrides on top.
struct ConfigFlags {
  std::string path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> strategies;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> generated;
  std::string strategy;

  void attach(CLI::App* app) {
    app->add_option("--config", path, "pipeline config (JSON)");
    app->add_option("--preset", preset, "paper|desk (ignored with --config)");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--seeds", seeds, "run seeds");
    app->add_option("--strategies", strategies, "anchor|random|attention|none");
    app->add_option("--strategy", strategy, "single-run strategy");
    app->add_option("--steps", steps, "pre-training steps");
    app->add_option("--epochs", epochs, "fine-tuning epochs");
    app->add_option("--generated", generated, "generated corpus size");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = !path.empty() ? load_config(path) : preset_config(preset.empty() ? "desk" : preset);
    if (seed) c.seed = *seed;
    if (!seeds.empty()) c.seeds = seeds;
    if (!strategies.empty()) c.strategies = strategies;
    if (!strategy.empty()) c.strategy = strategy;
    if (steps) c.pretrain.steps = *steps;
    if (epochs) c.finetune.epochs = *epochs;
    if (generated) c.generated = *generated;
    validate_config(c);
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citefield: citation field extraction with anchor-guided pre-training"};
  app.require_subcommand(1);

  // ingest
  std::string in_path, in_format = "lines", out_path;
  bool strict = false;
  auto* ingest = app.add_subcommand("ingest", "parse bibliography records into the records format");
  ingest->add_option("--input", in_path, "records file")->required();
  ingest->add_option("--format", in_format, "lines|bibtex");
  ingest->add_flag("--strict", strict, "fail on the first bad record");
  ingest->add_option("--out", out_path, "output records file")->required();

  // records (synthetic bibliography)
  std::size_t n_records = 1000;
  std::uint64_t seed = 1;
  auto* records = app.add_subcommand("records", "write a synthetic bibliography");
  records->add_option("--count", n_records);
  records->add_option("--seed", seed);
  records->add_option("--out", out_path)->required();

  auto* styles_cmd = app.add_subcommand("styles", "write the built-in citation styles as JSON");
  styles_cmd->add_option("--out", out_path)->required();

  // generate
  std::string records_path, styles_path;
  std::size_t per_record = 1;
  bool balance = false;
  std::string origin = "Generated";
  auto* generate = app.add_subcommand("generate", "render records into labeled citations");
  generate->add_option("--records", records_path, "records file")->required();
  generate->add_option("--styles", styles_path, "styles JSON (default: built-in styles)");
  generate->add_option("--per-record", per_record, "styles drawn per record");
  generate->add_option("--seed", seed);
  generate->add_flag("--balance", balance, "downsample to the smallest discipline");
  generate->add_option("--origin", origin, "Generated|Task");
  generate->add_option("--out", out_path)->required();

  // vocab
  std::vector<std::string> corpora;
  std::size_t vocab_size = 1200;
  auto* vocab = app.add_subcommand("vocab", "learn a subword vocabulary");
  vocab->add_option("--corpus", corpora)->required();
  vocab->add_option("--size", vocab_size);
  vocab->add_option("--out", out_path)->required();

  // finetune
  std::string train_path, val_path, vocab_path, model_path, init_path;
  TrainConfig tc = preset_config("desk").finetune;
  Index embed_dim = 32, hidden_dim = 32;
  auto* finetune = app.add_subcommand("finetune", "train a labeler on labeled citations");
  finetune->add_option("--train", train_path)->required();
  finetune->add_option("--val", val_path);
  finetune->add_option("--vocab", vocab_path)->required();
  finetune->add_option("--init", init_path, "start from this model (e.g. a pre-trained one)");
  finetune->add_option("--epochs", tc.epochs);
  finetune->add_option("--lr", tc.learning_rate);
  finetune->add_option("--batch", tc.batch_size);
  finetune->add_option("--seed", seed);
  finetune->add_option("--embed-dim", embed_dim);
  finetune->add_option("--hidden-dim", hidden_dim);
  finetune->add_option("--out", out_path)->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "label citations with a trained model");
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--vocab", vocab_path)->required();
  predict_cmd->add_option("--input", in_path, "citations file, or a text file with --text")->required();
  bool text_input = false;
  predict_cmd->add_flag("--text", text_input, "input is one raw citation per line");
  predict_cmd->add_option("--out", out_path)->required();

  // anchors
  std::string data_path;
  AnchorConfig ac;
  auto* anchors = app.add_subcommand("anchors", "leave-one-out anchor sets from a basic model");
  anchors->add_option("--model", model_path)->required();
  anchors->add_option("--vocab", vocab_path)->required();
  anchors->add_option("--data", data_path)->required();
  anchors->add_option("--delta", ac.delta);
  anchors->add_option("--min-venue", ac.min_venue_tokens);
  anchors->add_option("--out", out_path)->required();

  // selector
  std::string anchors_path;
  SelectorConfig sc = preset_config("desk").selector;
  auto* selector = app.add_subcommand("selector", "train the anchor selector");
  selector->add_option("--anchors", anchors_path)->required();
  selector->add_option("--data", data_path)->required();
  selector->add_option("--model", model_path, "basic model supplying the encoder")->required();
  selector->add_option("--vocab", vocab_path)->required();
  selector->add_option("--epochs", sc.epochs);
  selector->add_option("--lr", sc.learning_rate);
  selector->add_option("--class-weight", sc.class_weight);
  selector->add_option("--threshold", sc.threshold);
  selector->add_option("--seed", seed);
  selector->add_option("--out", out_path)->required();

  // select
  std::string corpus_path;
  auto* select = app.add_subcommand("select", "apply a selector to a corpus");
  select->add_option("--selector", model_path)->required();
  select->add_option("--vocab", vocab_path)->required();
  select->add_option("--corpus", corpus_path)->required();
  select->add_option("--out", out_path)->required();

  // pretrain
  std::string strategy = "anchor", saliency_model;
  PretrainConfig pc = preset_config("desk").pretrain;
  auto* pretrain = app.add_subcommand("pretrain", "task-guided masked-token pre-training");
  pretrain->add_option("--corpus", corpus_path)->required();
  pretrain->add_option("--anchors", anchors_path);
  pretrain->add_option("--strategy", strategy, "anchor|random|attention|none");
  pretrain->add_option("--steps", pc.steps);
  pretrain->add_option("--lr", pc.learning_rate);
  pretrain->add_option("--batch", pc.batch_size);
  pretrain->add_option("--seed", seed);
  pretrain->add_option("--vocab", vocab_path)->required();
  pretrain->add_option("--init", init_path, "model to start from (default: fresh)");
  pretrain->add_option("--saliency-model", saliency_model, "model used for attention saliency");
  pretrain->add_option("--embed-dim", embed_dim);
  pretrain->add_option("--hidden-dim", hidden_dim);
  pretrain->add_option("--out", out_path)->required();

  // evaluate
  std::string gold_path, pred_path, report_path;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "token- and field-level scores");
  evaluate_cmd->add_option("--gold", gold_path)->required();
  evaluate_cmd->add_option("--pred", pred_path)->required();
  evaluate_cmd->add_option("--report", report_path);

  // compare
  std::string a_path, b_path;
  std::size_t trials = 10000;
  auto* compare = app.add_subcommand("compare", "paired approximate randomization test");
  compare->add_option("--a", a_path)->required();
  compare->add_option("--b", b_path)->required();
  compare->add_option("--gold", gold_path)->required();
  compare->add_option("--trials", trials);
  compare->add_option("--seed", seed);

  // anchor-stats
  std::size_t top = 20;
  bool masked = false;
  auto* stats = app.add_subcommand("anchor-stats", "ranked frequency of anchor or masked words");
  stats->add_option("--corpus", corpus_path)->required();
  stats->add_option("--anchors", anchors_path)->required();
  stats->add_option("--top", top);
  stats->add_flag("--masked", masked, "count words masked by AnchorPlusRandom plans instead of anchors");
  stats->add_option("--vocab", vocab_path, "required with --masked");
  stats->add_option("--seed", seed);

  // run / ablate / config
  std::string out_dir;
  ConfigFlags run_flags, ablate_flags, show_flags;
  auto* run = app.add_subcommand("run", "full pipeline for one strategy");
  run_flags.attach(run);
  run->add_option("--out-dir", out_dir)->required();
  auto* ablate = app.add_subcommand("ablate", "strategy x seed ablation");
  ablate_flags.attach(ablate);
  ablate->add_option("--out-dir", out_dir)->required();
  auto* show = app.add_subcommand("config", "print the resolved pipeline config");
  show_flags.attach(show);

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*ingest) {
      ReadResult r = read_records(in_path, parse_record_format(in_format), strict);
      for (const auto& d : r.diagnostics) std::fprintf(stderr, "%s:%zu: %s\n", in_path.c_str(), d.line, d.message.c_str());
      save_records(out_path, r.records);
      std::printf("%zu records, %zu skipped\n", r.records.size(), r.diagnostics.size());
    } else if (*records) {
      save_records(out_path, synthesize_records(n_records, seed));
    } else if (*styles_cmd) {
      write_file(out_path, styles_to_json(builtin_styles()));
    } else if (*generate) {
      auto recs = read_records(records_path, RecordFormat::Lines, true).records;
      auto styles = styles_path.empty() ? builtin_styles() : load_styles(styles_path);
      auto rendered = generate_corpus(recs, styles, {per_record, seed, balance, parse_origin(origin)});
      std::vector<LabeledCitation> out;
      for (auto& r : rendered) out.push_back(std::move(r.citation));
      save_citations(out_path, out);
      std::printf("%zu citations\n", out.size());
    } else if (*vocab) {
      SubwordVocab v = build_vocab(load_many(corpora), vocab_size);
      v.save(out_path);
      std::printf("%zu pieces\n", v.size());
    } else if (*finetune) {
      auto v = load_vocab(vocab_path);
      LabelerModel m = init_path.empty() ? LabelerModel(v, {embed_dim, hidden_dim}, seed) : LabelerModel::load(init_path, v);
      tc.seed = derive_seed(seed, 1);
      auto val = val_path.empty() ? std::vector<LabeledCitation>{} : load_citations(val_path);
      TrainReport r = train(m, load_citations(train_path), val, tc);
      m.save(out_path);
      for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
        std::printf("epoch %zu loss %.4f", e + 1, r.epoch_loss[e]);
        if (e < r.val_accuracy.size()) std::printf(" val_acc %.4f", r.val_accuracy[e]);
        std::printf("\n");
      }
    } else if (*predict_cmd) {
      auto v = load_vocab(vocab_path);
      LabelerModel m = LabelerModel::load(model_path, v);
      std::vector<LabeledCitation> input;
      if (text_input) {
        std::istringstream in(read_file(in_path));
        std::string line;
        while (std::getline(in, line)) {
          if (!normalize_whitespace(line).empty()) input.push_back(citation_from_text(line));
        }
      } else {
        input = load_citations(in_path);
      }
      save_citations(out_path, predict_corpus(m, input));
    } else if (*anchors) {
      auto v = load_vocab(vocab_path);
      LabelerModel m = LabelerModel::load(model_path, v);
      LabelerConfidence conf(m);
      auto sets = extract_anchor_sets(conf, load_citations(data_path), ac);
      save_anchor_sets(out_path, sets);
      std::size_t members = 0, degenerate = 0;
      for (const auto& s : sets) {
        members += s.members.size();
        degenerate += s.degenerate;
      }
      std::printf("%zu citations, %zu anchors, %zu degenerate\n", sets.size(), members, degenerate);
    } else if (*selector) {
      auto v = load_vocab(vocab_path);
      LabelerModel basic = LabelerModel::load(model_path, v);
      sc.seed = seed;
      TrainedSelector ts = train_selector(load_anchor_sets(anchors_path), load_citations(data_path), sc, basic);
      ts.model.save(out_path);
      std::printf("held-out precision %.4f recall %.4f\n", ts.report.holdout_precision, ts.report.holdout_recall);
      if (!ts.report.warning.empty()) std::fprintf(stderr, "warning: %s\n", ts.report.warning.c_str());
    } else if (*select) {
      auto v = load_vocab(vocab_path);
      SelectorModel s = SelectorModel::load(model_path, v);
      save_anchor_sets(out_path, select_anchors(s, load_citations(corpus_path)));
    } else if (*pretrain) {
      auto v = load_vocab(vocab_path);
      LabelerModel m = init_path.empty() ? LabelerModel(v, {embed_dim, hidden_dim}, seed) : LabelerModel::load(init_path, v);
      auto corpus = load_citations(corpus_path);
      MaskingStrategy ms;
      ms.kind = parse_masking_kind(strategy);
      std::vector<AnchorSet> sets;
      if (ms.kind == MaskingKind::AnchorPlusRandom) {
        if (anchors_path.empty()) throw Error("--anchors is required for the anchor strategy");
        sets = load_anchor_sets(anchors_path);
      }
      std::vector<std::vector<double>> saliency;
      if (ms.kind == MaskingKind::AttentionProxy) {
        if (saliency_model.empty()) throw Error("--saliency-model is required for the attention strategy");
        LabelerModel sm = LabelerModel::load(saliency_model, v);
        for (const auto& c : corpus) saliency.push_back(saliency_proxy(sm, encode_citation(c, *v, pc.max_len)));
      }
      pc.seed = seed;
      PretrainReport r = task_guided_pretrain(m, corpus, sets, saliency, ms, pc);
      m.save(out_path);
      std::printf("probe loss %.4f -> %.4f\n", r.initial_loss, r.final_loss);
    } else if (*evaluate_cmd) {
      EvalReport r = evaluate(load_citations(gold_path), load_citations(pred_path));
      const std::string text = report_to_json(r);
      if (!report_path.empty()) write_file(report_path, text);
      std::printf("token F1 %.4f  field F1 %.4f\n", r.token.micro.f1, r.field.micro.f1);
    } else if (*compare) {
      SignificanceResult r = significance(load_citations(a_path), load_citations(b_path), load_citations(gold_path), trials, seed);
      std::printf("diff %.6f  p %.6f  (%s, %zu)\n", r.observed_diff, r.p_value, r.exact ? "exact" : "sampled", r.trials);
    } else if (*stats) {
      auto corpus = load_citations(corpus_path);
      auto sets = load_anchor_sets(anchors_path);
      std::vector<WordRef> words;
      if (masked) {
        if (vocab_path.empty()) throw Error("--vocab is required with --masked");
        auto v = load_vocab(vocab_path);
        auto plans = preview_plans(*v, corpus, sets, {}, MaskingStrategy{}, seed, 128);
        words = masked_words(plans, corpus, *v, 128);
      } else {
        words = anchor_words(sets);
      }
      print_table(anchor_frequency(words, corpus), top);
      std::printf("venue share %.4f of %zu words\n", venue_share(words, corpus), words.size());
    } else if (*run) {
      RunResult r = run_pipeline(run_flags.resolve(), out_dir);
      std::printf("%s seed %llu: field F1 %.4f  venue %.4f\n", r.strategy.c_str(),
                  static_cast<unsigned long long>(r.seed), r.report.field.micro.f1,
                  r.report.field.per_field[label_index(FieldLabel::Venue)].f1);
    } else if (*ablate) {
      AblationResult r = run_ablation(ablate_flags.resolve(), out_dir);
      std::fputs(ablation_to_table(r).c_str(), stdout);
    } else if (*show) {
      std::fputs(config_to_json(show_flags.resolve()).c_str(), stdout);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "citefield %s: %s\n", stage.c_str(), e.what());
    return 2;
  }
  return 0;
}
