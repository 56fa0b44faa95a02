#include "citefield/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace citefield {

std::string_view masking_kind_name(MaskingKind k) {
  switch (k) {
    case MaskingKind::AnchorPlusRandom: return "anchor";
    case MaskingKind::RandomOnly: return "random";
    case MaskingKind::AttentionProxy: return "attention";
    case MaskingKind::None: return "none";
  }
  return "none";
}

MaskingKind parse_masking_kind(std::string_view name) {
  if (name == "anchor") return MaskingKind::AnchorPlusRandom;
  if (name == "random") return MaskingKind::RandomOnly;
  if (name == "attention") return MaskingKind::AttentionProxy;
  if (name == "none") return MaskingKind::None;
  throw Error("unknown masking strategy '" + std::string(name) + "' (expected anchor|random|attention|none)");
}

void check_strategy(const MaskingStrategy& s) {
  if (!(s.mask_fraction > 0.0 && s.mask_fraction < 1.0)) throw Error("mask_fraction must lie in (0, 1)");
  const auto& p = s.policy;
  if (p.mask_prob < 0 || p.random_prob < 0 || p.keep_prob < 0 ||
      std::abs(p.mask_prob + p.random_prob + p.keep_prob - 1.0) > 1e-9) {
    throw Error("replace policy probabilities must be non-negative and sum to 1");
  }
}

namespace {

std::vector<std::size_t> maskable_positions(const SubwordSequence& seq) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < seq.size(); ++p) {
    if (seq.word_index[p].has_value() && seq.ids[p] != SubwordVocab::kPad) out.push_back(p);
  }
  return out;
}

// Subword positions of each word, in word order.
std::vector<std::vector<std::size_t>> word_pieces(const SubwordSequence& seq) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t p = 0; p < seq.size(); ++p) {
    if (!seq.word_index[p]) continue;
    const std::size_t w = *seq.word_index[p];
    if (w >= out.size()) out.resize(w + 1);
    out[w].push_back(p);
  }
  return out;
}

// Adds the pieces of the given words, in order, until the budget is met.
void take_words(const std::vector<std::size_t>& ranked_words, const std::vector<std::vector<std::size_t>>& pieces,
                std::size_t budget, std::vector<std::size_t>& chosen) {
  for (std::size_t w : ranked_words) {
    if (w >= pieces.size()) continue;  // truncated away
    for (std::size_t p : pieces[w]) {
      if (chosen.size() >= budget) return;
      chosen.push_back(p);
    }
  }
}

}  // namespace

std::size_t mask_budget(const SubwordSequence& seq, double fraction) {
  const auto rounded = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(seq.size())));
  return std::min(std::max<std::size_t>(1, rounded), maskable_positions(seq).size());
}

MaskingPlan build_plan(const SubwordSequence& seq, const AnchorSet* anchors, std::span<const double> saliency,
                       const MaskingStrategy& strategy, std::uint64_t seed, std::size_t vocab_size,
                       std::size_t citation_id) {
  check_strategy(strategy);
  if (strategy.kind == MaskingKind::None) throw Error("build_plan: strategy none has no masking plan");
  const auto candidates = maskable_positions(seq);
  if (candidates.empty()) throw Error("build_plan: sequence has no maskable positions");
  if (vocab_size <= static_cast<std::size_t>(SubwordVocab::kNumSpecial)) throw Error("build_plan: vocabulary has no regular pieces");
  const std::size_t budget = mask_budget(seq, strategy.mask_fraction);
  const auto pieces = word_pieces(seq);

  std::vector<std::size_t> chosen;
  if (strategy.kind == MaskingKind::AnchorPlusRandom && anchors) {
    std::map<std::size_t, double> score;
    for (const auto& s : anchors->scores) score[s.token_index] = s.score;
    std::vector<std::size_t> ranked = anchors->members;
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      const double sa = score.count(a) ? score[a] : 0.0;
      const double sb = score.count(b) ? score[b] : 0.0;
      return sa != sb ? sa > sb : a < b;
    });
    take_words(ranked, pieces, budget, chosen);
  } else if (strategy.kind == MaskingKind::AttentionProxy) {
    if (saliency.size() < pieces.size()) throw Error("build_plan: saliency scores do not cover the sequence");
    std::vector<std::size_t> ranked(pieces.size());
    for (std::size_t w = 0; w < ranked.size(); ++w) ranked[w] = w;
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return saliency[a] > saliency[b]; });
    take_words(ranked, pieces, budget, chosen);
  }

  Rng rng(seed);
  if (chosen.size() < budget) {
    std::vector<std::size_t> rest;
    for (std::size_t p : candidates) {
      if (std::find(chosen.begin(), chosen.end(), p) == chosen.end()) rest.push_back(p);
    }
    // Partial Fisher-Yates: the first (budget - chosen) slots are the draw.
    const std::size_t need = budget - chosen.size();
    for (std::size_t i = 0; i < need; ++i) {
      std::size_t j = i + rng.uniform_index(rest.size() - i);
      std::swap(rest[i], rest[j]);
      chosen.push_back(rest[i]);
    }
  }
  std::sort(chosen.begin(), chosen.end());

  MaskingPlan plan;
  plan.citation_id = citation_id;
  const auto& pol = strategy.policy;
  const auto regular = static_cast<std::uint64_t>(vocab_size - SubwordVocab::kNumSpecial);
  for (std::size_t p : chosen) {
    MaskedPosition m;
    m.position = p;
    m.target = seq.ids[p];
    const double u = rng.uniform01();
    if (u < pol.mask_prob) {
      m.action = MaskAction::MaskToken;
      m.replacement = SubwordVocab::kMask;
    } else if (u < pol.mask_prob + pol.random_prob) {
      m.action = MaskAction::RandomToken;
      m.replacement = SubwordVocab::kNumSpecial + static_cast<std::int32_t>(rng.uniform_index(regular));
    } else {
      m.action = MaskAction::Keep;
      m.replacement = m.target;
    }
    plan.positions.push_back(m);
  }
  return plan;
}

std::vector<std::int32_t> apply_plan(const SubwordSequence& seq, const MaskingPlan& plan) {
  std::vector<std::int32_t> ids = seq.ids;
  for (const auto& m : plan.positions) {
    if (m.position >= ids.size() || ids[m.position] != m.target) throw Error("masking plan does not match sequence");
    ids[m.position] = m.replacement;
  }
  return ids;
}

std::vector<double> saliency_proxy(const LabelerModel& model, const SubwordSequence& seq) {
  EncoderTrace trace;
  MatrixXd em = model.score_table(seq, trace);
  const CrfParams crf = model.crf();
  CrfLoss loss = crf_nll(em, crf, viterbi(em, crf));
  VectorXd scratch = model.params.zeros_like();
  MatrixXd input_grad;
  model.backward_emissions(seq, trace, loss.emissions_grad, scratch, &input_grad);
  std::vector<double> out(seq.word_count(), 0.0);
  for (std::size_t p = 0; p < seq.size(); ++p) {
    if (seq.word_index[p]) out[*seq.word_index[p]] += input_grad.col(static_cast<Index>(p)).cwiseAbs().sum();
  }
  return out;
}

// ---------------------------------------------------------------------------

MlmModel::MlmModel(const LabelerModel& base, bool tied, std::uint64_t seed) : tied_(tied) {
  const auto& dims = base.encoder().dims;
  encoder_ = add_encoder(params, dims);
  transform = params.add("mlm.transform", dims.embed_dim, 2 * dims.hidden_dim);
  transform_bias = params.add("mlm.transform_bias", dims.embed_dim, 1);
  if (!tied) output = params.add("mlm.output", dims.vocab_size, dims.embed_dim);
  output_bias = params.add("mlm.output_bias", dims.vocab_size, 1);
  params.copy_blocks_from(base.params, "enc.");
  Rng rng(derive_seed(seed, 0x313));
  uniform_fill(params.view(transform), 1.0 / std::sqrt(static_cast<double>(2 * dims.hidden_dim)), rng);
  if (!tied) uniform_fill(params.view(output), 1.0 / std::sqrt(static_cast<double>(dims.embed_dim)), rng);
}

namespace {

struct HeadForward {
  EncoderTrace trace;
  MatrixXd hidden;     // 2h x m
  MatrixXd projected;  // d x m, after tanh
  MatrixXd logits;     // V x m
};

void head_forward(const MlmModel& model, std::span<const std::int32_t> ids, std::span<const std::size_t> positions,
                  HeadForward& f) {
  encoder_forward(model.params, model.encoder(), ids, f.trace);
  const auto m = static_cast<Index>(positions.size());
  f.hidden.resize(f.trace.output.rows(), m);
  for (Index j = 0; j < m; ++j) f.hidden.col(j) = f.trace.output.col(static_cast<Index>(positions[static_cast<std::size_t>(j)]));
  f.projected = model.params.view(model.transform) * f.hidden;
  f.projected.colwise() += model.params.view(model.transform_bias).col(0);
  f.projected = f.projected.array().tanh().matrix();
  if (model.tied()) {
    f.logits = model.params.view(model.encoder().embedding).transpose() * f.projected;
  } else {
    f.logits = model.params.view(model.output) * f.projected;
  }
  f.logits.colwise() += model.params.view(model.output_bias).col(0);
}

// Column-wise softmax minus one-hot targets, scaled by 1/m; returns mean CE.
double softmax_grad(const MatrixXd& logits, std::span<const std::int32_t> targets, MatrixXd& d) {
  const Index m = logits.cols();
  d.resize(logits.rows(), m);
  double total = 0.0;
  for (Index j = 0; j < m; ++j) {
    const double mx = logits.col(j).maxCoeff();
    d.col(j) = (logits.col(j).array() - mx).exp().matrix();
    const double z = d.col(j).sum();
    const auto t = static_cast<Index>(targets[static_cast<std::size_t>(j)]);
    total += std::log(z) + mx - logits(t, j);
    d.col(j) /= z;
    d(t, j) -= 1.0;
  }
  d /= static_cast<double>(m);
  return total / static_cast<double>(m);
}

double mlm_accumulate(const MlmModel& model, const MaskingPlan& plan, const SubwordSequence& seq, VectorXd* grad,
                      double scale) {
  if (plan.positions.empty()) throw Error("mlm_loss: plan has no masked positions");
  const auto ids = apply_plan(seq, plan);
  std::vector<std::size_t> positions;
  std::vector<std::int32_t> targets;
  for (const auto& m : plan.positions) {
    positions.push_back(m.position);
    targets.push_back(m.target);
  }
  HeadForward f;
  head_forward(model, ids, positions, f);
  MatrixXd d;
  const double loss = softmax_grad(f.logits, targets, d);
  if (!grad) return loss;
  d *= scale;
  const auto& P = model.params;
  VectorXd& g = *grad;
  P.view(g, model.output_bias).col(0) += d.rowwise().sum();
  MatrixXd dproj;
  if (model.tied()) {
    P.view(g, model.encoder().embedding).noalias() += f.projected * d.transpose();
    dproj = P.view(model.encoder().embedding) * d;
  } else {
    P.view(g, model.output).noalias() += d * f.projected.transpose();
    dproj = P.view(model.output).transpose() * d;
  }
  MatrixXd dpre = (dproj.array() * (1.0 - f.projected.array().square())).matrix();
  P.view(g, model.transform).noalias() += dpre * f.hidden.transpose();
  P.view(g, model.transform_bias).col(0) += dpre.rowwise().sum();
  MatrixXd dhidden = P.view(model.transform).transpose() * dpre;
  MatrixXd output_grad = MatrixXd::Zero(f.trace.output.rows(), f.trace.output.cols());
  for (std::size_t j = 0; j < positions.size(); ++j) output_grad.col(static_cast<Index>(positions[j])) = dhidden.col(static_cast<Index>(j));
  encoder_backward(P, model.encoder(), f.trace, output_grad, g);
  return loss;
}

}  // namespace

MatrixXd MlmModel::logits(std::span<const std::int32_t> ids, std::span<const std::size_t> positions) const {
  HeadForward f;
  head_forward(*this, ids, positions, f);
  return f.logits;
}

double cross_entropy(const MatrixXd& logits, std::span<const std::int32_t> targets) {
  if (logits.cols() == 0) throw Error("cross_entropy: no columns");
  if (static_cast<std::size_t>(logits.cols()) != targets.size()) throw Error("cross_entropy: target count mismatch");
  MatrixXd d;
  return softmax_grad(logits, targets, d);
}

MlmLoss mlm_loss(const MlmModel& model, const MaskingPlan& plan, const SubwordSequence& seq, bool with_grad) {
  MlmLoss out;
  if (with_grad) out.grad = model.params.zeros_like();
  out.loss = mlm_accumulate(model, plan, seq, with_grad ? &out.grad : nullptr, 1.0);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_inputs(std::span<const LabeledCitation> corpus, std::span<const AnchorSet> anchor_sets,
                  std::span<const std::vector<double>> saliency, const MaskingStrategy& strategy) {
  if (strategy.kind == MaskingKind::AnchorPlusRandom) {
    if (anchor_sets.size() != corpus.size()) throw Error("pretrain: anchor sets do not cover the corpus");
    for (std::size_t i = 0; i < anchor_sets.size(); ++i) {
      if (anchor_sets[i].citation_id != i) throw Error("pretrain: anchor set " + std::to_string(i) + " is out of order");
    }
  }
  if (strategy.kind == MaskingKind::AttentionProxy && saliency.size() != corpus.size()) {
    throw Error("pretrain: saliency scores do not cover the corpus");
  }
}

MaskingPlan plan_for(const SubwordSequence& seq, std::size_t i, std::span<const AnchorSet> anchor_sets,
                     std::span<const std::vector<double>> saliency, const MaskingStrategy& strategy,
                     std::uint64_t seed, std::size_t vocab_size) {
  const AnchorSet* a = strategy.kind == MaskingKind::AnchorPlusRandom ? &anchor_sets[i] : nullptr;
  std::span<const double> s;
  if (strategy.kind == MaskingKind::AttentionProxy) s = saliency[i];
  return build_plan(seq, a, s, strategy, seed, vocab_size, i);
}

}  // namespace

std::vector<MaskingPlan> preview_plans(const SubwordVocab& vocab, std::span<const LabeledCitation> corpus,
                                       std::span<const AnchorSet> anchor_sets,
                                       std::span<const std::vector<double>> saliency,
                                       const MaskingStrategy& strategy, std::uint64_t seed, std::size_t max_len) {
  check_strategy(strategy);
  if (strategy.kind == MaskingKind::None) return {};
  check_inputs(corpus, anchor_sets, saliency, strategy);
  std::vector<MaskingPlan> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    SubwordSequence seq = encode_citation(corpus[i], vocab, max_len);
    out.push_back(plan_for(seq, i, anchor_sets, saliency, strategy, derive_seed(seed, i), vocab.size()));
  }
  return out;
}

PretrainReport task_guided_pretrain(LabelerModel& model, std::span<const LabeledCitation> corpus,
                                    std::span<const AnchorSet> anchor_sets,
                                    std::span<const std::vector<double>> saliency, const MaskingStrategy& strategy,
                                    const PretrainConfig& config) {
  PretrainReport report;
  check_strategy(strategy);
  if (strategy.kind == MaskingKind::None || config.steps == 0) return report;
  if (corpus.empty()) throw Error("pretrain: empty corpus");
  if (config.batch_size == 0) throw Error("pretrain: batch_size must be positive");
  check_inputs(corpus, anchor_sets, saliency, strategy);

  const std::size_t V = model.vocab().size();
  std::vector<SubwordSequence> seqs;
  seqs.reserve(corpus.size());
  for (const auto& c : corpus) seqs.push_back(encode_citation(c, model.vocab(), config.max_len));

  MlmModel mlm(model, config.tied_head, derive_seed(config.seed, 1));

  // Fixed probe: same citations and plans before and after training.
  const std::size_t n_probe = std::min(config.eval_size, corpus.size());
  std::vector<MaskingPlan> probe;
  for (std::size_t i = 0; i < n_probe; ++i) {
    probe.push_back(plan_for(seqs[i], i, anchor_sets, saliency, strategy, derive_seed(config.seed, 0x9f0be + i), V));
  }
  auto probe_loss = [&]() {
    double t = 0.0;
    for (std::size_t i = 0; i < n_probe; ++i) t += mlm_accumulate(mlm, probe[i], seqs[i], nullptr, 1.0);
    return n_probe == 0 ? 0.0 : t / static_cast<double>(n_probe);
  };
  report.initial_loss = probe_loss();

  Adam adam(mlm.params.size(), {config.learning_rate, 0.9, 0.999, 1e-6, 1.0});
  const std::uint64_t plan_seed = derive_seed(config.seed, 3);
  std::vector<std::size_t> order(corpus.size());
  std::size_t pass = static_cast<std::size_t>(-1);
  VectorXd grad;
  for (std::size_t step = 0; step < config.steps; ++step) {
    grad = mlm.params.zeros_like();
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(config.batch_size);
    for (std::size_t j = 0; j < config.batch_size; ++j) {
      const std::size_t k = step * config.batch_size + j;
      if (k / corpus.size() != pass) {
        pass = k / corpus.size();
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(config.seed, 1000 + pass));
        rng.shuffle(order);
      }
      const std::size_t i = order[k % corpus.size()];
      MaskingPlan plan = plan_for(seqs[i], i, anchor_sets, saliency, strategy, derive_seed(plan_seed, k), V);
      report.masked_positions += plan.positions.size();
      loss += mlm_accumulate(mlm, plan, seqs[i], &grad, scale) * scale;
    }
    if (!std::isfinite(loss) || !grad.allFinite()) throw Error("pretrain: non-finite loss at step " + std::to_string(step));
    adam.step(mlm.params.values, grad);
    if (!mlm.params.all_finite()) throw Error("pretrain: parameters diverged at step " + std::to_string(step));
    report.step_loss.push_back(loss);
  }
  report.final_loss = probe_loss();
  model.params.copy_blocks_from(mlm.params, "enc.");
  return report;
}

}  // namespace citefield
