#include <cmath>

#include "citefield/crf.hpp"
#include "citefield/labeler.hpp"
#include "citefield/styler.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace citefield;
using L = FieldLabel;

namespace {

MatrixXd random_matrix(Index r, Index c, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-2, 2);
  return m;
}

CrfParams random_crf(std::uint64_t seed) {
  CrfParams p;
  p.transitions = random_matrix(5, 5, seed);
  p.start = random_matrix(5, 1, seed + 1).col(0);
  p.stop = random_matrix(5, 1, seed + 2).col(0);
  return p;
}

// Independent path score: written out here rather than calling path_score.
double score_of(const MatrixXd& em, const CrfParams& crf, const std::vector<std::size_t>& y) {
  double s = crf.start(static_cast<Index>(y[0])) + crf.stop(static_cast<Index>(y.back()));
  for (std::size_t t = 0; t < y.size(); ++t) s += em(static_cast<Index>(t), static_cast<Index>(y[t]));
  for (std::size_t t = 1; t < y.size(); ++t) s += crf.transitions(static_cast<Index>(y[t - 1]), static_cast<Index>(y[t]));
  return s;
}

template <class F>
void for_each_path(std::size_t n, F&& f) {
  std::vector<std::size_t> y(n, 0);
  while (true) {
    f(y);
    std::size_t i = 0;
    while (i < n && ++y[i] == 5) y[i++] = 0;
    if (i == n) return;
  }
}

std::vector<LabeledCitation> rendered(std::size_t n, std::uint64_t seed) {
  auto records = synthesize_records(n, seed);
  auto styles = builtin_styles();
  CorpusOptions o;
  o.seed = seed;
  std::vector<LabeledCitation> out;
  for (auto& rc : generate_corpus(records, styles, o)) out.push_back(rc.citation);
  return out;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("viterbi equals exhaustive search") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    MatrixXd em = random_matrix(3, 5, seed * 10);
    CrfParams crf = random_crf(seed * 10 + 3);
    double best = -1e300;
    LabelPath arg;
    for_each_path(3, [&](const std::vector<std::size_t>& y) {
      double s = score_of(em, crf, y);
      if (s > best) {
        best = s;
        arg = y;
      }
    });
    CHECK(viterbi(em, crf) == arg);
    CHECK(path_score(em, crf, arg) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("viterbi simple cases") {
  MatrixXd em = random_matrix(6, 5, 77);
  CrfParams zero = CrfParams::zeros(5);
  LabelPath p = viterbi(em, zero);
  for (Index t = 0; t < em.rows(); ++t) {
    Index arg;
    em.row(t).maxCoeff(&arg);
    CHECK(p[static_cast<std::size_t>(t)] == static_cast<std::size_t>(arg));
  }
  MatrixXd one = random_matrix(1, 5, 78);
  CrfParams crf = random_crf(79);
  VectorXd total = one.row(0).transpose() + crf.start + crf.stop;
  Index arg;
  total.maxCoeff(&arg);
  CHECK(viterbi(one, crf) == LabelPath{static_cast<std::size_t>(arg)});
}

TEST_CASE("forward-backward equals brute-force marginals") {
  MatrixXd em = random_matrix(4, 5, 31);
  CrfParams crf = random_crf(32);
  MatrixXd marg = MatrixXd::Zero(4, 5);
  double z = 0.0;
  for_each_path(4, [&](const std::vector<std::size_t>& y) {
    double w = std::exp(score_of(em, crf, y));
    z += w;
    for (std::size_t t = 0; t < 4; ++t) marg(static_cast<Index>(t), static_cast<Index>(y[t])) += w;
  });
  marg /= z;
  auto fb = forward_backward(em, crf);
  CHECK(fb.log_partition == doctest::Approx(std::log(z)).epsilon(1e-12));
  CHECK((fb.marginals - marg).cwiseAbs().maxCoeff() < 1e-8);
  for (Index t = 0; t < 4; ++t) CHECK(std::abs(fb.marginals.row(t).sum() - 1.0) < 1e-9);
}

TEST_CASE("forward-backward symmetric and single-position cases") {
  auto fb = forward_backward(MatrixXd::Zero(3, 5), CrfParams::zeros(5));
  CHECK((fb.marginals.array() - 0.2).abs().maxCoeff() < 1e-12);
  CHECK(fb.log_partition == doctest::Approx(3 * std::log(5.0)));

  MatrixXd one = random_matrix(1, 5, 40);
  CrfParams crf = random_crf(41);
  VectorXd s = one.row(0).transpose() + crf.start + crf.stop;
  VectorXd soft = (s.array() - s.maxCoeff()).exp();
  soft /= soft.sum();
  CHECK((forward_backward(one, crf).marginals.row(0).transpose() - soft).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("crf gradient matches finite differences") {
  MatrixXd em = random_matrix(4, 5, 51);
  CrfParams crf = random_crf(52);
  LabelPath gold = {0, 1, 1, 2};
  auto loss = crf_nll(em, crf, gold);
  const double eps = 1e-5;
  for (Index t = 0; t < 4; ++t) {
    for (Index k = 0; k < 5; ++k) {
      MatrixXd a = em, b = em;
      a(t, k) += eps;
      b(t, k) -= eps;
      double fd = (crf_nll(a, crf, gold).nll - crf_nll(b, crf, gold).nll) / (2 * eps);
      CHECK(loss.emissions_grad(t, k) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 5; ++j) {
      CrfParams a = crf, b = crf;
      a.transitions(i, j) += eps;
      b.transitions(i, j) -= eps;
      double fd = (crf_nll(em, a, gold).nll - crf_nll(em, b, gold).nll) / (2 * eps);
      CHECK(loss.grad.transitions(i, j) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("tiny model forward pass matches a scalar evaluation") {
  LabelerModel m = testutil::tiny_model(3);
  const auto& P = m.params;
  const auto& enc = m.encoder();
  auto c = testutil::make_citation({"a", "b"}, {L::Author, L::Title});
  auto seq = encode_citation(c, m.vocab());
  REQUIRE(seq.size() == 3);  // [CLS] a b
  const int len = 3, d = 2, h = 2;

  auto run = [&](Index wi, Index wr, Index bb, bool reverse) {
    auto W = P.view(wi);
    auto U = P.view(wr);
    auto B = P.view(bb);
    auto E = P.view(enc.embedding);
    std::vector<std::array<double, 2>> hs(len);
    double hp[2] = {0, 0}, cp[2] = {0, 0};
    for (int s = 0; s < len; ++s) {
      int t = reverse ? len - 1 - s : s;
      double x[2] = {E(0, seq.ids[t]), E(1, seq.ids[t])};
      double a[8];
      for (int r = 0; r < 4 * h; ++r) {
        a[r] = B(r, 0);
        for (int k = 0; k < d; ++k) a[r] += W(r, k) * x[k];
        for (int k = 0; k < h; ++k) a[r] += U(r, k) * hp[k];
      }
      for (int u = 0; u < h; ++u) {
        double ig = sigm(a[u]), fg = sigm(a[h + u]), gg = std::tanh(a[2 * h + u]), og = sigm(a[3 * h + u]);
        cp[u] = fg * cp[u] + ig * gg;
        hs[t][u] = og * std::tanh(cp[u]);
      }
      for (int u = 0; u < h; ++u) hp[u] = hs[t][u];
    }
    return hs;
  };
  auto fw = run(enc.fw_input, enc.fw_recur, enc.fw_bias, false);
  auto bw = run(enc.bw_input, enc.bw_recur, enc.bw_bias, true);

  MatrixXd table = m.score_table(seq);
  REQUIRE(table.rows() == 2);
  REQUIRE(table.cols() == 5);
  auto Wm = P.view(m.emit_weight);
  auto bm = P.view(m.emit_bias);
  for (int w = 0; w < 2; ++w) {
    int pos = w + 1;
    double feat[4] = {fw[pos][0], fw[pos][1], bw[pos][0], bw[pos][1]};
    for (int k = 0; k < 5; ++k) {
      double e = bm(k, 0);
      for (int j = 0; j < 4; ++j) e += Wm(k, j) * feat[j];
      CHECK(std::abs(table(w, k) - e) < 1e-12);
    }
  }
}

TEST_CASE("zero model gives a zero table") {
  LabelerModel m = testutil::tiny_model(4);
  m.params.values.setZero();
  auto seq = encode_citation(testutil::make_citation({"ab"}, {L::Title}), m.vocab());
  MatrixXd t = m.score_table(seq);
  CHECK(t.rows() == 1);
  CHECK(t.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("labeling loss gradient matches finite differences") {
  LabelerModel m = testutil::tiny_model(5);
  auto c = testutil::make_citation({"ab", "c", "de"}, {L::Author, L::Title, L::Venue});
  std::vector<LabeledExample> batch = {make_example(c, m.vocab())};
  auto lg = nll_and_gradient(m, batch);
  const double eps = 1e-4;
  double worst = 0.0;
  for (Index i = 0; i < m.params.size(); ++i) {
    const double keep = m.params.values[i];
    m.params.values[i] = keep + eps;
    const double up = nll_and_gradient(m, batch).loss;
    m.params.values[i] = keep - eps;
    const double down = nll_and_gradient(m, batch).loss;
    m.params.values[i] = keep;
    const double fd = (up - down) / (2 * eps);
    const double g = lg.grad[i];
    if (g == 0.0 && fd == 0.0) continue;
    worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-3}));
  }
  CHECK(worst < 1e-4);

  std::vector<LabeledExample> twice = {batch[0], batch[0]};
  CHECK(nll_and_gradient(m, twice).loss == doctest::Approx(lg.loss).epsilon(1e-14));
}

TEST_CASE("overwhelming margin gives near-zero loss") {
  LabelerModel m = testutil::tiny_model(6);
  m.params.values.setZero();
  // Bias alone decides every word; Title wins by a wide margin.
  m.params.view(m.emit_bias)(label_index(L::Title), 0) = 40.0;
  auto c = testutil::make_citation({"ab", "c"}, {L::Title, L::Title});
  std::vector<LabeledExample> batch = {make_example(c, m.vocab())};
  CHECK(nll_and_gradient(m, batch).loss < 1e-12);
}

TEST_CASE("training lowers the loss and is deterministic") {
  auto corpus = rendered(50, 8);
  auto vocab = std::make_shared<const SubwordVocab>(build_vocab(corpus, 200));
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.epochs = 10;
  cfg.batch_size = 8;
  cfg.seed = 2;

  LabelerModel a(vocab, {8, 8}, 1);
  auto rep = train(a, corpus, {}, cfg);
  REQUIRE(rep.epoch_loss.size() == 10);
  CHECK(rep.epoch_loss.back() < rep.initial_loss);

  LabelerModel b(vocab, {8, 8}, 1);
  train(b, corpus, {}, cfg);
  CHECK(a.serialized() == b.serialized());

  LabelerModel c(vocab, {8, 8}, 1);
  const std::string before = c.serialized();
  TrainConfig none = cfg;
  none.epochs = 0;
  train(c, corpus, {}, none);
  CHECK(c.serialized() == before);
}

TEST_CASE("prediction shape, confidences and overfitting") {
  auto corpus = rendered(3, 11);
  auto vocab = std::make_shared<const SubwordVocab>(build_vocab(corpus, 120));
  LabelerModel m(vocab, {8, 8}, 4);
  TrainConfig cfg;
  cfg.learning_rate = 2e-2;
  cfg.epochs = 150;
  cfg.batch_size = 3;
  train(m, corpus, {}, cfg);
  for (const auto& c : corpus) {
    auto p = predict(m, c);
    CHECK(p.labels.size() == c.size());
    CHECK(p.labels == c.labels);
    for (Index r = 0; r < p.confidence.marginals.rows(); ++r) {
      CHECK(std::abs(p.confidence.marginals.row(r).sum() - 1.0) < 1e-9);
      CHECK(p.confidence.marginals.row(r).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("model files round-trip and check the vocabulary") {
  LabelerModel m = testutil::tiny_model(7);
  const std::string path = "test_labeler_roundtrip.model";
  m.save(path);
  LabelerModel back = LabelerModel::load(path, m.vocab_ptr());
  CHECK(back.serialized() == m.serialized());
  auto other = std::make_shared<const SubwordVocab>(std::vector<std::string>{"[PAD]", "[UNK]", "[MASK]", "[CLS]", "x"});
  CHECK_THROWS_AS(LabelerModel::load(path, other), Error);
  std::remove(path.c_str());
}
