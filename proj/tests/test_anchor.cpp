#include <algorithm>
#include <cmath>
#include <map>

#include "citefield/anchor.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace citefield;
using L = FieldLabel;

namespace {

constexpr Index kV = static_cast<Index>(label_index(L::Venue));

// Venue confidence is a function of which word is missing; other columns
// share the remainder equally.
class StubModel final : public ConfidenceModel {
 public:
  std::vector<std::string> all;
  std::vector<double> full;                 // venue column for the complete citation
  std::map<std::string, double> when_gone;  // venue value for every word once this word is removed

  MatrixXd marginals(std::span<const std::string> words) const override {
    MatrixXd m(static_cast<Index>(words.size()), 5);
    std::string missing;
    for (const auto& w : all) {
      if (std::find(words.begin(), words.end(), w) == words.end()) missing = w;
    }
    for (Index r = 0; r < m.rows(); ++r) {
      const double v = missing.empty() ? full[static_cast<std::size_t>(r)] : when_gone.at(missing);
      m.row(r).setConstant((1.0 - v) / 4.0);
      m(r, kV) = v;
    }
    return m;
  }
};

LabeledCitation venue_fixture() {
  return testutil::make_citation({"x", "v0", "v1", "v2"}, {L::Title, L::Venue, L::Venue, L::Venue});
}

// Toy corpus: a title word, then a venue that begins with Journal or Review.
std::vector<LabeledCitation> journal_corpus(std::size_t n, std::uint64_t seed) {
  const std::vector<std::string> topics = {"data", "graph", "cell", "code", "heat", "law", "ion", "gene"};
  Rng rng(seed);
  std::vector<LabeledCitation> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> w = {rng.pick(topics), rng.pick(topics)};
    std::vector<L> l = {L::Title, L::Title};
    w.push_back(rng.bernoulli(0.6) ? "Journal" : "Review");
    l.push_back(L::Venue);
    w.push_back("of");
    l.push_back(L::Venue);
    w.push_back(rng.pick(topics));
    l.push_back(L::Venue);
    out.push_back(testutil::make_citation(w, l));
  }
  return out;
}

std::shared_ptr<const SubwordVocab> journal_vocab() {
  std::vector<std::string> p = {"[PAD]", "[UNK]", "[MASK]", "[CLS]", "Journal", "Review", "of", "data", "graph",
                                "cell",  "code",  "heat",   "law",   "ion",     "gene"};
  return std::make_shared<const SubwordVocab>(p);
}

std::vector<AnchorSet> journal_sets(const std::vector<LabeledCitation>& corpus) {
  std::vector<AnchorSet> sets;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    AnchorSet s;
    s.citation_id = i;
    for (std::size_t j = 0; j < corpus[i].size(); ++j) {
      if (corpus[i].labels[j] == L::Venue) s.scores.push_back({j, corpus[i].tokens[j].text == "Journal" ? 0.3 : 0.0});
      if (corpus[i].tokens[j].text == "Journal") s.members.push_back(j);
    }
    sets.push_back(s);
  }
  return sets;
}

}  // namespace

TEST_CASE("leave-one-out arithmetic") {
  std::vector<double> full = {0.9, 0.8, 0.7};
  std::vector<double> reduced = {0.6, 0.5};
  CHECK(leave_one_out_score(full, reduced) == doctest::Approx(0.25).epsilon(1e-14));
  std::vector<double> flat = {0.9, 0.9, 0.9};
  std::vector<double> flat2 = {0.9, 0.9};
  CHECK(std::abs(leave_one_out_score(flat, flat2)) < 1e-15);
  CHECK_THROWS_AS(leave_one_out_score(std::vector<double>{0.9}, std::vector<double>{}), DegenerateVenueError);
}

TEST_CASE("anchor score through a stub model") {
  StubModel m;
  auto c = venue_fixture();
  m.all = c.words();
  m.full = {0.1, 0.9, 0.8, 0.7};
  m.when_gone = {{"v0", 0.55}, {"v1", 0.8}, {"v2", 0.8}};
  auto s = anchor_score(m, c, 1);
  CHECK(s.token_index == 1);
  CHECK(s.score == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(anchor_score(m, c, 0), Error);

  auto one = testutil::make_citation({"x", "v0"}, {L::Title, L::Venue});
  CHECK_THROWS_AS(anchor_score(m, one, 1), DegenerateVenueError);
}

TEST_CASE("anchor score equals an independent recomputation") {
  LabelerModel model = testutil::tiny_model(21, 3, 3);
  auto c = testutil::make_citation({"ab", "jo", "of", "ieee", "tr", "1999"},
                                   {L::Author, L::Venue, L::Venue, L::Venue, L::Venue, L::Year});
  LabelerConfidence conf(model);

  // Oracle: rebuild each shortened citation and run the CRF on it from scratch.
  auto venue_col = [&](const LabeledCitation& cit) {
    auto seq = encode_citation(cit, model.vocab());
    auto fb = forward_backward(model.score_table(seq), model.crf());
    return fb.marginals;
  };
  MatrixXd full = venue_col(c);
  double full_mean = 0.0;
  for (Index r = 1; r <= 4; ++r) full_mean += full(r, kV) / 4.0;

  for (std::size_t i = 1; i <= 4; ++i) {
    std::vector<std::string> w;
    std::vector<L> l;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j == i) continue;
      w.push_back(c.tokens[j].text);
      l.push_back(c.labels[j]);
    }
    auto reduced = testutil::make_citation(w, l);
    MatrixXd m = venue_col(reduced);
    double rest = 0.0;
    for (std::size_t j = 0; j < reduced.size(); ++j) {
      if (reduced.labels[j] == L::Venue) rest += m(static_cast<Index>(j), kV) / 3.0;
    }
    CHECK(std::abs(anchor_score(conf, c, i).score - (full_mean - rest)) < 1e-9);
  }
}

TEST_CASE("thresholding and degenerate citations") {
  StubModel m;
  auto c = venue_fixture();
  m.all = c.words();
  m.full = {0.1, 0.5, 0.5, 0.5};
  // scores: 0.25, 0.00, 0.06
  m.when_gone = {{"v0", 0.25}, {"v1", 0.5}, {"v2", 0.44}, {"x", 0.5}};
  std::vector<LabeledCitation> ds = {c, testutil::make_citation({"x", "v0"}, {L::Title, L::Venue})};
  auto sets = extract_anchor_sets(m, ds);
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].members == std::vector<std::size_t>{1, 3});
  REQUIRE(sets[0].scores.size() == 3);
  CHECK(sets[0].scores[0].score == doctest::Approx(0.25));
  CHECK(std::abs(sets[0].scores[1].score) < 1e-12);
  CHECK(sets[0].scores[2].score == doctest::Approx(0.06));
  CHECK_FALSE(sets[0].degenerate);
  CHECK(sets[1].members.empty());
  CHECK(sets[1].degenerate);

  m.when_gone = {{"v0", 0.46}, {"v1", 0.5}, {"v2", 0.45}};
  CHECK(extract_anchor_sets(m, std::vector<LabeledCitation>{c})[0].members.empty());

  CHECK(direct_anchor_sets(m, std::vector<LabeledCitation>{}).empty());
  CHECK(direct_anchor_sets(m, std::vector<LabeledCitation>{c}).size() == 1);
  CHECK_THROWS_AS(extract_anchor_sets(m, ds, AnchorConfig{0.0, 2}), Error);
}

TEST_CASE("agreement and serialization") {
  AnchorSet a{0, {1, 2}, {{1, 0.2}, {2, 0.1}}, false};
  AnchorSet b{0, {2, 3}, {}, false};
  std::vector<AnchorSet> A = {a}, B = {b}, none = {AnchorSet{}};
  CHECK(anchor_agreement(A, B) == doctest::Approx(1.0 / 3.0));
  CHECK(anchor_agreement(none, none) == 1.0);

  const std::string line = anchor_set_to_line(a);
  CHECK(anchor_set_from_line(line) == a);
}

TEST_CASE("selector gradient matches finite differences") {
  auto vocab = journal_vocab();
  SelectorModel sel(vocab, {3, 2}, 5);
  testutil::randomize(sel.params, 6);
  auto c = journal_corpus(1, 3)[0];
  auto seq = encode_citation(c, *vocab);
  std::vector<int> targets = {0, 0, 1, 0, 0};
  VectorXd g = sel.params.zeros_like();
  const double loss = sel.loss_and_gradient(seq, targets, 2.5, g, 1.0);
  CHECK(loss > 0.0);
  const double eps = 1e-5;
  double worst = 0.0;
  for (Index i = 0; i < sel.params.size(); ++i) {
    VectorXd scratch = sel.params.zeros_like();
    const double keep = sel.params.values[i];
    sel.params.values[i] = keep + eps;
    const double up = sel.loss_and_gradient(seq, targets, 2.5, scratch, 1.0);
    sel.params.values[i] = keep - eps;
    const double down = sel.loss_and_gradient(seq, targets, 2.5, scratch, 1.0);
    sel.params.values[i] = keep;
    const double fd = (up - down) / (2 * eps);
    if (g[i] == 0.0 && fd == 0.0) continue;
    worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-3}));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("selector learns a separable anchor word") {
  auto vocab = journal_vocab();
  auto corpus = journal_corpus(80, 1);
  auto sets = journal_sets(corpus);
  LabelerModel init(vocab, {8, 8}, 3);
  SelectorConfig cfg;
  cfg.learning_rate = 2e-2;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.seed = 4;
  auto trained = train_selector(sets, corpus, cfg, init);
  CHECK(trained.report.positives > 0);
  CHECK(trained.report.holdout_recall == doctest::Approx(1.0));
  CHECK(trained.report.epoch_loss.back() < trained.report.epoch_loss.front());

  auto fresh = journal_corpus(20, 99);
  auto picked = select_anchors(trained.model, fresh);
  REQUIRE(picked.size() == fresh.size());
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    for (std::size_t j = 0; j < fresh[i].size(); ++j) {
      const bool member = std::find(picked[i].members.begin(), picked[i].members.end(), j) != picked[i].members.end();
      CHECK(member == (fresh[i].tokens[j].text == "Journal"));
    }
  }
  CHECK(select_anchors(trained.model, fresh) == picked);

  const std::string path = "test_selector_roundtrip.model";
  trained.model.save(path);
  auto back = SelectorModel::load(path, vocab);
  CHECK(back.serialized() == trained.model.serialized());
  std::remove(path.c_str());
}

TEST_CASE("selector degenerate settings") {
  auto vocab = journal_vocab();
  auto corpus = journal_corpus(40, 2);
  auto sets = journal_sets(corpus);
  LabelerModel init(vocab, {4, 4}, 3);

  SelectorConfig zero;
  zero.class_weight = 0.0;
  zero.epochs = 5;
  zero.learning_rate = 2e-2;
  auto t0 = train_selector(sets, corpus, zero, init);
  CHECK(t0.report.holdout_recall == 0.0);

  SelectorConfig idle;
  idle.epochs = 0;
  auto t1 = train_selector(sets, corpus, idle, init);
  CHECK_FALSE(t1.report.warning.empty());

  std::vector<AnchorSet> empty_sets = sets;
  for (auto& s : empty_sets) s.members.clear();
  CHECK_THROWS_AS(train_selector(empty_sets, corpus, idle, init), Error);

  SelectorModel flat = SelectorModel::from_labeler(init, 1);
  flat.params.view(flat.head_weight).setZero();
  flat.params.view(flat.head_bias).setZero();
  auto probs = flat.probabilities(corpus[0].words());
  CHECK((probs.array() - 0.5).abs().maxCoeff() < 1e-15);
  for (const auto& s : select_anchors(flat, corpus)) CHECK(s.members.empty());
}
