// Acceptance runner: one PASS/FAIL line per criterion. Exit status is
// non-zero when any criterion fails. Pass --skip-pipeline to stop after the fast
// checks (1-4 and 8).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "citefield/anchor.hpp"
#include "citefield/crf.hpp"
#include "citefield/labeler.hpp"
#include "citefield/metrics.hpp"
#include "citefield/pipeline.hpp"
#include "citefield/styler.hpp"

using namespace citefield;
namespace fs = std::filesystem;
using L = FieldLabel;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::cout << "criterion " << id << " (" << name << "): " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
            << std::endl;
  if (!o.pass) ++failures;
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. CRF against exhaustive enumeration

double brute_score(const MatrixXd& em, const CrfParams& crf, const std::vector<std::size_t>& y) {
  double s = crf.start(static_cast<Index>(y[0])) + crf.stop(static_cast<Index>(y.back()));
  for (std::size_t t = 0; t < y.size(); ++t) s += em(static_cast<Index>(t), static_cast<Index>(y[t]));
  for (std::size_t t = 1; t < y.size(); ++t) s += crf.transitions(static_cast<Index>(y[t - 1]), static_cast<Index>(y[t]));
  return s;
}

Outcome crf_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20240101);
  auto draw = [&](Index r, Index c) {
    MatrixXd m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-3, 3);
    return m;
  };
  std::size_t viterbi_mismatch = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(1 + trial % 5);
    MatrixXd em = draw(static_cast<Index>(n), 5);
    CrfParams crf{draw(5, 5), draw(5, 1).col(0), draw(5, 1).col(0)};

    std::vector<std::size_t> y(n, 0), best_path;
    double best = -1e300;
    std::vector<std::pair<double, std::vector<std::size_t>>> all;
    while (true) {
      const double s = brute_score(em, crf, y);
      all.emplace_back(s, y);
      if (s > best) {
        best = s;
        best_path = y;
      }
      std::size_t i = 0;
      while (i < n && ++y[i] == 5) y[i++] = 0;
      if (i == n) break;
    }
    if (viterbi(em, crf) != best_path) ++viterbi_mismatch;

    MatrixXd marg = MatrixXd::Zero(static_cast<Index>(n), 5);
    double z = 0.0;
    for (const auto& [s, path] : all) {
      const double w = std::exp(s - best);
      z += w;
      for (std::size_t t = 0; t < n; ++t) marg(static_cast<Index>(t), static_cast<Index>(path[t])) += w;
    }
    marg /= z;
    worst = std::max(worst, (forward_backward(em, crf).marginals - marg).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {viterbi_mismatch == 0 && worst < 1e-8 && secs < 60,
          fmt("100 tables; viterbi mismatches %.0f, max marginal error %.2e, %.1fs", double(viterbi_mismatch), worst,
              secs)};
}

// ---------------------------------------------------------------------------
// 2. Labeling loss gradient against central differences

std::shared_ptr<const SubwordVocab> letter_vocab() {
  std::vector<std::string> p = {"[PAD]", "[UNK]", "[MASK]", "[CLS]"};
  for (char c = 'a'; c <= 'z'; ++c) p.emplace_back(1, c);
  for (char c = 'a'; c <= 'z'; ++c) p.push_back("##" + std::string(1, c));
  return std::make_shared<const SubwordVocab>(p);
}

LabeledCitation words_citation(const std::vector<std::string>& words, const std::vector<L>& labels) {
  std::string src;
  for (std::size_t i = 0; i < words.size(); ++i) src += (i ? " " : "") + words[i];
  LabeledCitation c = citation_from_text(src, Origin::Task);
  c.labels = labels;
  return c;
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  auto vocab = letter_vocab();
  Rng rng(77);
  const double eps = 1e-4;
  double worst_rel = 0.0, worst_abs = 0.0;
  for (int m = 0; m < 20; ++m) {
    LabelerModel model(vocab, {2, 2}, static_cast<std::uint64_t>(m));
    for (Index i = 0; i < model.params.size(); ++i) model.params.values[i] = rng.uniform(-0.8, 0.8);
    std::vector<std::string> words;
    std::vector<L> labels;
    for (int w = 0; w < 3; ++w) {
      std::string s;
      const auto len = 1 + rng.uniform_index(3);
      for (std::uint64_t k = 0; k < len; ++k) s.push_back(static_cast<char>('a' + rng.uniform_index(26)));
      words.push_back(s);
      labels.push_back(label_from_index(rng.uniform_index(5)));
    }
    std::vector<LabeledExample> batch = {make_example(words_citation(words, labels), *vocab)};
    const auto lg = nll_and_gradient(model, batch);
    for (Index i = 0; i < model.params.size(); ++i) {
      const double keep = model.params.values[i];
      model.params.values[i] = keep + eps;
      const double up = nll_and_gradient(model, batch).loss;
      model.params.values[i] = keep - eps;
      const double down = nll_and_gradient(model, batch).loss;
      model.params.values[i] = keep;
      const double fd = (up - down) / (2 * eps);
      const double diff = std::abs(lg.grad[i] - fd);
      worst_abs = std::max(worst_abs, diff);
      // Relative to the larger magnitude, floored at 1e-3 so that entries
      // which are zero up to rounding do not divide by ~0.
      worst_rel = std::max(worst_rel, diff / std::max({std::abs(lg.grad[i]), std::abs(fd), 1e-3}));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_rel < 1e-4 && secs < 120,
          fmt("20 models; max relative error %.2e (floor 1e-3), max abs error %.2e, %.1fs", worst_rel, worst_abs,
              secs)};
}

// ---------------------------------------------------------------------------
// 3. Leave-one-out score against an independent recomputation

std::vector<LabeledCitation> rendered_corpus(std::size_t n, std::uint64_t seed) {
  auto records = synthesize_records(n, seed);
  CorpusOptions o;
  o.seed = seed;
  std::vector<LabeledCitation> out;
  for (auto& rc : generate_corpus(records, builtin_styles(), o)) out.push_back(rc.citation);
  return out;
}

Outcome anchor_oracle() {
  std::vector<double> full = {0.9, 0.8, 0.7}, reduced = {0.6, 0.5};
  const double stub = leave_one_out_score(full, reduced);
  const bool stub_ok = std::abs(stub - 0.25) <= 1e-15;

  auto corpus = rendered_corpus(50, 5);
  auto vocab = std::make_shared<const SubwordVocab>(build_vocab(corpus, 300));
  LabelerModel model(vocab, {4, 4}, 3);
  Rng rng(4);
  for (Index i = 0; i < model.params.size(); ++i) model.params.values[i] = rng.uniform(-1, 1);
  LabelerConfidence conf(model);
  constexpr auto kV = static_cast<Index>(label_index(L::Venue));

  auto marginals_of = [&](const LabeledCitation& c) {
    return forward_backward(model.score_table(encode_citation(c, *vocab)), model.crf()).marginals;
  };

  double worst = 0.0;
  std::size_t scored = 0;
  for (const auto& c : corpus) {
    std::vector<std::size_t> venue;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.labels[i] == L::Venue) venue.push_back(i);
    }
    if (venue.size() < 2) continue;
    MatrixXd m = marginals_of(c);
    double full_mean = 0.0;
    for (auto v : venue) full_mean += m(static_cast<Index>(v), kV);
    full_mean /= static_cast<double>(venue.size());
    for (auto drop : venue) {
      // Rebuild the shortened citation from its words and relabel it.
      std::vector<std::string> words;
      std::vector<L> labels;
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (j == drop) continue;
        words.push_back(c.tokens[j].text);
        labels.push_back(c.labels[j]);
      }
      LabeledCitation shorter = words_citation(words, labels);
      MatrixXd r = marginals_of(shorter);
      double rest = 0.0;
      for (std::size_t j = 0; j < shorter.size(); ++j) {
        if (shorter.labels[j] == L::Venue) rest += r(static_cast<Index>(j), kV);
      }
      rest /= static_cast<double>(venue.size() - 1);
      worst = std::max(worst, std::abs(anchor_score(conf, c, drop).score - (full_mean - rest)));
      ++scored;
    }
  }
  return {stub_ok && worst < 1e-9 && corpus.size() == 50,
          fmt("stub S = %.17g; 50 citations, %.0f venue words, max deviation %.2e", stub, double(scored), worst)};
}

// ---------------------------------------------------------------------------
// 4. Metric fixtures

Outcome metric_fixtures() {
  constexpr auto A = L::Author, T = L::Title, V = L::Venue, Y = L::Year, O = L::Other;
  auto ix = [](L l) { return label_index(l); };
  std::vector<std::string> bad;

  std::vector<std::vector<L>> gold = {{A, A, O, T, T, V, Y}, {A, O, T, T, T, V, V, Y}, {A, A, T, T, V, Y}};
  std::vector<std::vector<L>> pred = {{A, A, O, T, T, V, Y}, {A, O, T, T, V, V, V, Y}, {A, T, T, T, V, O}};
  std::vector<CitationCounts> per;
  for (std::size_t i = 0; i < 3; ++i) per.push_back(score_citation(gold[i], pred[i]));
  EvalReport r = aggregate(per);
  // hand-counted (gold, predicted, correct)
  const Counts tok[4] = {{5, 4, 4}, {7, 7, 6}, {4, 5, 4}, {3, 2, 2}};
  const Counts fld[4] = {{3, 3, 2}, {3, 3, 1}, {3, 3, 2}, {3, 2, 2}};
  for (std::size_t k = 0; k < 4; ++k) {
    if (!(r.token.counts[k] == tok[k])) bad.push_back("token counts " + std::string(label_name(label_from_index(k))));
    if (!(r.field.counts[k] == fld[k])) bad.push_back("field counts " + std::string(label_name(label_from_index(k))));
  }
  if (std::abs(r.field.micro.precision - 7.0 / 11.0) > 1e-12 || std::abs(r.field.micro.recall - 7.0 / 12.0) > 1e-12)
    bad.push_back("field micro");

  // 2/3 example
  std::vector<L> g2 = {A, A, O, T, T, T, T, O, Y}, p2 = {A, A, O, T, T, T, O, O, Y};
  Counts total;
  for (const auto& c : field_level(g2, p2)) total += c;
  const Prf two = prf(total);
  if (std::abs(two.f1 - 2.0 / 3.0) > 1e-12 || std::abs(two.precision - 2.0 / 3.0) > 1e-12) bad.push_back("2/3 example");

  // empty prediction
  std::vector<L> none(4, O), g3 = {T, T, T, V};
  const auto e = token_level(g3, none);
  const Prf pe = prf(e[ix(T)]);
  if (!(pe.precision == 0.0 && pe.recall == 0.0 && pe.f1 == 0.0 && pe.no_predictions)) bad.push_back("empty prediction");

  // token-level [T,T,T,V] vs [T,T,V,V]
  const auto tl = token_level(g3, std::vector<L>{T, T, V, V});
  if (prf(tl[ix(T)]).precision != 1.0 || std::abs(prf(tl[ix(T)]).recall - 2.0 / 3.0) > 1e-12 ||
      prf(tl[ix(V)]).precision != 0.5 || prf(tl[ix(V)]).recall != 1.0)
    bad.push_back("token example");

  // significance
  std::vector<std::vector<L>> sg, sa, sb;
  for (int i = 0; i < 6; ++i) {
    sg.push_back({A, T, V});
    sa.push_back({A, T, V});
    sb.push_back({O, O, O});
  }
  const double p_same = significance(sa, sa, sg, 1000, 1).p_value;
  const auto ex = significance(sa, sb, sg, 1000, 1);
  // enumerated: only the identity and the full swap reach |diff| = 1
  if (p_same != 1.0) bad.push_back("identical predictions p");
  if (!ex.exact || std::abs(ex.p_value - 2.0 / 64.0) > 1e-15) bad.push_back("exact enumeration p");

  std::string detail = fmt("identical p = %.3f, exact p = %.6f (2/64 = %.6f)", p_same, ex.p_value, 2.0 / 64.0);
  for (const auto& b : bad) detail += "; mismatch: " + b;
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------
// 8. Generator round trip

Outcome generator_round_trip() {
  auto records = synthesize_records(200, 8);
  auto styles = builtin_styles();
  std::size_t mismatches = 0, checked = 0;
  std::string first_problem;
  for (const auto& style : styles) {
    for (const auto& rec : records) {
      const LabeledCitation c = render(rec, style).citation;
      std::map<L, std::vector<std::string>> text;
      for (const auto& s : spans_from_labels(c.labels)) {
        const auto a = c.tokens[s.start].char_start, b = c.tokens[s.end - 1].char_end;
        text[s.label].push_back(normalize_whitespace(c.source.substr(a, b - a)));
      }
      const std::map<L, std::string> want = {
          {L::Author, normalize_whitespace(format_author_list(rec.authors, style))},
          {L::Title, normalize_whitespace(rec.title)},
          {L::Venue, normalize_whitespace(rec.venue)},
          {L::Year, std::to_string(rec.year)}};
      for (const auto& [label, value] : want) {
        ++checked;
        if (text[label] != std::vector<std::string>{value}) {
          ++mismatches;
          if (first_problem.empty()) first_problem = style.name + ": " + std::string(label_name(label)) + " '" + value + "'";
        }
      }
    }
  }
  BibRecord sh;
  sh.authors = {{"Shannon", "C. E."}};
  sh.title = "A mathematical theory of communication";
  sh.venue = "ACM SIGMOBILE Mobile Computing and Communications Review";
  sh.year = 2001;
  sh.volume = "5";
  sh.issue = "1";
  sh.pages = PageRange{"3", "55"};
  const bool exemplar = render(sh, builtin_style("harvard-like")).citation.source ==
                        "Shannon, C.E., 2001. A mathematical theory of communication. ACM SIGMOBILE Mobile Computing "
                        "and Communications Review, 5(1), pp.3-55.";
  std::string detail = fmt("%.0f styles x 200 records, %.0f field checks, %.0f mismatches; exemplar ",
                           double(styles.size()), double(checked), double(mismatches));
  detail += exemplar ? "exact" : "differs";
  if (!first_problem.empty()) detail += "; first: " + first_problem;
  return {mismatches == 0 && exemplar && styles.size() == 5, detail};
}

// ---------------------------------------------------------------------------
// 5-7. Desk-scale pipeline

std::string top_list(const FrequencyTable& t, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < std::min(n, t.size()); ++i) {
    out += (i ? ", " : "") + t[i].first + ":" + std::to_string(t[i].second);
  }
  return out;
}

std::size_t count_key_terms(const FrequencyTable& t) {
  const std::set<std::string> key = {"Journal", "Conference", "Proceedings", "Transactions"};
  std::size_t n = 0;
  for (std::size_t i = 0; i < std::min<std::size_t>(10, t.size()); ++i) n += key.count(t[i].first);
  return n;
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), a).string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), b).string());
  }
  for (const auto& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n) || read_file((a / n).string()) != read_file((b / n).string())) {
      diff = n;
      return false;
    }
  }
  return !names.empty();
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_pipeline = false;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--skip-pipeline") skip_pipeline = true;
  }
  const fs::path work = fs::temp_directory_path() / "citefield_acceptance";

  report(1, "CRF oracle", guarded(crf_oracle));
  report(2, "gradients", guarded(gradient_check));
  report(3, "leave-one-out oracle", guarded(anchor_oracle));
  report(4, "metric fixtures", guarded(metric_fixtures));

  if (!skip_pipeline) {
    fs::remove_all(work);
    PipelineConfig desk = preset_config("desk");
    AblationResult ab;
    double ab_secs = 0.0;
    Outcome run_error;
    try {
      const auto t0 = Clock::now();
      ab = run_ablation(desk, (work / "ablation").string());
      ab_secs = seconds_since(t0);
    } catch (const std::exception& e) {
      run_error = {false, std::string("ablation failed: ") + e.what()};
    }

    if (!run_error.detail.empty()) {
      report(5, "ablation trend", run_error);
      report(6, "anchor frequency", run_error);
    } else {
      report(5, "ablation trend", guarded([&] {
               auto venue = [&](const std::string& s) {
                 for (const auto& row : ab.rows) {
                   if (row.strategy == s) return row.mean_f1[2];
                 }
                 throw Error("missing row " + s);
               };
               const double a = venue("anchor"), r = venue("random"), n = venue("none"), t = venue("attention");
               const std::size_t wins = ab.wins_over_none.at("anchor");
               const bool ok = a >= r && a >= n && wins >= 3 && ab_secs < 1800;
               std::string d = fmt("Venue F1 anchor %.2f, attention %.2f, random %.2f, none %.2f", 100 * a, 100 * t,
                                   100 * r, 100 * n);
               d += fmt("; anchor > none in %.0f/5 seeds; %.1f min", double(wins), ab_secs / 60.0);
               if (!ok) d += fmt("; anchor venue share %.3f", ab.anchor_venue_share);
               return Outcome{ok, d};
             }));
      report(6, "anchor frequency", guarded([&] {
               const std::size_t key = count_key_terms(ab.anchor_top);
               const bool ok = key >= 2 && ab.masked_venue_share >= 0.60;
               std::string d = fmt("anchor-set top-10 has %.0f key venue terms; venue share of masked words %.3f "
                                   "(anchor members alone %.3f)",
                                   double(key), ab.masked_venue_share, ab.anchor_venue_share);
               d += "; anchor top-10 [" + top_list(ab.anchor_top, 10) + "]";
               d += "; masked top-10 [" + top_list(ab.masked_top, 10) + "]";
               return Outcome{ok, d};
             }));
    }

    report(7, "determinism", guarded([&] {
             PipelineConfig c = preset_config("desk");
             c.strategy = "anchor";
             c.pretrain.steps = 200;
             const auto t0 = Clock::now();
             run_pipeline(c, (work / "det_a").string());
             run_pipeline(c, (work / "det_b").string());
             std::string diff;
             const bool same = same_tree(work / "det_a", work / "det_b", diff);
             std::string d = same ? "all artifacts bit-identical" : "differs at " + diff;
             d += fmt(" (%.0fs)", seconds_since(t0));
             return Outcome{same, d};
           }));
  }

  report(8, "generator round trip", guarded(generator_round_trip));
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
