#include <map>

#include "citefield/styler.hpp"
#include "doctest.h"

using namespace citefield;
using L = FieldLabel;

namespace {

BibRecord shannon() {
  BibRecord r;
  r.authors = {{"Shannon", "C. E."}};
  r.title = "A mathematical theory of communication";
  r.venue = "ACM SIGMOBILE Mobile Computing and Communications Review";
  r.year = 2001;
  r.volume = "5";
  r.issue = "1";
  r.pages = PageRange{"3", "55"};
  return r;
}

// Source text covered by each field's spans.
std::map<L, std::vector<std::string>> field_text(const LabeledCitation& c) {
  std::map<L, std::vector<std::string>> out;
  for (const auto& s : spans_from_labels(c.labels)) {
    const auto a = c.tokens[s.start].char_start;
    const auto b = c.tokens[s.end - 1].char_end;
    out[s.label].push_back(c.source.substr(a, b - a));
  }
  return out;
}

}  // namespace

TEST_CASE("harvard-like renders the exemplar exactly") {
  auto rc = render(shannon(), builtin_style("harvard-like"));
  CHECK(rc.citation.source ==
        "Shannon, C.E., 2001. A mathematical theory of communication. ACM SIGMOBILE Mobile Computing and "
        "Communications Review, 5(1), pp.3-55.");
  CHECK(validate_citation(rc.citation).empty());
  auto f = field_text(rc.citation);
  CHECK(f[L::Author] == std::vector<std::string>{"Shannon, C.E."});
  CHECK(f[L::Year] == std::vector<std::string>{"2001"});
  CHECK(f[L::Title] == std::vector<std::string>{"A mathematical theory of communication"});
  CHECK(f[L::Venue] == std::vector<std::string>{"ACM SIGMOBILE Mobile Computing and Communications Review"});

  BibRecord nopages = shannon();
  nopages.pages.reset();
  CHECK(render(nopages, builtin_style("harvard-like")).citation.source ==
        "Shannon, C.E., 2001. A mathematical theory of communication. ACM SIGMOBILE Mobile Computing and "
        "Communications Review, 5(1).");
}

TEST_CASE("ieee-like renders the Voelcker example") {
  BibRecord r;
  r.authors = {{"Voelcker", "J"}};
  r.year = 2013;
  r.title = "Communications and Navigation";
  r.venue = "IEEE Spectrum";
  r.pages = PageRange{"2574", "2583"};
  auto rc = render(r, builtin_style("ieee-like"));
  CHECK(rc.citation.source == "Voelcker, J ( 2013), Communications and Navigation, IEEE Spectrum, pages 2574-2583.");
  CHECK(field_text(rc.citation)[L::Venue] == std::vector<std::string>{"IEEE Spectrum"});
}

TEST_CASE("connective punctuation is Other") {
  auto rc = render(shannon(), builtin_style("harvard-like"));
  const auto& c = rc.citation;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    // the comma after the venue and the "pp" literal belong to no field
    if (c.tokens[i].text == "pp") CHECK(c.labels[i] == L::Other);
  }
  CHECK(c.labels.back() == L::Other);
}

TEST_CASE("all built-in styles are valid and serialize") {
  auto styles = builtin_styles();
  CHECK(styles.size() == 5);
  for (const auto& s : styles) CHECK(check_style(s).empty());
  auto back = styles_from_json(styles_to_json(styles));
  REQUIRE(back.size() == styles.size());
  for (std::size_t i = 0; i < styles.size(); ++i) {
    CHECK(render(shannon(), back[i]).citation == render(shannon(), styles[i]).citation);
  }
  CitationStyle broken = styles[0];
  std::erase_if(broken.segments, [](const StyleSegment& s) { return s.source == SegmentSource::Venue; });
  CHECK_FALSE(check_style(broken).empty());
}

TEST_CASE("initials") {
  CHECK(format_initials("C. E.") == "C.E.");
  CHECK(format_initials("Jane Q") == "J.Q.");
  CHECK(format_initials("J") == "J");
}

TEST_CASE("corpus generation counts, determinism and balance") {
  auto styles = builtin_styles();
  std::vector<CitationStyle> three(styles.begin(), styles.begin() + 3);
  std::vector<BibRecord> two = {shannon(), shannon()};
  two[1].title = "Another title";
  CorpusOptions o;
  o.per_record_styles = 3;
  o.seed = 9;
  auto a = generate_corpus(two, three, o);
  CHECK(a.size() == 6);
  auto b = generate_corpus(two, three, o);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].citation == b[i].citation);

  std::vector<BibRecord> tagged;
  for (int i = 0; i < 10; ++i) {
    BibRecord r = shannon();
    r.discipline = "A";
    tagged.push_back(r);
  }
  for (int i = 0; i < 4; ++i) {
    BibRecord r = shannon();
    r.discipline = "B";
    tagged.push_back(r);
  }
  CorpusOptions bal;
  bal.balance = true;
  CHECK(generate_corpus(tagged, styles, bal).size() == 8);
  bal.balance = false;
  CHECK(generate_corpus(tagged, styles, bal).size() == 14);
}

TEST_CASE("noise keeps labels aligned with tokens") {
  auto rc = render(shannon(), builtin_style("harvard-like"));
  Rng rng(4);
  auto noisy = add_noise(rc.citation, NoiseOptions{1.0, 0.0}, rng);
  CHECK(validate_citation(noisy).empty());
  for (const auto& t : noisy.tokens) CHECK_FALSE((t.text.size() == 1 && is_punct_char(t.text[0])));
  std::size_t venue = 0;
  for (auto l : noisy.labels) venue += l == L::Venue;
  CHECK(venue == 7);

  Rng rng2(4);
  auto lower = add_noise(rc.citation, NoiseOptions{0.0, 1.0}, rng2);
  CHECK(lower.size() == rc.citation.size());
  CHECK(lower.tokens[0].text == "shannon");
}

TEST_CASE("synthetic records satisfy invariants") {
  auto recs = synthesize_records(300, 5);
  CHECK(recs.size() == 300);
  for (const auto& r : recs) CHECK(check_record(r).empty());
  CHECK(synthesize_records(300, 5) == recs);
}
