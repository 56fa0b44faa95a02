#include "citefield/styler.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "citefield/rng.hpp"
#include "json.hpp"

namespace citefield {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<SegmentSource, std::string_view>, 7> kSourceNames = {{
    {SegmentSource::AuthorList, "AuthorList"},
    {SegmentSource::Year, "Year"},
    {SegmentSource::Title, "Title"},
    {SegmentSource::Venue, "Venue"},
    {SegmentSource::VolumeIssue, "VolumeIssue"},
    {SegmentSource::Pages, "Pages"},
    {SegmentSource::Literal, "Literal"},
}};

std::string_view source_name(SegmentSource s) {
  for (const auto& [k, v] : kSourceNames) {
    if (k == s) return v;
  }
  return "Literal";
}

SegmentSource parse_source(std::string_view name) {
  for (const auto& [k, v] : kSourceNames) {
    if (v == name) return k;
  }
  throw Error("unknown style segment field '" + std::string(name) + "'");
}

FieldLabel label_for(SegmentSource s) {
  switch (s) {
    case SegmentSource::AuthorList: return FieldLabel::Author;
    case SegmentSource::Year: return FieldLabel::Year;
    case SegmentSource::Title: return FieldLabel::Title;
    case SegmentSource::Venue: return FieldLabel::Venue;
    default: return FieldLabel::Other;
  }
}

StyleSegment seg(SegmentSource source, std::string prefix, std::string suffix) {
  return {source, "", std::move(prefix), std::move(suffix)};
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string check_style(const CitationStyle& style) {
  if (style.name.empty()) return "style has no name";
  std::map<SegmentSource, int> counts;
  for (const auto& s : style.segments) {
    ++counts[s.source];
    if (s.source == SegmentSource::Literal && s.text.empty()) return "literal segment with empty text";
  }
  for (auto required : {SegmentSource::AuthorList, SegmentSource::Year, SegmentSource::Title,
                        SegmentSource::Venue}) {
    if (counts[required] != 1) {
      return std::string(source_name(required)) + " must appear exactly once in style '" + style.name + "'";
    }
  }
  return {};
}

std::string format_initials(std::string_view given) {
  std::string out;
  const auto parts = split_ws(given);
  for (const auto& part : parts) {
    // Already-abbreviated parts ("C.", "J", "C.E.") pass through; a bare
    // letter only gains a dot when it sits next to other initials.
    bool abbreviated = std::all_of(part.begin(), part.end(), [](char c) {
      return c == '.' || c == '-' || std::isupper(static_cast<unsigned char>(c));
    });
    if (abbreviated) {
      out += part;
      if (parts.size() > 1 && part.size() == 1) out.push_back('.');
    } else {
      out.push_back(part.front());
      out.push_back('.');
    }
  }
  return out;
}

std::string format_author(const PersonName& name, AuthorFormat format) {
  std::string initials = format_initials(name.given);
  if (initials.empty()) return name.family;
  if (format == AuthorFormat::FamilyCommaInitials) return name.family + ", " + initials;
  return initials + " " + name.family;
}

std::string format_author_list(std::span<const PersonName> authors, const CitationStyle& style) {
  std::string out;
  for (std::size_t i = 0; i < authors.size(); ++i) {
    if (i > 0) out += style.author_separator;
    out += format_author(authors[i], style.author_format);
  }
  return normalize_whitespace(out);
}

std::string segment_text(const BibRecord& record, const StyleSegment& segment,
                         const CitationStyle& style) {
  switch (segment.source) {
    case SegmentSource::AuthorList: return format_author_list(record.authors, style);
    case SegmentSource::Year: return std::to_string(record.year);
    case SegmentSource::Title: return normalize_whitespace(record.title);
    case SegmentSource::Venue: return normalize_whitespace(record.venue);
    case SegmentSource::VolumeIssue:
      if (!record.volume || record.volume->empty()) return {};
      if (record.issue && !record.issue->empty()) return *record.volume + "(" + *record.issue + ")";
      return *record.volume;
    case SegmentSource::Pages:
      if (!record.pages || record.pages->first.empty()) return {};
      if (record.pages->last.empty() || record.pages->last == record.pages->first) return record.pages->first;
      return record.pages->first + "-" + record.pages->last;
    case SegmentSource::Literal: return segment.text;
  }
  return {};
}

RenderedCitation render(const BibRecord& record, const CitationStyle& style) {
  if (auto problem = check_style(style); !problem.empty()) throw Error(problem);
  if (auto problem = check_record(record); !problem.empty()) throw Error("record: " + problem);

  struct FieldRange {
    FieldLabel label;
    std::size_t begin, end;
  };
  std::string text;
  std::vector<FieldRange> ranges;
  for (const auto& s : style.segments) {
    std::string body = segment_text(record, s, style);
    if (body.empty()) continue;
    text += s.prefix;
    if (FieldLabel l = label_for(s.source); l != FieldLabel::Other) {
      ranges.push_back({l, text.size(), text.size() + body.size()});
    }
    text += body;
    text += s.suffix;
  }
  text += style.terminal;

  RenderedCitation out;
  out.style_name = style.name;
  LabeledCitation& c = out.citation;
  c.origin = Origin::Generated;
  c.tokens = tokenize_words(text);
  c.labels.reserve(c.tokens.size());
  for (const auto& t : c.tokens) {
    FieldLabel label = FieldLabel::Other;
    for (const auto& r : ranges) {
      bool inside = t.char_start >= r.begin && t.char_end <= r.end;
      bool straddles = !inside && t.char_start < r.end && t.char_end > r.begin;
      if (straddles) {
        throw Error("style '" + style.name + "' splits token '" + t.text + "' across a field boundary");
      }
      if (inside) label = r.label;
    }
    c.labels.push_back(label);
  }
  c.source = std::move(text);
  return out;
}

std::vector<RenderedCitation> generate_corpus(std::span<const BibRecord> records,
                                              std::span<const CitationStyle> styles,
                                              const CorpusOptions& options) {
  if (records.empty()) return {};
  if (styles.empty()) throw Error("generate_corpus: no styles");
  if (options.per_record_styles == 0 || options.per_record_styles > styles.size()) {
    throw Error("generate_corpus: per_record_styles must be in [1, " + std::to_string(styles.size()) + "]");
  }
  Rng rng(derive_seed(options.seed, 0x5717e));

  std::vector<std::size_t> chosen(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) chosen[i] = i;

  const bool tagged = std::any_of(records.begin(), records.end(), [](const BibRecord& r) { return r.discipline.has_value(); });
  if (options.balance && tagged) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].discipline.value_or("")].push_back(i);
    std::size_t smallest = records.size();
    for (const auto& [tag, members] : groups) smallest = std::min(smallest, members.size());
    chosen.clear();
    for (auto& [tag, members] : groups) {
      rng.shuffle(members);
      chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(smallest));
    }
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<RenderedCitation> out;
  out.reserve(chosen.size() * options.per_record_styles);
  std::vector<std::size_t> order(styles.size());
  for (std::size_t idx : chosen) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Partial Fisher-Yates: the first per_record_styles entries are a uniform sample.
    for (std::size_t i = 0; i < options.per_record_styles; ++i) {
      std::size_t j = i + rng.uniform_index(order.size() - i);
      std::swap(order[i], order[j]);
    }
    for (std::size_t i = 0; i < options.per_record_styles; ++i) {
      RenderedCitation rc = render(records[idx], styles[order[i]]);
      rc.citation.origin = options.origin;
      out.push_back(std::move(rc));
    }
  }
  return out;
}

LabeledCitation add_noise(const LabeledCitation& c, const NoiseOptions& options, Rng& rng) {
  LabeledCitation out;
  out.origin = c.origin;
  for (std::size_t i = 0; i < c.tokens.size(); ++i) {
    std::string text = c.tokens[i].text;
    const bool punct = text.size() == 1 && is_punct_char(text[0]);
    if (punct) {
      if (rng.bernoulli(options.drop_punct)) continue;
    } else if (rng.bernoulli(options.lowercase)) {
      for (auto& ch : text) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (!out.source.empty()) out.source.push_back(' ');
    out.tokens.push_back({text, out.source.size(), out.source.size() + text.size()});
    out.source += text;
    out.labels.push_back(c.labels[i]);
  }
  if (out.tokens.empty()) return c;
  return out;
}

std::vector<CitationStyle> builtin_styles() {
  using S = SegmentSource;
  std::vector<CitationStyle> styles;

  // Shannon, C.E., 2001. Title. Venue, 5(1), pp.3-55.
  styles.push_back({"harvard-like",
                    {seg(S::AuthorList, "", ", "), seg(S::Year, "", ". "), seg(S::Title, "", ". "),
                     seg(S::Venue, "", ""), seg(S::VolumeIssue, ", ", ""), seg(S::Pages, ", pp.", "")},
                    AuthorFormat::FamilyCommaInitials, ", ", "."});

  // Voelcker, J ( 2013), Title, Venue, vol. 5(1), pages 2574-2583.
  styles.push_back({"ieee-like",
                    {seg(S::AuthorList, "", " ( "), seg(S::Year, "", "), "), seg(S::Title, "", ", "),
                     seg(S::Venue, "", ""), seg(S::VolumeIssue, ", vol. ", ""), seg(S::Pages, ", pages ", "")},
                    AuthorFormat::FamilyCommaInitials, ", ", "."});

  // C.E. Shannon and W. Weaver. "Title." Venue 5(1) (1948): 3-55.
  styles.push_back({"chicago-like",
                    {seg(S::AuthorList, "", ". "), seg(S::Title, "\"", ".\" "), seg(S::Venue, "", ""),
                     seg(S::VolumeIssue, " ", ""), seg(S::Year, " (", ")"), seg(S::Pages, ": ", "")},
                    AuthorFormat::InitialsFamily, " and ", "."});

  // [1] C.E. Shannon, "Title," Venue, vol. 5(1), pp. 3-55, 1948.
  CitationStyle numbered{"plain-numbered",
                         {seg(S::AuthorList, "", ", "), seg(S::Title, "\"", ",\" "), seg(S::Venue, "", ""),
                          seg(S::VolumeIssue, ", vol. ", ""), seg(S::Pages, ", pp. ", ""), seg(S::Year, ", ", "")},
                         AuthorFormat::InitialsFamily, ", ", "."};
  numbered.segments.insert(numbered.segments.begin(), StyleSegment{S::Literal, "[1]", "", " "});
  styles.push_back(std::move(numbered));

  // Shannon, C.E.; Weaver, W.: Title. Venue 1948;5(1):3-55.
  styles.push_back({"abbrev-initials",
                    {seg(S::AuthorList, "", ": "), seg(S::Title, "", ". "), seg(S::Venue, "", " "),
                     seg(S::Year, "", ""), seg(S::VolumeIssue, ";", ""), seg(S::Pages, ":", "")},
                    AuthorFormat::FamilyCommaInitials, "; ", "."});
  return styles;
}

const CitationStyle& builtin_style(std::string_view name) {
  static const std::vector<CitationStyle> styles = builtin_styles();
  for (const auto& s : styles) {
    if (s.name == name) return s;
  }
  throw Error("unknown built-in style '" + std::string(name) + "'");
}

std::string styles_to_json(std::span<const CitationStyle> styles) {
  json arr = json::array();
  for (const auto& s : styles) {
    json segs = json::array();
    for (const auto& g : s.segments) {
      json jg = {{"field", source_name(g.source)}, {"prefix", g.prefix}, {"suffix", g.suffix}};
      if (g.source == SegmentSource::Literal) jg["text"] = g.text;
      segs.push_back(std::move(jg));
    }
    arr.push_back({{"name", s.name},
                   {"author_format", s.author_format == AuthorFormat::FamilyCommaInitials ? "FamilyCommaInitials"
                                                                                          : "InitialsFamily"},
                   {"author_separator", s.author_separator},
                   {"terminal", s.terminal},
                   {"segments", std::move(segs)}});
  }
  return json{{"styles", std::move(arr)}}.dump(2) + "\n";
}

std::vector<CitationStyle> styles_from_json(std::string_view text) {
  std::vector<CitationStyle> out;
  try {
    json j = json::parse(text);
    for (const auto& js : j.at("styles")) {
      CitationStyle s;
      s.name = js.at("name").get<std::string>();
      std::string fmt = js.value("author_format", std::string("FamilyCommaInitials"));
      if (fmt == "FamilyCommaInitials") {
        s.author_format = AuthorFormat::FamilyCommaInitials;
      } else if (fmt == "InitialsFamily") {
        s.author_format = AuthorFormat::InitialsFamily;
      } else {
        throw Error("unknown author_format '" + fmt + "'");
      }
      s.author_separator = js.value("author_separator", std::string(", "));
      s.terminal = js.value("terminal", std::string("."));
      for (const auto& jg : js.at("segments")) {
        StyleSegment g;
        g.source = parse_source(jg.at("field").get<std::string>());
        g.text = jg.value("text", std::string());
        g.prefix = jg.value("prefix", std::string());
        g.suffix = jg.value("suffix", std::string());
        s.segments.push_back(std::move(g));
      }
      if (auto problem = check_style(s); !problem.empty()) throw Error(problem);
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("style file: ") + e.what());
  }
  return out;
}

std::vector<CitationStyle> load_styles(const std::string& path) { return styles_from_json(read_file(path)); }

}  // namespace citefield
