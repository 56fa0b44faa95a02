#include "citefield/core.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace citefield {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumLabels> kLabelNames = {"Author", "Title", "Venue",
                                                                  "Year", "Other"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::string_view label_name(FieldLabel l) { return kLabelNames.at(label_index(l)); }

FieldLabel parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kLabelNames[i] == name) return label_from_index(i);
  }
  throw Error("unknown field label '" + std::string(name) + "'");
}

std::string_view origin_name(Origin o) { return o == Origin::Task ? "Task" : "Generated"; }

Origin parse_origin(std::string_view name) {
  if (name == "Task") return Origin::Task;
  if (name == "Generated") return Origin::Generated;
  throw Error("unknown origin '" + std::string(name) + "'");
}

std::vector<std::string> LabeledCitation::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::vector<FieldSpan> spans_from_labels(std::span<const FieldLabel> labels) {
  std::vector<FieldSpan> spans;
  std::size_t i = 0;
  while (i < labels.size()) {
    std::size_t j = i + 1;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    if (labels[i] != FieldLabel::Other) spans.push_back({labels[i], i, j});
    i = j;
  }
  return spans;
}

std::vector<FieldLabel> paint_spans(std::span<const FieldSpan> spans, std::size_t n) {
  std::vector<FieldLabel> labels(n, FieldLabel::Other);
  for (const auto& s : spans) {
    if (s.end > n || s.start >= s.end) throw Error("span out of range");
    for (std::size_t i = s.start; i < s.end; ++i) labels[i] = s.label;
  }
  return labels;
}

std::vector<Violation> validate_citation(const LabeledCitation& c) {
  std::vector<Violation> out;
  if (c.tokens.size() != c.labels.size()) {
    out.push_back({ViolationKind::LengthMismatch, 0,
                   "tokens=" + std::to_string(c.tokens.size()) +
                       " labels=" + std::to_string(c.labels.size())});
  }
  if (c.tokens.empty()) out.push_back({ViolationKind::Empty, 0, "citation has no tokens"});
  for (std::size_t i = 0; i < c.tokens.size(); ++i) {
    const Token& t = c.tokens[i];
    if (t.char_end <= t.char_start || t.char_end > c.source.size()) {
      out.push_back({ViolationKind::BadSpan, i,
                     "token " + std::to_string(i) + " has span [" + std::to_string(t.char_start) +
                         "," + std::to_string(t.char_end) + ")"});
      continue;
    }
    if (i > 0 && t.char_start < c.tokens[i - 1].char_end) {
      out.push_back({ViolationKind::NonMonotonic, i,
                     "token " + std::to_string(i) + " overlaps or precedes its predecessor"});
    }
    if (c.source.compare(t.char_start, t.char_end - t.char_start, t.text) != 0 || t.text.empty()) {
      out.push_back({ViolationKind::TextMismatch, i,
                     "token " + std::to_string(i) + " text differs from source"});
    }
  }
  return out;
}

bool is_punct_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::vector<Token> tokenize_words(std::string_view source, std::size_t offset) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < source.size()) {
    char c = source[i];
    if (is_space(c)) {
      ++i;
    } else if (is_punct_char(c)) {
      out.push_back({std::string(1, c), offset + i, offset + i + 1});
      ++i;
    } else {
      std::size_t j = i;
      while (j < source.size() && !is_space(source[j]) && !is_punct_char(source[j])) ++j;
      out.push_back({std::string(source.substr(i, j - i)), offset + i, offset + j});
      i = j;
    }
  }
  return out;
}

LabeledCitation citation_from_text(std::string source, Origin origin) {
  LabeledCitation c;
  c.tokens = tokenize_words(source);
  c.labels.assign(c.tokens.size(), FieldLabel::Other);
  c.source = std::move(source);
  c.origin = origin;
  return c;
}

std::string citation_to_line(const LabeledCitation& c) {
  json tokens = json::array();
  for (const auto& t : c.tokens) tokens.push_back(json::array({t.text, t.char_start, t.char_end}));
  json labels = json::array();
  for (auto l : c.labels) labels.push_back(label_name(l));
  json j = {{"source", c.source},
            {"tokens", std::move(tokens)},
            {"labels", std::move(labels)},
            {"origin", origin_name(c.origin)}};
  return j.dump();
}

LabeledCitation citation_from_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed citation record: ") + e.what());
  }
  LabeledCitation c;
  try {
    c.source = j.at("source").get<std::string>();
    for (const auto& t : j.at("tokens")) {
      c.tokens.push_back({t.at(0).get<std::string>(), t.at(1).get<std::size_t>(),
                          t.at(2).get<std::size_t>()});
    }
    for (const auto& l : j.at("labels")) c.labels.push_back(parse_label(l.get<std::string>()));
    c.origin = parse_origin(j.at("origin").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(std::string("citation record missing field: ") + e.what());
  }
  return c;
}

void write_citations(std::ostream& out, std::span<const LabeledCitation> corpus) {
  for (const auto& c : corpus) out << citation_to_line(c) << '\n';
}

std::vector<LabeledCitation> read_citations(std::istream& in) {
  std::vector<LabeledCitation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(citation_from_line(line));
    } catch (const Error& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_citations(const std::string& path, std::span<const LabeledCitation> corpus) {
  std::ostringstream ss;
  write_citations(ss, corpus);
  write_file(path, ss.str());
}

std::vector<LabeledCitation> load_citations(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_citations(in);
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace citefield
