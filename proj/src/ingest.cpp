#include "citefield/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

#include "json.hpp"

namespace citefield {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_braces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '{' && c != '}') out.push_back(c);
  }
  return normalize_whitespace(out);
}

// Splits on the word "and" (any case) surrounded by whitespace, at brace depth 0.
std::vector<std::string> split_authors(std::string_view value) {
  std::vector<std::string> parts;
  std::string current;
  int depth = 0;
  std::size_t i = 0;
  while (i < value.size()) {
    char c = value[i];
    if (c == '{') ++depth;
    if (c == '}') --depth;
    if (depth == 0 && std::isspace(static_cast<unsigned char>(c)) && i + 4 < value.size() &&
        lower(value.substr(i + 1, 3)) == "and" &&
        std::isspace(static_cast<unsigned char>(value[i + 4]))) {
      parts.push_back(current);
      current.clear();
      i += 5;
      continue;
    }
    current.push_back(c);
    ++i;
  }
  parts.push_back(current);
  return parts;
}

PageRange parse_pages(std::string_view text) {
  std::string s = strip_braces(text);
  auto dash = s.find('-');
  if (dash == std::string::npos) return {trim(s), trim(s)};
  auto rest = s.find_first_not_of('-', dash);
  return {trim(s.substr(0, dash)), rest == std::string::npos ? std::string() : trim(s.substr(rest))};
}

int parse_year(std::string_view text) {
  std::string s = trim(text);
  int year = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), year);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("year: not an integer '" + s + "'");
  return year;
}

struct RawEntry {
  std::size_t line = 0;
  std::string text;
};

std::size_t count_lines(std::string_view text, std::size_t upto) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
}

std::vector<RawEntry> split_bibtex(std::string_view text) {
  std::vector<RawEntry> out;
  std::size_t i = 0;
  while (true) {
    i = text.find('@', i);
    if (i == std::string_view::npos) break;
    std::size_t open = text.find_first_of("{(", i);
    if (open == std::string_view::npos) {
      out.push_back({count_lines(text, i), std::string(text.substr(i))});
      break;
    }
    char close_ch = text[open] == '{' ? '}' : ')';
    int depth = 0;
    std::size_t j = open;
    for (; j < text.size(); ++j) {
      if (text[j] == '{' || (close_ch == ')' && text[j] == '(')) ++depth;
      if (text[j] == '}' || (close_ch == ')' && text[j] == ')')) --depth;
      if (depth == 0) break;
    }
    std::size_t end = j < text.size() ? j + 1 : text.size();
    out.push_back({count_lines(text, i), std::string(text.substr(i, end - i))});
    i = end;
  }
  return out;
}

}  // namespace

std::string check_record(const BibRecord& r) {
  if (r.authors.empty()) return "authors: empty";
  for (const auto& a : r.authors) {
    if (trim(a.family).empty()) return "authors: empty family name";
  }
  if (trim(r.title).empty()) return "title: empty";
  if (trim(r.venue).empty()) return "venue: empty";
  if (r.year < kMinYear || r.year > kMaxYear) return "year: out of range " + std::to_string(r.year);
  return {};
}

RecordFormat parse_record_format(std::string_view name) {
  if (name == "lines") return RecordFormat::Lines;
  if (name == "bibtex") return RecordFormat::Bibtex;
  throw Error("unknown record format '" + std::string(name) + "'");
}

PersonName parse_person_name(std::string_view text) {
  std::string s = strip_braces(text);
  auto comma = s.find(',');
  if (comma != std::string::npos) return {trim(s.substr(0, comma)), trim(s.substr(comma + 1))};
  auto space = s.rfind(' ');
  if (space == std::string::npos) return {s, ""};
  return {trim(s.substr(space + 1)), trim(s.substr(0, space))};
}

BibRecord parse_bibtex_entry(std::string_view text) {
  std::string_view t = text;
  auto at = t.find('@');
  if (at == std::string_view::npos) throw Error("bibtex: entry must begin with '@'");
  auto open = t.find('{', at);
  if (open == std::string_view::npos) throw Error("bibtex: missing '{'");
  std::string type = lower(trim(t.substr(at + 1, open - at - 1)));
  if (type != "article" && type != "inproceedings" && type != "book") {
    throw Error("bibtex: unsupported entry type '" + type + "'");
  }

  // Balanced-brace check over the whole entry body.
  int depth = 0;
  std::size_t close = std::string_view::npos;
  for (std::size_t i = open; i < t.size(); ++i) {
    if (t[i] == '{') ++depth;
    if (t[i] == '}') {
      if (--depth == 0) {
        close = i;
        break;
      }
      if (depth < 0) break;
    }
  }
  if (close == std::string_view::npos) throw Error("bibtex: unbalanced braces");
  std::string_view body = t.substr(open + 1, close - open - 1);

  // Skip the citation key.
  std::size_t pos = body.find(',');
  std::map<std::string, std::string> fields;
  while (pos != std::string_view::npos && pos < body.size()) {
    ++pos;  // past ','
    auto eq = body.find('=', pos);
    if (eq == std::string_view::npos) break;
    std::string name = lower(trim(body.substr(pos, eq - pos)));
    std::size_t v = body.find_first_not_of(" \t\r\n", eq + 1);
    if (v == std::string_view::npos) throw Error("bibtex: missing value for '" + name + "'");
    std::string value;
    std::size_t next;
    if (body[v] == '{') {
      int d = 0;
      std::size_t j = v;
      for (; j < body.size(); ++j) {
        if (body[j] == '{') ++d;
        if (body[j] == '}' && --d == 0) break;
      }
      if (j >= body.size()) throw Error("bibtex: unbalanced braces in '" + name + "'");
      value = std::string(body.substr(v + 1, j - v - 1));
      next = j + 1;
    } else if (body[v] == '"') {
      int d = 0;
      std::size_t j = v + 1;
      for (; j < body.size(); ++j) {
        if (body[j] == '{') ++d;
        if (body[j] == '}') --d;
        if (body[j] == '"' && d == 0) break;
      }
      if (j >= body.size()) throw Error("bibtex: unterminated quote in '" + name + "'");
      value = std::string(body.substr(v + 1, j - v - 1));
      next = j + 1;
    } else {
      std::size_t j = body.find(',', v);
      if (j == std::string_view::npos) j = body.size();
      value = trim(body.substr(v, j - v));
      next = j;
    }
    if (!name.empty()) fields[name] = value;
    pos = body.find(',', next);
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end() || trim(strip_braces(it->second)).empty()) {
      throw Error("bibtex: missing required field \"" + key + "\"");
    }
    return it->second;
  };

  BibRecord r;
  for (const auto& part : split_authors(require("author"))) {
    if (trim(part).empty()) continue;
    r.authors.push_back(parse_person_name(part));
  }
  r.title = strip_braces(require("title"));
  if (fields.count("journal")) {
    r.venue = strip_braces(fields["journal"]);
  } else if (fields.count("booktitle")) {
    r.venue = strip_braces(fields["booktitle"]);
  } else if (type == "book" && fields.count("publisher")) {
    r.venue = strip_braces(fields["publisher"]);
  } else {
    throw Error("bibtex: missing required field \"journal\" (or \"booktitle\")");
  }
  r.year = parse_year(strip_braces(require("year")));
  if (fields.count("volume")) r.volume = strip_braces(fields["volume"]);
  if (fields.count("number")) r.issue = strip_braces(fields["number"]);
  if (fields.count("pages")) r.pages = parse_pages(fields["pages"]);
  if (fields.count("discipline")) r.discipline = strip_braces(fields["discipline"]);

  if (auto problem = check_record(r); !problem.empty()) throw Error("bibtex: " + problem);
  return r;
}

std::string record_to_line(const BibRecord& r) {
  json authors = json::array();
  for (const auto& a : r.authors) authors.push_back({{"family", a.family}, {"given", a.given}});
  json j = {{"authors", std::move(authors)}, {"title", r.title}, {"venue", r.venue}, {"year", r.year}};
  if (r.volume) j["volume"] = *r.volume;
  if (r.issue) j["issue"] = *r.issue;
  if (r.pages) j["pages"] = {{"first", r.pages->first}, {"last", r.pages->last}};
  if (r.discipline) j["discipline"] = *r.discipline;
  return j.dump();
}

BibRecord record_from_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed record: ") + e.what());
  }
  BibRecord r;
  try {
    for (const auto& a : j.at("authors")) {
      r.authors.push_back({a.at("family").get<std::string>(), a.value("given", std::string())});
    }
    r.title = j.at("title").get<std::string>();
    r.venue = j.at("venue").get<std::string>();
    r.year = j.at("year").get<int>();
    if (j.contains("volume")) r.volume = j["volume"].get<std::string>();
    if (j.contains("issue")) r.issue = j["issue"].get<std::string>();
    if (j.contains("pages")) {
      r.pages = PageRange{j["pages"].at("first").get<std::string>(), j["pages"].at("last").get<std::string>()};
    }
    if (j.contains("discipline")) r.discipline = j["discipline"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(std::string("record field error: ") + e.what());
  }
  if (auto problem = check_record(r); !problem.empty()) throw Error(problem);
  return r;
}

ReadResult parse_records(std::string_view text, RecordFormat format, bool strict) {
  ReadResult result;
  auto fail = [&](std::size_t line, const std::string& message) {
    if (strict) throw Error("line " + std::to_string(line) + ": " + message);
    result.diagnostics.push_back({line, message});
  };
  if (format == RecordFormat::Lines) {
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      auto nl = text.find('\n', start);
      std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
      ++lineno;
      if (!trim(line).empty()) {
        try {
          result.records.push_back(record_from_line(line));
        } catch (const Error& e) {
          fail(lineno, e.what());
        }
      }
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
  } else {
    for (const auto& entry : split_bibtex(text)) {
      try {
        result.records.push_back(parse_bibtex_entry(entry.text));
      } catch (const Error& e) {
        fail(entry.line, e.what());
      }
    }
  }
  return result;
}

ReadResult read_records(const std::string& path, RecordFormat format, bool strict) {
  return parse_records(read_file(path), format, strict);
}

void save_records(const std::string& path, std::span<const BibRecord> records) {
  std::ostringstream ss;
  for (const auto& r : records) ss << record_to_line(r) << '\n';
  write_file(path, ss.str());
}

}  // namespace citefield
