// Synthetic bibliography used to produce generated and task corpora.

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <vector>

#include "citefield/rng.hpp"
#include "citefield/styler.hpp"

namespace citefield {

namespace {

struct Discipline {
  const char* tag;
  // Capitalized subject words. Venue subject names and title topics are both
  // composed from these, so the two fields share vocabulary.
  std::vector<std::string> subjects;
};

const std::vector<Discipline>& disciplines() {
  static const std::vector<Discipline> d = {
      {"computing",
       {"Machine", "Learning", "Neural", "Networks", "Data", "Mining", "Vision", "Systems", "Information",
        "Retrieval", "Software", "Engineering", "Distributed", "Computing", "Graphics", "Robotics", "Language",
        "Processing", "Knowledge", "Discovery", "Database", "Security", "Privacy", "Cloud", "Parallel",
        "Algorithms", "Intelligence", "Artificial", "Pattern", "Recognition", "Multimedia", "Web", "Semantic",
        "Embedded", "Human", "Interaction", "Mobile", "Sensor", "Speech", "Compilers"}},
      {"biomedicine",
       {"Molecular", "Biology", "Clinical", "Oncology", "Public", "Health", "Immunology", "Medical",
        "Genetics", "Cell", "Epidemiology", "Neuroscience", "Biochemistry", "Cardiology", "Pharmacology",
        "Infectious", "Diseases", "Genomics", "Pathology", "Surgery", "Pediatrics", "Nursing", "Nutrition",
        "Virology", "Microbiology", "Endocrinology", "Radiology", "Psychiatry", "Therapeutics", "Vaccines",
        "Proteomics", "Regenerative", "Medicine", "Translational", "Dermatology", "Hematology"}},
      {"physics",
       {"Applied", "Physics", "Condensed", "Matter", "Optics", "Fluid", "Mechanics", "Plasma", "Nuclear",
        "Astrophysics", "Quantum", "Electronics", "Materials", "Science", "Statistical", "Acoustics",
        "Particle", "Photonics", "Lasers", "Thermodynamics", "Cosmology", "Gravitation", "Spectroscopy",
        "Superconductivity", "Magnetism", "Crystallography", "Nanoscience", "Semiconductors", "Geophysics",
        "Atomic", "Molecular", "Chemical", "Surface", "Interfaces", "Instrumentation"}},
      {"economics",
       {"Economic", "Theory", "Financial", "Economics", "Labor", "Development", "Econometrics", "Public",
        "International", "Trade", "Monetary", "Policy", "Industrial", "Organization", "Management",
        "Science", "Accounting", "Growth", "Banking", "Finance", "Markets", "Behavioral", "Institutional",
        "Agricultural", "Environmental", "Urban", "Regional", "Health", "Business", "Marketing", "Strategy",
        "Taxation", "Insurance", "Risk", "Political", "Economy"}},
      {"mathematics",
       {"Applied", "Mathematics", "Number", "Theory", "Combinatorics", "Algebra", "Topology", "Probability",
        "Numerical", "Analysis", "Differential", "Equations", "Operations", "Research", "Mathematical",
        "Logic", "Optimization", "Statistics", "Geometry", "Graph", "Stochastic", "Processes", "Dynamical",
        "Systems", "Functional", "Harmonic", "Computational", "Discrete", "Algebraic", "Representation",
        "Control", "Approximation", "Ergodic", "Inverse", "Problems"}},
  };
  return d;
}

const std::vector<std::string> kFamilies = {
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez",
    "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Thomas", "Taylor", "Moore",
    "Jackson", "Martin", "Lee", "Perez", "Thompson", "White", "Harris", "Sanchez", "Clark", "Ramirez",
    "Lewis", "Robinson", "Walker", "Young", "Allen", "King", "Wright", "Scott", "Torres", "Nguyen",
    "Hill", "Flores", "Green", "Adams", "Nelson", "Baker", "Hall", "Rivera", "Campbell", "Mitchell",
    "Carter", "Roberts", "Wang", "Li", "Zhang", "Liu", "Chen", "Yang", "Huang", "Zhao", "Wu", "Zhou",
    "Xu", "Sun", "Ma", "Zhu", "Hu", "Guo", "He", "Lin", "Kim", "Park", "Choi", "Tanaka", "Suzuki",
    "Sato", "Watanabe", "Muller", "Schmidt", "Schneider", "Fischer", "Weber", "Meyer", "Wagner",
    "Becker", "Rossi", "Russo", "Ferrari", "Bianchi", "Dubois", "Laurent", "Moreau", "Petrov",
    "Ivanov", "Kowalski", "Novak", "Silva", "Santos", "Oliveira", "Costa", "Shannon", "Voelcker",
    "Knuth", "Turing", "Hopper", "Lovelace", "Dijkstra", "Hoare", "Lamport", "Codd"};

const std::vector<std::string> kGiven = {
    "James", "Mary", "John", "Patricia", "Robert", "Jennifer", "Michael", "Linda", "William",
    "Elizabeth", "David", "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah",
    "Charles", "Karen", "Wei", "Jing", "Hao", "Min", "Yuki", "Hiroshi", "Anna", "Hans", "Marco",
    "Sofia", "Pierre", "Elena", "Ivan", "Olga", "Carlos", "Ana", "Raj", "Priya", "Ahmed", "Fatima",
    "C. E.", "J.", "A. M.", "D. E.", "R.", "K.", "L."};

const std::vector<std::string> kAdjectives = {
    "scalable", "robust", "efficient", "novel", "unified", "adaptive", "probabilistic", "hierarchical",
    "sparse", "distributed", "dynamic", "empirical", "generalized", "fast", "stable", "optimal"};

const std::vector<std::string> kNouns = {
    "framework", "approach", "analysis", "model", "method", "study", "survey", "theory", "algorithm",
    "perspective", "evaluation", "characterization"};

const std::vector<std::string> kOrdinals = {"First", "Second", "Third", "Fifth", "Tenth", "12th", "21st", "25th", "30th"};

const std::vector<std::string> kSpecialVenues = {
    "IEEE Spectrum", "Nature", "Science", "Bell System Technical Journal",
    "ACM SIGMOBILE Mobile Computing and Communications Review", "Physical Review Letters", "The Lancet",
    "Communications of the ACM", "Annals of Mathematics", "Econometrica"};

std::string title_case(const std::string& s) {
  static const std::array<std::string_view, 8> small = {"of", "and", "for", "the", "in", "on", "a", "to"};
  std::string out;
  std::size_t word = 0;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    bool is_small = word > 0 && std::find(small.begin(), small.end(), cur) != small.end();
    if (!is_small) cur[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cur[0])));
    out += cur;
    cur.clear();
    ++word;
  };
  for (char c : s) {
    if (c == ' ') {
      flush();
      out.push_back(' ');
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::string capitalize_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// One to three distinct subject words, sometimes joined by "and".
std::vector<std::string> subject_words(Rng& rng, const Discipline& d) {
  const double u = rng.uniform01();
  const std::size_t n = u < 0.3 ? 1 : (u < 0.8 ? 2 : 3);
  std::vector<std::string> out;
  while (out.size() < n) {
    const std::string& w = rng.pick(d.subjects);
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

std::string field_name(Rng& rng, const Discipline& d) {
  auto words = subject_words(rng, d);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += (words.size() == 3 && i == 1 && rng.bernoulli(0.5)) ? " and " : " ";
    out += words[i];
  }
  return out;
}

// Truncated form in the manner of journal title abbreviations.
std::string abbreviate(const std::string& word) {
  static const std::string vowels = "aeiou";
  if (word.size() <= 5) return word;
  std::size_t cut = 3;
  while (cut < word.size() - 1 && vowels.find(word[cut]) != std::string::npos) ++cut;
  return word.substr(0, cut + 1) + ".";
}

std::string abbreviated_field(Rng& rng, const Discipline& d) {
  auto words = subject_words(rng, d);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += (i ? " " : "") + abbreviate(words[i]);
  return out;
}

std::string acronym(Rng& rng) {
  static const std::string letters = "ABCDEFGHIJKLMNOPRSTUVW";
  std::string out;
  const std::size_t n = 3 + rng.uniform_index(3);
  for (std::size_t i = 0; i < n; ++i) out.push_back(letters[rng.uniform_index(letters.size())]);
  return out;
}

std::string make_title(Rng& rng, const Discipline& d) {
  auto topic_of = [&]() {
    std::string t;
    for (const auto& w : subject_words(rng, d)) t += (t.empty() ? "" : " ") + lower(w);
    return t;
  };
  const std::string topic = topic_of();
  const std::string topic2 = topic_of();
  const std::string& adj = rng.pick(kAdjectives);
  const std::string& noun = rng.pick(kNouns);
  std::string t;
  switch (rng.uniform_index(7)) {
    case 0: t = "a " + adj + " " + noun + " for " + topic; break;
    case 1: t = "on the " + noun + " of " + topic; break;
    case 2: t = topic + ": a " + adj + " " + noun; break;
    case 3: t = "towards " + adj + " " + topic; break;
    case 4: t = "a " + adj + " approach to " + topic + " in " + topic2; break;
    case 5: t = adj + " " + topic + " and " + topic2; break;
    default: t = "learning " + topic + " with " + adj + " " + noun + "s"; break;
  }
  // Roughly half of titles use headline case, as in many reference lists.
  return rng.bernoulli(0.45) ? title_case(t) : capitalize_first(t);
}

std::string make_venue(Rng& rng, const Discipline& d) {
  static const std::vector<std::string> pubs = {"IEEE", "ACM", "SIAM", "AAAI", "Elsevier", "Springer", "APS", "IOP"};
  const std::string field = field_name(rng, d);
  const std::string& pub = rng.pick(pubs);
  switch (rng.uniform_index(20)) {
    case 0:
    case 1:
    case 2: return "Journal of " + field;
    case 3: return "International Journal of " + field;
    case 4: return pub + " Transactions on " + field;
    case 5: return "Proceedings of the " + rng.pick(kOrdinals) + " International Conference on " + field;
    case 6: return "Proceedings of the " + pub + " Conference on " + field;
    case 7: return "International Conference on " + field;
    case 8: return field + " Letters";
    case 9: return field + " Review";
    case 10: return "Annual Symposium on " + field;
    case 11: return "Workshop on " + field;
    case 12: return "J. " + abbreviated_field(rng, d);
    case 13: return "Proc. " + pub + " Conf. " + abbreviated_field(rng, d);
    case 14: return pub + " Trans. " + abbreviated_field(rng, d);
    case 15: return "Research in " + field;
    case 16: return "Proceedings of " + acronym(rng);
    case 17: return acronym(rng) + " Workshop on " + field;
    case 18: return "Advances in " + field;
    default: return rng.pick(kSpecialVenues);
  }
}

PersonName make_person(Rng& rng) {
  return {rng.pick(kFamilies), rng.pick(kGiven)};
}

}  // namespace

std::vector<BibRecord> synthesize_records(std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x2ec0));
  const auto& ds = disciplines();
  std::vector<BibRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Discipline& d = ds[rng.uniform_index(ds.size())];
    BibRecord r;
    std::size_t n_authors = 1 + rng.uniform_index(rng.bernoulli(0.2) ? 5 : 3);
    for (std::size_t a = 0; a < n_authors; ++a) r.authors.push_back(make_person(rng));
    r.title = make_title(rng, d);
    r.venue = make_venue(rng, d);
    r.year = 1950 + static_cast<int>(rng.uniform_index(74));
    if (rng.bernoulli(0.75)) {
      r.volume = std::to_string(1 + rng.uniform_index(60));
      if (rng.bernoulli(0.6)) r.issue = std::to_string(1 + rng.uniform_index(12));
    }
    if (rng.bernoulli(0.8)) {
      std::size_t first = 1 + rng.uniform_index(3000);
      r.pages = PageRange{std::to_string(first), std::to_string(first + 2 + rng.uniform_index(30))};
    }
    r.discipline = d.tag;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace citefield
