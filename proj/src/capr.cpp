#include "sfadapt/capr.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "json.hpp"
#include "sfadapt/chaos.hpp"
#include "sfadapt/embedded_data.hpp"
#include "sfadapt/tensor_io.hpp"

namespace sfa {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) words.emplace_back(s.substr(b, i - b));
  }
  return words;
}

std::string join_words(const std::vector<std::string>& w, std::size_t b,
                       std::size_t e) {
  std::string out;
  for (std::size_t k = b; k < e; ++k) {
    if (k > b) out.push_back(' ');
    out += w[k];
  }
  return out;
}

// Lowercased, single-spaced form used for all vocabulary comparisons.
std::string normalize_surface(std::string_view s) {
  const auto words = split_words(lower(s));
  return join_words(words, 0, words.size());
}

enum class Category { kTarget = 0, kSite = 1, kModality = 2 };

struct Surface {
  Category category;
  std::size_t entry;
  std::string key;       // normalized
  std::string spelling;  // as written in the lexicon
  std::size_t words;
};

std::vector<Surface> surfaces_of(const Lexicon& lex) {
  std::vector<Surface> out;
  auto add = [&](Category c, const std::vector<LexiconEntry>& entries) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto push = [&](const std::string& s) {
        const std::string key = normalize_surface(s);
        const auto n = static_cast<std::size_t>(
            std::count(key.begin(), key.end(), ' ') + 1);
        out.push_back({c, i, key, s, n});
      };
      push(entries[i].name);
      for (const auto& a : entries[i].aliases) push(a);
    }
  };
  add(Category::kTarget, lex.targets);
  add(Category::kSite, lex.sites);
  add(Category::kModality, lex.modalities);
  return out;
}

// Exact match for very short words, where one edit already changes meaning
// ("CT" vs "ET"); one edit up to five characters; lex.max beyond.
std::size_t allowed_distance(std::size_t length, int max_edit) {
  const auto cap = static_cast<std::size_t>(std::max(0, max_edit));
  if (length <= 3) return 0;
  if (length <= 5) return std::min<std::size_t>(1, cap);
  return cap;
}

constexpr std::string_view kStopwords[] = {"in", "of", "the", "at", "on"};

bool is_stopword(const std::string& w) {
  return std::find(std::begin(kStopwords), std::end(kStopwords), w) !=
         std::end(kStopwords);
}

std::string strip_punct(std::string_view w) {
  auto punct = [](char c) { return c == '.' || c == ',' || c == ';' || c == ':'; };
  while (!w.empty() && punct(w.front())) w.remove_prefix(1);
  while (!w.empty() && punct(w.back())) w.remove_suffix(1);
  return std::string(w);
}

struct Match {
  Category category;
  std::size_t entry;
  std::string spelling;
};

// Greedy longest-phrase fuzzy matching. Stopwords and empty tokens split the
// sub-prompt into runs that phrases never cross.
std::vector<Match> match_words(const std::string& text,
                               const std::vector<Surface>& surfaces,
                               std::size_t max_words, int max_edit) {
  std::vector<std::vector<std::string>> runs(1);
  for (const auto& raw : split_words(text)) {
    const std::string w = lower(strip_punct(raw));
    if (w.empty() || is_stopword(w)) {
      if (!runs.back().empty()) runs.emplace_back();
      continue;
    }
    runs.back().push_back(w);
  }

  std::vector<Match> matches;
  for (const auto& run : runs) {
    std::size_t i = 0;
    while (i < run.size()) {
      bool found = false;
      for (std::size_t n = std::min(max_words, run.size() - i); n >= 1 && !found;
           --n) {
        const std::string phrase = join_words(run, i, i + n);
        const std::size_t allowed = allowed_distance(phrase.size(), max_edit);
        const Surface* best = nullptr;
        std::size_t best_d = std::numeric_limits<std::size_t>::max();
        for (const auto& s : surfaces) {
          if (s.words != n) continue;
          const std::size_t d = levenshtein(phrase, s.key);
          if (d < best_d) {
            best_d = d;
            best = &s;
          }
        }
        if (best != nullptr && best_d <= allowed) {
          matches.push_back({best->category, best->entry, best->spelling});
          i += n;
          found = true;
        }
      }
      if (!found) ++i;
    }
  }
  return matches;
}

struct Vote {
  std::size_t count = 0;
  std::size_t first = 0;
  std::string spelling;
};

// Majority entry; ties go to the entry seen first.
std::optional<std::pair<std::size_t, Vote>> majority(
    const std::map<std::size_t, Vote>& votes) {
  std::optional<std::pair<std::size_t, Vote>> best;
  for (const auto& [entry, v] : votes) {
    if (!best || v.count > best->second.count ||
        (v.count == best->second.count && v.first < best->second.first)) {
      best = {entry, v};
    }
  }
  return best;
}

void parse_entries(const nlohmann::json& doc, const char* key,
                   std::vector<LexiconEntry>& out, bool with_site) {
  if (!doc.contains(key)) return;
  const auto& arr = doc.at(key);
  if (!arr.is_array()) {
    throw InvalidArgument(std::string("lexicon: '") + key + "' must be an array");
  }
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains("name") || !item["name"].is_string()) {
      throw InvalidArgument(std::string("lexicon: every '") + key +
                            "' entry needs a string 'name'");
    }
    LexiconEntry e;
    e.name = item["name"].get<std::string>();
    if (item.contains("aliases")) {
      for (const auto& a : item["aliases"]) {
        if (!a.is_string()) {
          throw InvalidArgument("lexicon: aliases of '" + e.name +
                                "' must be strings");
        }
        e.aliases.push_back(a.get<std::string>());
      }
    }
    if (with_site && item.contains("site")) {
      if (!item["site"].is_string()) {
        throw InvalidArgument("lexicon: site of '" + e.name + "' must be a string");
      }
      e.default_site = item["site"].get<std::string>();
    }
    out.push_back(std::move(e));
  }
}

}  // namespace

RawPromptBatch split_batch(std::string_view raw) {
  RawPromptBatch batch;
  std::size_t begin = 0;
  while (true) {
    const std::size_t pos = raw.find(kSepToken, begin);
    const auto piece =
        trim(raw.substr(begin, pos == std::string_view::npos ? raw.npos : pos - begin));
    if (!piece.empty()) batch.prompts.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    begin = pos + kSepToken.size();
  }
  if (batch.prompts.empty()) throw InvalidArgument("empty batch");
  return batch;
}

std::string join_batch(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += " [SEP] ";
    out += parts[i];
  }
  return out;
}

std::string emit_canonical(const CanonicalPrompt& p) {
  if (p.target.empty() || p.site.empty() || p.modality.empty()) {
    throw InvalidArgument("canonical prompt fields must be non-empty");
  }
  std::string out = p.target + " in " + p.site + " " + p.modality;
  if (p.terminal_period) out.push_back('.');
  return out;
}

CanonicalPrompt parse_canonical(std::string_view s, const Lexicon& lex) {
  s = trim(s);
  CanonicalPrompt p;
  p.terminal_period = !s.empty() && s.back() == '.';
  if (p.terminal_period) s.remove_suffix(1);

  const std::size_t sep = s.find(" in ");
  if (sep == std::string_view::npos) throw PromptError("missing ' in '");
  p.target = std::string(trim(s.substr(0, sep)));
  if (p.target.empty()) throw PromptError("empty target");

  const auto words = split_words(s.substr(sep + 4));
  if (words.size() < 2) throw PromptError("expected '<site> <modality>' after ' in '");

  std::set<std::string> modality_keys;
  for (const auto& m : lex.modalities) {
    modality_keys.insert(normalize_surface(m.name));
    for (const auto& a : m.aliases) modality_keys.insert(normalize_surface(a));
  }
  for (std::size_t n = words.size() - 1; n >= 1; --n) {
    const std::size_t b = words.size() - n;
    const std::string tail = join_words(words, b, words.size());
    if (modality_keys.count(lower(tail)) != 0) {
      p.modality = tail;
      p.site = join_words(words, 0, b);
      return p;
    }
  }
  throw PromptError("unrecognized modality '" + words.back() + "'");
}

void Lexicon::validate() const {
  if (targets.empty() || sites.empty() || modalities.empty()) {
    throw InvalidArgument("lexicon: targets, sites and modalities must be non-empty");
  }
  if (max_edit_distance < 0) {
    throw InvalidArgument("lexicon: max_edit_distance must be >= 0");
  }
  std::map<std::string, std::string> owner;
  for (const auto& s : surfaces_of(*this)) {
    if (s.key.empty()) throw InvalidArgument("lexicon: empty name or alias");
    const auto [it, fresh] = owner.emplace(s.key, s.spelling);
    if (!fresh) {
      throw InvalidArgument("lexicon: '" + s.spelling + "' collides with '" +
                            it->second + "'");
    }
  }
  for (const auto& t : targets) {
    if (t.default_site.empty()) continue;
    const bool known = std::any_of(sites.begin(), sites.end(), [&](const auto& site) {
      return lower(site.name) == lower(t.default_site);
    });
    if (!known) {
      throw InvalidArgument("lexicon: target '" + t.name + "' has unknown site '" +
                            t.default_site + "'");
    }
  }
}

Lexicon parse_lexicon(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformedHeader,
                      std::string("lexicon: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument("lexicon: top level must be an object");
  Lexicon lex;
  if (doc.contains("max_edit_distance")) {
    const auto& m = doc["max_edit_distance"];
    if (!m.is_number_integer()) {
      throw InvalidArgument("lexicon: max_edit_distance must be an integer");
    }
    lex.max_edit_distance = m.get<int>();
  }
  parse_entries(doc, "targets", lex.targets, true);
  parse_entries(doc, "sites", lex.sites, false);
  parse_entries(doc, "modalities", lex.modalities, false);
  lex.validate();
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  return parse_lexicon(read_file(path));
}

const Lexicon& default_lexicon() {
  static const Lexicon lex = parse_lexicon(std::string(embedded::default_lexicon_json()));
  return lex;
}

std::vector<CanonicalPrompt> canonicalize_lexicon(const RawPromptBatch& batch,
                                                  const Lexicon& lex) {
  if (batch.prompts.empty()) throw InvalidArgument("empty batch");
  const auto surfaces = surfaces_of(lex);
  std::size_t max_words = 1;
  for (const auto& s : surfaces) max_words = std::max(max_words, s.words);

  std::map<std::size_t, Vote> site_votes;
  std::map<std::size_t, Vote> modality_votes;
  std::vector<std::size_t> targets;
  std::size_t order = 0;
  auto vote = [&](std::map<std::size_t, Vote>& votes, const Match& m) {
    auto [it, fresh] = votes.try_emplace(m.entry);
    if (fresh) {
      it->second.first = order;
      it->second.spelling = m.spelling;
    }
    ++it->second.count;
  };

  for (std::size_t i = 0; i < batch.prompts.size(); ++i) {
    std::optional<std::size_t> target;
    for (const auto& m : match_words(batch.prompts[i], surfaces, max_words,
                                     lex.max_edit_distance)) {
      switch (m.category) {
        case Category::kTarget:
          if (!target) target = m.entry;
          break;
        case Category::kSite:
          vote(site_votes, m);
          break;
        case Category::kModality:
          vote(modality_votes, m);
          break;
      }
      ++order;
    }
    if (!target) {
      throw PromptError("no target recognized in sub-prompt " + std::to_string(i + 1) +
                        ": '" + batch.prompts[i] + "'");
    }
    targets.push_back(*target);
  }

  const auto modality = majority(modality_votes);
  if (!modality) throw PromptError("no modality evidence in batch");

  std::string site;
  if (const auto s = majority(site_votes)) {
    site = s->second.spelling;
  } else {
    std::map<std::size_t, Vote> fallback;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const std::string& name = lex.targets[targets[k]].default_site;
      for (std::size_t e = 0; e < lex.sites.size(); ++e) {
        if (!name.empty() && lower(lex.sites[e].name) == lower(name)) {
          auto [it, fresh] = fallback.try_emplace(e);
          if (fresh) {
            it->second.first = k;
            it->second.spelling = lex.sites[e].name;
          }
          ++it->second.count;
        }
      }
    }
    const auto f = majority(fallback);
    if (!f) throw PromptError("no site evidence in batch");
    site = f->second.spelling;
  }

  std::vector<CanonicalPrompt> out;
  out.reserve(targets.size());
  for (std::size_t t : targets) {
    out.push_back({lex.targets[t].name, site, modality->second.spelling, true});
  }
  return out;
}

}  // namespace sfa
