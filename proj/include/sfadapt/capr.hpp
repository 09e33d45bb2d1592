#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sfadapt/errors.hpp"

namespace sfa {

inline constexpr std::string_view kSepToken = "[SEP]";

// Sub-prompts of one query, in input order.
struct RawPromptBatch {
  std::vector<std::string> prompts;
};

// Splits on "[SEP]", trims whitespace and drops empty fragments. Throws
// InvalidArgument("empty batch") when nothing is left.
RawPromptBatch split_batch(std::string_view raw);

// Joins with " [SEP] ".
std::string join_batch(const std::vector<std::string>& parts);

// "<Target> in <Site> <Modality>." Site and modality may span several words.
struct CanonicalPrompt {
  std::string target;
  std::string site;
  std::string modality;
  // Emitted prompts always carry the period; parse_canonical records whether
  // the input had one so that emit(parse(s)) == s.
  bool terminal_period = true;

  bool operator==(const CanonicalPrompt&) const = default;
};

std::string emit_canonical(const CanonicalPrompt& p);

struct LexiconEntry {
  std::string name;                  // emitted spelling
  std::vector<std::string> aliases;  // extra accepted spellings
  std::string default_site;          // targets only: site used without evidence
};

// Vocabulary for the deterministic canonicalizer. Surface forms (names and
// aliases) are compared case-insensitively and must be unique across all
// three vocabularies.
struct Lexicon {
  std::vector<LexiconEntry> targets;
  std::vector<LexiconEntry> sites;
  std::vector<LexiconEntry> modalities;
  int max_edit_distance = 2;

  // Throws InvalidArgument on overlapping or empty vocabularies.
  void validate() const;
};

Lexicon parse_lexicon(const std::string& json_text);
Lexicon load_lexicon(const std::filesystem::path& path);

// Lexicon covering every target, site and modality of the shipped prompt
// fixtures (abdominal, brain, cardiac, polyp).
const Lexicon& default_lexicon();

class PromptError : public Error {
 public:
  using Error::Error;
};

// Recognizes "<target> in <site> <modality>[.]": the first " in " separates
// the target, and the modality is the longest trailing word sequence that is
// a modality surface form in `lex`. Throws PromptError on failure.
CanonicalPrompt parse_canonical(std::string_view s,
                                const Lexicon& lex = default_lexicon());

// Deterministic canonicalization: fuzzy-matches words against the lexicon,
// infers the batch's shared site and modality by majority vote (ties go to
// the first occurrence; a missing site falls back to the targets' default
// sites) and emits one prompt per sub-prompt, in order.
std::vector<CanonicalPrompt> canonicalize_lexicon(const RawPromptBatch& batch,
                                                  const Lexicon& lex);

}  // namespace sfa
