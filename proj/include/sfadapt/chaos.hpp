#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace sfa {

// Per-operator probabilities for perturb_once.
struct RateSchedule {
  double spell = 0.0;    // per-character typo
  double shuffle = 0.0;  // per-word swap
  double remove = 0.0;   // per-character deletion
  bool operator==(const RateSchedule&) const = default;
};

struct ChaosConfig {
  double target_level = 0.0;  // in [0, 100]
  int candidates = 50;
  std::uint64_t seed = 0;
  std::optional<RateSchedule> rates;  // overrides rate_schedule(target)
};

// Portable random stream for the perturbation operators. The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard; the
// integer and Bernoulli mappings below are defined here rather than through
// <random> distributions, which are implementation-specific.
class ChaosRng {
 public:
  explicit ChaosRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, n), n > 0, by rejection sampling.
  std::uint64_t below(std::uint64_t n);
  // True with probability p; always consumes exactly one draw.
  bool bernoulli(double p);
  char32_t letter() { return U'a' + static_cast<char32_t>(below(26)); }

 private:
  std::mt19937_64 engine_;
};

// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
// Same, for UTF-8 encoded strings.
std::size_t levenshtein(std::string_view a, std::string_view b);

// min(100, L(orig, pert) / max(|orig|, |pert|) * 100), lengths counted in
// scalar values. Throws InvalidArgument when `orig` is empty.
double chaos_score(std::string_view orig, std::string_view pert);

// spell = 0.5 t/100, shuffle = 0.7 t/100, remove = 0.2 t/100.
RateSchedule rate_schedule(double target_level);

// One corrupted copy of `s`: character typos, then word swaps, then
// character deletions. "[SEP]" delimiters (with their surrounding
// whitespace) and a final period are never touched.
std::string perturb_once(std::string_view s, const RateSchedule& rates,
                         ChaosRng& rng);

struct ChaosResult {
  std::string perturbed;
  double score = 0.0;
};

// Draws cfg.candidates perturbations from one stream seeded with cfg.seed and
// keeps the one whose chaos score is closest to the target (earliest wins
// ties).
ChaosResult generate_chaos(std::string_view orig, const ChaosConfig& cfg);

}  // namespace sfa
