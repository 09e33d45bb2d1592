#include "sfadapt/chaos.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "sfadapt/errors.hpp"
#include "sfadapt/utf8.hpp"

namespace sfa {

std::uint64_t ChaosRng::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("ChaosRng::below(0)");
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t rem = (kMax % n + 1) % n;  // 2^64 mod n
  if (rem == 0) return next() % n;
  const std::uint64_t limit = 0 - rem;  // 2^64 - rem, a multiple of n
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return x % n;
}

bool ChaosRng::bernoulli(double p) {
  const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return u < p;
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();

  constexpr std::size_t kInline = 64;
  std::array<std::size_t, kInline + 1> inline_row{};
  std::vector<std::size_t> heap_row;
  std::size_t* row = inline_row.data();
  if (b.size() > kInline) {
    heap_row.resize(b.size() + 1);
    row = heap_row.data();
  }

  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(std::u32string_view(utf8_decode(a)),
                     std::u32string_view(utf8_decode(b)));
}

double chaos_score(std::string_view orig, std::string_view pert) {
  const auto a = utf8_decode(orig);
  const auto b = utf8_decode(pert);
  if (a.empty()) throw InvalidArgument("empty original prompt");
  const auto dist = static_cast<double>(levenshtein(a, b));
  const auto longest = static_cast<double>(std::max(a.size(), b.size()));
  return std::min(100.0, dist / longest * 100.0);
}

RateSchedule rate_schedule(double target_level) {
  if (!(target_level >= 0.0 && target_level <= 100.0)) {
    throw InvalidArgument("chaos level must lie in [0, 100]");
  }
  return {0.5 * target_level / 100.0, 0.7 * target_level / 100.0,
          0.2 * target_level / 100.0};
}

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v';
}

std::u32string apply_typos(const std::u32string& core, double rate,
                           ChaosRng& rng) {
  std::u32string out;
  out.reserve(core.size() + core.size() / 4);
  std::size_t i = 0;
  while (i < core.size()) {
    const char32_t c = core[i];
    if (is_space(c) || !rng.bernoulli(rate)) {
      out.push_back(c);
      ++i;
      continue;
    }
    switch (rng.below(3)) {
      case 0:  // substitution
        out.push_back(rng.letter());
        ++i;
        break;
      case 1:  // transposition with the next character of the same word
        if (i + 1 < core.size() && !is_space(core[i + 1])) {
          out.push_back(core[i + 1]);
          out.push_back(c);
          i += 2;
        } else {
          out.push_back(c);
          ++i;
        }
        break;
      default:  // insertion before the character
        out.push_back(rng.letter());
        out.push_back(c);
        ++i;
        break;
    }
  }
  return out;
}

// Swaps whole words; whitespace runs stay where they were.
std::u32string shuffle_words(const std::u32string& core, double rate,
                             ChaosRng& rng) {
  std::vector<std::u32string> words;
  std::vector<std::u32string> gaps;  // gaps[k] precedes words[k]; one trailing
  std::u32string gap;
  std::size_t i = 0;
  while (i < core.size()) {
    if (is_space(core[i])) {
      gap.push_back(core[i++]);
      continue;
    }
    std::u32string word;
    while (i < core.size() && !is_space(core[i])) word.push_back(core[i++]);
    gaps.push_back(std::move(gap));
    gap.clear();
    words.push_back(std::move(word));
  }
  gaps.push_back(std::move(gap));

  const std::size_t n = words.size();
  if (n >= 2) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!rng.bernoulli(rate)) continue;
      std::size_t j = rng.below(n - 1);
      if (j >= k) ++j;
      std::swap(words[k], words[j]);
    }
  }
  std::u32string out;
  for (std::size_t k = 0; k < n; ++k) out += gaps[k] + words[k];
  out += gaps[n];
  return out;
}

std::u32string delete_chars(const std::u32string& core, double rate,
                            ChaosRng& rng) {
  std::u32string out;
  out.reserve(core.size());
  for (char32_t c : core) {
    if (!rng.bernoulli(rate)) out.push_back(c);
  }
  return out;
}

std::u32string perturb_core(const std::u32string& core,
                            const RateSchedule& rates, ChaosRng& rng) {
  auto s = apply_typos(core, rates.spell, rng);
  s = shuffle_words(s, rates.shuffle, rng);
  return delete_chars(s, rates.remove, rng);
}

}  // namespace

std::string perturb_once(std::string_view s, const RateSchedule& rates,
                         ChaosRng& rng) {
  static const std::u32string kSep = U"[SEP]";
  const std::u32string text = utf8_decode(s);

  // Protected: every "[SEP]" with its adjacent whitespace, and a final period.
  std::vector<std::pair<std::size_t, std::size_t>> segments;  // [begin, end)
  std::size_t begin = 0;
  for (std::size_t pos = text.find(kSep); pos != std::u32string::npos;
       pos = text.find(kSep, begin)) {
    segments.emplace_back(begin, pos);
    begin = pos + kSep.size();
  }
  segments.emplace_back(begin, text.size());

  std::u32string out;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    auto [b, e] = segments[k];
    if (k > 0) out += kSep;
    std::size_t core_b = b;
    while (core_b < e && is_space(text[core_b])) ++core_b;
    std::size_t core_e = e;
    while (core_e > core_b && is_space(text[core_e - 1])) --core_e;
    const bool last = k + 1 == segments.size();
    const bool period = last && core_e > core_b && text[core_e - 1] == U'.';
    const std::size_t body_e = period ? core_e - 1 : core_e;

    out.append(text, b, core_b - b);
    out += perturb_core(text.substr(core_b, body_e - core_b), rates, rng);
    if (period) out.push_back(U'.');
    out.append(text, core_e, e - core_e);
  }
  return utf8_encode(out);
}

ChaosResult generate_chaos(std::string_view orig, const ChaosConfig& cfg) {
  if (orig.empty()) throw InvalidArgument("empty original prompt");
  if (cfg.candidates < 1) throw InvalidArgument("candidate count must be >= 1");
  if (!(cfg.target_level >= 0.0 && cfg.target_level <= 100.0)) {
    throw InvalidArgument("chaos level must lie in [0, 100]");
  }
  const RateSchedule rates = cfg.rates ? *cfg.rates : rate_schedule(cfg.target_level);
  for (double r : {rates.spell, rates.shuffle, rates.remove}) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw InvalidArgument("perturbation rates must lie in [0, 1]");
    }
  }

  ChaosRng rng(cfg.seed);
  ChaosResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.candidates; ++k) {
    std::string candidate = perturb_once(orig, rates, rng);
    const double score = chaos_score(orig, candidate);
    const double gap = std::abs(score - cfg.target_level);
    if (gap < best_gap) {
      best_gap = gap;
      best.perturbed = std::move(candidate);
      best.score = score;
    }
  }
  return best;
}

}  // namespace sfa
