#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sfadapt/components.hpp"
#include "sfadapt/grid.hpp"

namespace sfa {

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
  bool operator==(const BetaParams&) const = default;
};

// Four Beta priors in fixed order: mean probability, mean R, mean G, mean B.
struct ClassPrior {
  std::string class_name;
  std::array<BetaParams, 4> params;
};

struct PriorsTable {
  std::map<std::string, ClassPrior> classes;
  std::string provenance;
  std::vector<std::string> warnings;  // e.g. ignored unknown keys

  const ClassPrior* find(const std::string& class_name) const;
};

// log of the Beta(alpha, beta) density at x; x must lie strictly in (0,1).
double beta_log_pdf(const BetaParams& p, double x);

// Sum of the four Beta log-densities, i.e. the log of the product score.
double plausibility_log_score(const FeatureVector& features,
                              const ClassPrior& prior);

struct RetentionResult {
  std::vector<double> normalized;  // exp(log_s - max log_s), in (0, 1]
  double mean = 0.0;
  double stddev = 0.0;  // population
  double threshold = 0.0;
  std::vector<bool> retained;
};

// Applies tau = mean - 2 * sigma to linear scores recovered from log scores
// and normalized by the largest one. Retention is invariant to rescaling
// all scores by a positive constant. Throws on an empty list.
RetentionResult retention_from_log_scores(std::span<const double> log_scores);

// Same rule on already-linear non-negative scores (no normalization).
double retention_threshold(std::span<const double> scores);

struct ComponentReport {
  std::size_t first_voxel = 0;
  std::size_t voxel_count = 0;
  FeatureVector features{};
  double log_score = 0.0;
  double normalized_score = 0.0;
  bool retained = true;
};

struct ClassReport {
  Label label = 0;
  std::string class_name;
  double mean = 0.0;
  double stddev = 0.0;
  double threshold = 0.0;
  std::size_t removed_voxels = 0;
  std::vector<ComponentReport> components;
};

struct RefinementReport {
  std::vector<ClassReport> classes;  // ordered by class name
  std::size_t removed_voxels = 0;
  int connectivity = 0;

  std::string to_json() const;
};

struct RefineResult {
  LabelMask mask;
  RefinementReport report;
};

// Scores every connected component of every class against its prior and
// sets the implausible ones to background. Classes are independent.
// `image` may have 1 or 3 channels and any intensity range.
RefineResult refine_mask(const LabelMask& mask, const ProbabilityMap* prob,
                         const GridImage& image, const PriorsTable& priors,
                         Connectivity connectivity = Connectivity::kFull);

// Priors JSON: {"<class>": {"prob": [a,b], "r": [a,b], "g": [a,b],
// "b": [a,b]}, ...}. Unknown keys are ignored with a warning. A top-level
// "_provenance" string overrides `provenance`; load_priors defaults it to the
// file name.
PriorsTable parse_priors(const std::string& json_text,
                         const std::string& provenance = "");
PriorsTable load_priors(const std::filesystem::path& path);

}  // namespace sfa
