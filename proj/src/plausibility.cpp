#include "sfadapt/plausibility.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "sfadapt/errors.hpp"
#include "sfadapt/log.hpp"
#include "sfadapt/tensor_io.hpp"

namespace sfa {
namespace {

// Re-entrant log-gamma; std::lgamma writes the global signgam on glibc.
double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_beta_function(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

constexpr std::array<const char*, 4> kPriorKeys = {"prob", "r", "g", "b"};

}  // namespace

const ClassPrior* PriorsTable::find(const std::string& class_name) const {
  auto it = classes.find(class_name);
  return it == classes.end() ? nullptr : &it->second;
}

double beta_log_pdf(const BetaParams& p, double x) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) {
    throw InvalidArgument("Beta parameters must be positive");
  }
  if (!(x > 0.0 && x < 1.0)) {
    throw InvalidArgument("Beta density argument must lie in (0, 1)");
  }
  return (p.alpha - 1.0) * std::log(x) + (p.beta - 1.0) * std::log1p(-x) -
         log_beta_function(p.alpha, p.beta);
}

double plausibility_log_score(const FeatureVector& features,
                              const ClassPrior& prior) {
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    sum += beta_log_pdf(prior.params[k], features[k]);
  }
  return sum;
}

double retention_threshold(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("empty score list");
  const auto n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= n;
  return mean - 2.0 * std::sqrt(var);
}

RetentionResult retention_from_log_scores(std::span<const double> log_scores) {
  if (log_scores.empty()) throw InvalidArgument("empty score list");
  RetentionResult r;
  const double top = *std::max_element(log_scores.begin(), log_scores.end());
  r.normalized.reserve(log_scores.size());
  for (double ls : log_scores) r.normalized.push_back(std::exp(ls - top));

  const auto n = static_cast<double>(r.normalized.size());
  for (double s : r.normalized) r.mean += s;
  r.mean /= n;
  double var = 0.0;
  for (double s : r.normalized) var += (s - r.mean) * (s - r.mean);
  r.stddev = std::sqrt(var / n);
  r.threshold = r.mean - 2.0 * r.stddev;

  // With one or two scores no value can sit more than one population sigma
  // below the mean, so nothing is ever dropped; keep that exact under
  // rounding.
  const bool keep_all = r.normalized.size() <= 2;
  r.retained.reserve(r.normalized.size());
  for (double s : r.normalized) r.retained.push_back(keep_all || s >= r.threshold);
  return r;
}

RefineResult refine_mask(const LabelMask& mask, const ProbabilityMap* prob,
                         const GridImage& image, const PriorsTable& priors,
                         Connectivity connectivity) {
  if (image.grid().dims != mask.grid().dims) {
    throw InvalidArgument("grid mismatch: image and mask dims differ");
  }
  if (prob != nullptr && prob->grid().dims != mask.grid().dims) {
    throw InvalidArgument("grid mismatch: probability map and mask dims differ");
  }

  const auto present = mask.present_labels();
  std::vector<const ClassPrior*> class_priors;
  for (Label l : present) {
    auto name = mask.class_names().find(l);
    if (name == mask.class_names().end()) {
      throw InvalidArgument("unnamed label " + std::to_string(l));
    }
    const ClassPrior* prior = priors.find(name->second);
    if (prior == nullptr) {
      throw InvalidArgument("missing prior for class '" + name->second + "'");
    }
    if (prob != nullptr && !prob->channel_of(l)) {
      throw InvalidArgument("probability map has no channel for class '" +
                            name->second + "'");
    }
    class_priors.push_back(prior);
  }

  RefineResult result;
  result.report.connectivity = neighbour_count(connectivity, mask.grid().rank());
  if (present.empty()) {
    result.mask = mask;
    return result;
  }

  GridImage unit = normalize_intensity(image);
  if (unit.channels() == 1) unit = duplicate_channels(unit);

  const ComponentSet components = extract_components(mask, connectivity);

  std::vector<ClassReport> reports(present.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < present.size(); ++i) {
    const Label label = present[i];
    const auto& comps = components.by_class.at(label);
    ClassReport& rep = reports[i];
    rep.label = label;
    rep.class_name = class_priors[i]->class_name;

    std::vector<double> log_scores;
    log_scores.reserve(comps.size());
    for (const auto& c : comps) {
      ComponentReport cr;
      cr.first_voxel = c.first_voxel();
      cr.voxel_count = c.size();
      cr.features = compute_features(c, prob, unit);
      cr.log_score = plausibility_log_score(cr.features, *class_priors[i]);
      log_scores.push_back(cr.log_score);
      rep.components.push_back(cr);
    }
    const auto retention = retention_from_log_scores(log_scores);
    rep.mean = retention.mean;
    rep.stddev = retention.stddev;
    rep.threshold = retention.threshold;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      rep.components[k].normalized_score = retention.normalized[k];
      rep.components[k].retained = retention.retained[k];
      if (!retention.retained[k]) rep.removed_voxels += comps[k].size();
    }
  }

  std::vector<Label> labels(mask.labels().begin(), mask.labels().end());
  for (std::size_t i = 0; i < present.size(); ++i) {
    const auto& comps = components.by_class.at(present[i]);
    for (std::size_t k = 0; k < comps.size(); ++k) {
      if (reports[i].components[k].retained) continue;
      for (auto v : comps[k].voxels) labels[v] = 0;
    }
    result.report.removed_voxels += reports[i].removed_voxels;
  }
  std::stable_sort(reports.begin(), reports.end(),
                   [](const ClassReport& a, const ClassReport& b) {
                     return a.class_name < b.class_name;
                   });
  result.report.classes = std::move(reports);
  result.mask = LabelMask(mask.grid(), std::move(labels), mask.class_names());
  return result;
}

std::string RefinementReport::to_json() const {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["connectivity"] = connectivity;
  doc["removed_voxels"] = removed_voxels;
  doc["classes"] = ordered_json::array();
  for (const auto& c : classes) {
    ordered_json jc;
    jc["class"] = c.class_name;
    jc["label"] = c.label;
    jc["mean"] = c.mean;
    jc["stddev"] = c.stddev;
    jc["threshold"] = c.threshold;
    jc["removed_voxels"] = c.removed_voxels;
    jc["components"] = ordered_json::array();
    for (const auto& k : c.components) {
      jc["components"].push_back({{"first_voxel", k.first_voxel},
                                  {"voxel_count", k.voxel_count},
                                  {"features", k.features},
                                  {"log_score", k.log_score},
                                  {"normalized_score", k.normalized_score},
                                  {"retained", k.retained}});
    }
    doc["classes"].push_back(std::move(jc));
  }
  return doc.dump(2) + "\n";
}

PriorsTable parse_priors(const std::string& json_text,
                         const std::string& provenance) {
  using nlohmann::json;
  std::set<std::string> seen;
  std::string duplicate;
  json::parser_callback_t detect_duplicates =
      [&](int depth, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::key && depth == 1) {
          const auto key = parsed.get<std::string>();
          if (!seen.insert(key).second && duplicate.empty()) duplicate = key;
        }
        return true;
      };

  json doc;
  try {
    doc = json::parse(json_text, detect_duplicates);
  } catch (const json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformedHeader,
                      std::string("priors: ") + e.what());
  }
  if (!duplicate.empty()) {
    throw InvalidArgument("priors: duplicate class '" + duplicate + "'");
  }
  if (!doc.is_object()) {
    throw InvalidArgument("priors: top level must be an object");
  }

  PriorsTable table;
  table.provenance = provenance;
  auto warn = [&](std::string msg) {
    log_event(LogLevel::kWarn, "priors.ignored_key", {{"detail", msg}});
    table.warnings.push_back(std::move(msg));
  };

  for (const auto& [name, body] : doc.items()) {
    if (!name.empty() && name[0] == '_') {
      if (name == "_provenance" && body.is_string()) {
        table.provenance = body.get<std::string>();
      } else if (name != "_provenance") {
        warn("ignored top-level key '" + name + "'");
      }
      continue;
    }
    if (!body.is_object()) {
      throw InvalidArgument("priors: class '" + name + "' must be an object");
    }
    ClassPrior prior;
    prior.class_name = name;
    for (std::size_t k = 0; k < kPriorKeys.size(); ++k) {
      const char* key = kPriorKeys[k];
      if (!body.contains(key)) {
        throw InvalidArgument("priors: class '" + name + "' is missing '" +
                              key + "'");
      }
      const auto& pair = body.at(key);
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
          !pair[1].is_number()) {
        throw InvalidArgument("priors: '" + name + "." + key +
                              "' must be [alpha, beta]");
      }
      const double a = pair[0].get<double>();
      const double b = pair[1].get<double>();
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw InvalidArgument("priors: '" + name + "." + key +
                              "': alpha must be positive");
      }
      if (!(b > 0.0) || !std::isfinite(b)) {
        throw InvalidArgument("priors: '" + name + "." + key +
                              "': beta must be positive");
      }
      prior.params[k] = {a, b};
    }
    for (const auto& [key, unused] : body.items()) {
      if (std::find_if(kPriorKeys.begin(), kPriorKeys.end(), [&](const char* k) {
            return key == k;
          }) == kPriorKeys.end()) {
        warn("ignored key '" + key + "' in class '" + name + "'");
      }
    }
    table.classes.emplace(name, std::move(prior));
  }
  return table;
}

PriorsTable load_priors(const std::filesystem::path& path) {
  return parse_priors(read_file(path), path.filename().string());
}

}  // namespace sfa
