#include "sfadapt/pipeline.hpp"

#include <omp.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sfadapt/capr.hpp"
#include "sfadapt/chaos.hpp"
#include "sfadapt/imgproc.hpp"
#include "sfadapt/log.hpp"
#include "sfadapt/report.hpp"
#include "sfadapt/tensor_io.hpp"

namespace sfa {

namespace {

using ojson = nlohmann::ordered_json;

std::vector<std::string> read_lines(const path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

// Runs body(i) for i in [0, n) on up to `jobs` threads. Exceptions are
// caught per item and reported through the returned flags.
template <typename Body>
std::vector<char> for_each_case(std::size_t n, int jobs, Body body) {
  std::vector<char> ok(n, 0);
  const int threads = std::max(1, jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
      ok[static_cast<std::size_t>(i)] = 1;
    } catch (const std::exception& e) {
      log_event(LogLevel::kDebug, "case.failed",
                {{"index", i}, {"error", e.what()}});
    }
  }
  return ok;
}

int finish(const std::vector<char>& ok) {
  for (char c : ok) {
    if (!c) return kExitPartial;
  }
  return kExitOk;
}

template <typename Fn>
int guarded(const char* command, Fn fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    log_event(LogLevel::kError, "abort", {{"command", command}, {"error", e.what()}});
    return kExitAbort;
  }
}

void ensure_parent(const path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

[[noreturn]] void abort_unmatched(const char* what, const std::vector<std::string>& names) {
  std::string msg = std::string(what) + ":";
  for (const auto& n : names) msg += " " + n;
  throw InvalidArgument(msg);
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::map<std::string, path> list_cases(const path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::map<std::string, path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.empty() || name[0] == '.') continue;
    const std::string stem = e.path().stem().string();
    const auto [it, fresh] = out.emplace(stem, e.path());
    if (!fresh) {
      throw InvalidArgument("two files share the case name '" + stem + "' in " +
                            dir.string());
    }
  }
  return out;
}

// ---------------------------------------------------------------- canonize

int cmd_canonize(const CanonizeOptions& opt) {
  return guarded("canonize", [&] {
    const auto lines = read_lines(opt.in);
    const Lexicon lex = opt.lexicon ? load_lexicon(*opt.lexicon) : default_lexicon();
    std::optional<MetaPromptConfig> llm;
    if (opt.llm_config) llm = load_llm_config(*opt.llm_config);

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!blank(lines[i])) todo.push_back(i);
    }
    std::vector<std::string> results(todo.size());
    const auto ok = for_each_case(todo.size(), opt.jobs, [&](std::size_t k) {
      const std::size_t line = todo[k] + 1;
      try {
        const auto batch = split_batch(lines[todo[k]]);
        std::vector<CanonicalPrompt> canon;
        if (llm) {
          std::unique_ptr<ChatTransport> transport =
              opt.transport_factory ? opt.transport_factory(*llm)
                                    : std::make_unique<HttpChatTransport>(llm->endpoint);
          canon = canonicalize_llm(batch, *llm, *transport, lex);
        } else {
          canon = canonicalize_lexicon(batch, lex);
        }
        std::vector<std::string> parts;
        for (const auto& p : canon) parts.push_back(emit_canonical(p));
        results[k] = join_batch(parts);
      } catch (const LlmError& e) {
        log_event(LogLevel::kError, "canonize.line_failed",
                  {{"line", line}, {"error", e.what()}, {"raw_response", e.raw_response()}});
        throw;
      } catch (const std::exception& e) {
        log_event(LogLevel::kError, "canonize.line_failed",
                  {{"line", line}, {"error", e.what()}});
        throw;
      }
    });

    std::string out;
    for (std::size_t k = 0; k < todo.size(); ++k) {
      if (ok[k]) out += results[k] + "\n";
    }
    ensure_parent(opt.out);
    write_file(opt.out, out);
    log_event(LogLevel::kInfo, "canonize.done",
              {{"lines", todo.size()},
               {"failed", std::count(ok.begin(), ok.end(), 0)}});
    return finish(ok);
  });
}

// ------------------------------------------------------------------ refine

RefinedCase refine_case(const LabelMask& mask, const ProbabilityMap* prob,
                        const GridImage& image, const PriorsTable& priors,
                        int connectivity) {
  const auto issues = validate_pair(image, mask);
  if (!issues.empty()) {
    std::string msg = issues.front();
    for (std::size_t i = 1; i < issues.size(); ++i) msg += "; " + issues[i];
    throw InvalidArgument(msg);
  }
  const std::size_t rank = mask.grid().rank();
  const Connectivity conn = connectivity == 0 ? Connectivity::kFull
                                              : parse_connectivity(connectivity, rank);
  RefinedCase out;
  out.result = refine_mask(mask, prob, image, priors, conn);
  out.mask_bytes = encode_tensor(out.result.mask);
  out.report_json = out.result.report.to_json();
  return out;
}

int cmd_refine(const RefineOptions& opt) {
  return guarded("refine", [&] {
    const PriorsTable priors = load_priors(opt.priors);
    const auto masks = list_cases(opt.masks);
    const auto images = list_cases(opt.images);
    std::map<std::string, path> probs;
    if (opt.probs) probs = list_cases(*opt.probs);

    std::vector<std::string> unmatched;
    for (const auto& [stem, p] : masks) {
      if (!images.count(stem)) unmatched.push_back(stem + " (no image)");
      if (opt.probs && !probs.count(stem)) unmatched.push_back(stem + " (no probability map)");
    }
    if (!unmatched.empty()) abort_unmatched("unmatched cases", unmatched);

    // Every class must resolve before anything is written.
    std::vector<std::string> missing;
    for (const auto& [stem, p] : masks) {
      const LabelMask m = read_mask(p);
      for (Label l : m.present_labels()) {
        const auto it = m.class_names().find(l);
        if (it == m.class_names().end()) {
          throw InvalidArgument("case " + stem + ": unnamed label " + std::to_string(l));
        }
        if (!priors.find(it->second) &&
            std::find(missing.begin(), missing.end(), it->second) == missing.end()) {
          missing.push_back(it->second);
        }
      }
    }
    if (!missing.empty()) {
      std::string msg = "missing prior for class";
      for (const auto& m : missing) msg += " '" + m + "'";
      throw InvalidArgument(msg);
    }

    std::filesystem::create_directories(opt.out);
    std::vector<std::string> stems;
    for (const auto& [stem, p] : masks) stems.push_back(stem);
    std::vector<std::string> reports(stems.size());

    const auto ok = for_each_case(stems.size(), opt.jobs, [&](std::size_t i) {
      const std::string& stem = stems[i];
      try {
        const LabelMask mask = read_mask(masks.at(stem));
        const GridImage image = read_image(images.at(stem));
        std::optional<ProbabilityMap> prob;
        if (opt.probs) prob = read_prob(probs.at(stem));
        const auto refined =
            refine_case(mask, prob ? &*prob : nullptr, image, priors, opt.connectivity);
        write_file(opt.out / masks.at(stem).filename(), refined.mask_bytes);
        write_file(opt.out / (stem + ".report.json"), refined.report_json);
        reports[i] = refined.report_json;
        log_event(LogLevel::kInfo, "refine.case",
                  {{"case", stem}, {"removed_voxels", refined.result.report.removed_voxels}});
      } catch (const std::exception& e) {
        log_event(LogLevel::kError, "refine.case_failed", {{"case", stem}, {"error", e.what()}});
        throw;
      }
    });

    if (opt.report) {
      ojson all;
      all["priors"] = priors.provenance;
      all["cases"] = ojson::array();
      for (std::size_t i = 0; i < stems.size(); ++i) {
        ojson c;
        c["case"] = stems[i];
        c["status"] = ok[i] ? "ok" : "failed";
        if (ok[i]) c["report"] = ojson::parse(reports[i]);
        all["cases"].push_back(std::move(c));
      }
      ensure_parent(*opt.report);
      write_file(*opt.report, all.dump(2) + "\n");
    }
    return finish(ok);
  });
}

// ---------------------------------------------------------------- assemble

int cmd_assemble(const AssembleOptions& opt) {
  return guarded("assemble", [&] {
    const auto images = list_cases(opt.images);
    const auto labels = list_cases(opt.pseudolabels);
    std::vector<std::string> orphans;
    for (const auto& [stem, p] : images) {
      if (!labels.count(stem)) orphans.push_back(stem + " (no pseudo-label)");
    }
    for (const auto& [stem, p] : labels) {
      if (!images.count(stem)) orphans.push_back(stem + " (no image)");
    }
    if (!orphans.empty()) abort_unmatched("unmatched pairs", orphans);
    if (opt.levels < 2 || opt.levels > 65536) {
      throw InvalidArgument("levels must lie in [2, 65536]");
    }

    const path manifest_dir = opt.out.has_parent_path() ? opt.out.parent_path() : path(".");
    const path eq_dir = manifest_dir / "equalized";
    std::filesystem::create_directories(eq_dir);

    std::vector<std::string> stems;
    for (const auto& [stem, p] : images) stems.push_back(stem);
    std::vector<ManifestEntry> entries(stems.size());
    EqualizeOptions eq;
    eq.levels = opt.levels;
    eq.per_slice = opt.per_slice;

    const auto ok = for_each_case(stems.size(), opt.jobs, [&](std::size_t i) {
      const std::string& stem = stems[i];
      try {
        const GridImage image = read_image(images.at(stem));
        const LabelMask label = read_mask(labels.at(stem));
        const auto issues = validate_pair(image, label);
        if (!issues.empty()) throw InvalidArgument(issues.front());
        const GridImage out = histogram_equalize(image, eq);
        const path target = eq_dir / (stem + ".srt");
        write_tensor(out, target);
        entries[i] = {stem, path("equalized") / (stem + ".srt"),
                      std::filesystem::absolute(labels.at(stem)).lexically_normal()};
      } catch (const std::exception& e) {
        log_event(LogLevel::kError, "assemble.case_failed", {{"case", stem}, {"error", e.what()}});
        throw;
      }
    });

    AdaptManifest manifest;
    for (std::size_t i = 0; i < stems.size(); ++i) {
      if (ok[i]) manifest.entries.push_back(entries[i]);
    }
    manifest.provenance = opt.provenance;
    manifest.provenance["levels"] = std::to_string(opt.levels);
    manifest.provenance["per_slice"] = opt.per_slice ? "true" : "false";
    manifest.provenance["images"] = opt.images.string();
    manifest.provenance["pseudolabels"] = opt.pseudolabels.string();
    if (opt.stamp) manifest.provenance["created"] = iso_timestamp();
    write_manifest(manifest, opt.out);
    return finish(ok);
  });
}

// ------------------------------------------------------------------- chaos

std::uint64_t prompt_seed(std::uint64_t seed, std::uint64_t k) {
  // splitmix64 finalizer over seed + k.
  std::uint64_t z = seed + k * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int cmd_chaos(const ChaosOptions& opt) {
  return guarded("chaos", [&] {
    const RateSchedule rates = rate_schedule(opt.tau);
    if (opt.candidates < 1) throw InvalidArgument("candidates must be >= 1");
    const auto lines = read_lines(opt.in);

    ojson report;
    report["tau"] = opt.tau;
    report["seed"] = opt.seed;
    report["candidates"] = opt.candidates;
    report["rates"] = {{"spell", rates.spell}, {"shuffle", rates.shuffle}, {"remove", rates.remove}};
    report["prompts"] = ojson::array();
    std::uint64_t k = 0;
    double gap_sum = 0.0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      ChaosConfig cfg;
      cfg.target_level = opt.tau;
      cfg.candidates = opt.candidates;
      cfg.seed = prompt_seed(opt.seed, k++);
      const auto res = generate_chaos(lines[i], cfg);
      gap_sum += std::abs(res.score - opt.tau);
      report["prompts"].push_back({{"line", i + 1},
                                   {"original", lines[i]},
                                   {"perturbed", res.perturbed},
                                   {"achieved_score", res.score}});
    }
    report["mean_abs_gap"] = k == 0 ? 0.0 : gap_sum / static_cast<double>(k);
    ensure_parent(opt.out);
    write_file(opt.out, report.dump(2) + "\n");
    return kExitOk;
  });
}

// ---------------------------------------------------------------- evaluate

EvaluationTables evaluation_tables(const std::vector<MetricResult>& rows, AsdMode mode) {
  const auto agg = aggregate(rows);
  return {evaluation_csv(rows, agg, mode), evaluation_markdown(agg, mode)};
}

int cmd_evaluate(const EvaluateOptions& opt) {
  return guarded("evaluate", [&] {
    const auto pred = list_cases(opt.pred);
    const auto gt = list_cases(opt.gt);
    std::vector<std::string> unmatched;
    for (const auto& [stem, p] : gt) {
      if (!pred.count(stem)) unmatched.push_back(stem + " (no prediction)");
    }
    for (const auto& [stem, p] : pred) {
      if (!gt.count(stem)) unmatched.push_back(stem + " (no ground truth)");
    }
    if (!unmatched.empty()) abort_unmatched("unmatched cases", unmatched);

    std::vector<std::string> stems;
    for (const auto& [stem, p] : gt) stems.push_back(stem);
    std::vector<std::vector<MetricResult>> per_case(stems.size());
    const auto ok = for_each_case(stems.size(), opt.jobs, [&](std::size_t i) {
      const std::string& stem = stems[i];
      try {
        const LabelMask p = read_mask(pred.at(stem));
        const LabelMask g = read_mask(gt.at(stem));
        if (p.grid() != g.grid()) throw InvalidArgument("grid mismatch");
        per_case[i] = evaluate_case(stem, p, g, opt.asd_mode);
      } catch (const std::exception& e) {
        log_event(LogLevel::kError, "evaluate.case_failed", {{"case", stem}, {"error", e.what()}});
        throw;
      }
    });

    std::vector<MetricResult> rows;
    for (const auto& c : per_case) rows.insert(rows.end(), c.begin(), c.end());
    const auto tables = evaluation_tables(rows, opt.asd_mode);
    ensure_parent(opt.out);
    write_file(opt.out, tables.csv);
    if (opt.markdown) {
      ensure_parent(*opt.markdown);
      write_file(*opt.markdown, tables.markdown);
    }
    return finish(ok);
  });
}

// ---------------------------------------------------------------------- ks

int cmd_ks(const KsOptions& opt) {
  return guarded("ks", [&] {
    if (opt.sets.size() < 2) throw InvalidArgument("ks needs at least two image sets");
    if (!opt.masks.empty() && opt.masks.size() != opt.sets.size()) {
      throw InvalidArgument("give one mask directory per image set");
    }
    std::vector<std::vector<double>> pooled(opt.sets.size());
    for (std::size_t s = 0; s < opt.sets.size(); ++s) {
      const auto images = list_cases(opt.sets[s]);
      std::map<std::string, path> masks;
      if (!opt.masks.empty()) masks = list_cases(opt.masks[s]);
      for (const auto& [stem, p] : images) {
        const GridImage img = read_image(p);
        std::vector<double> samples;
        if (!opt.masks.empty()) {
          if (!masks.count(stem)) abort_unmatched("image without mask", {stem});
          const LabelMask m = read_mask(masks.at(stem));
          samples = intensity_samples(img, &m);
        } else {
          samples = intensity_samples(img);
        }
        pooled[s].insert(pooled[s].end(), samples.begin(), samples.end());
      }
      if (pooled[s].empty()) {
        throw InvalidArgument("image set " + opt.sets[s].string() + " has no samples");
      }
    }

    const std::size_t n = pooled.size();
    std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        matrix[i][j] = matrix[j][i] = ks_statistic(pooled[i], pooled[j]);
      }
    }
    ojson out;
    out["sets"] = ojson::array();
    for (std::size_t s = 0; s < n; ++s) {
      out["sets"].push_back({{"dir", opt.sets[s].string()}, {"samples", pooled[s].size()}});
    }
    out["matrix"] = matrix;
    ensure_parent(opt.out);
    write_file(opt.out, out.dump(2) + "\n");
    return kExitOk;
  });
}

}  // namespace sfa
