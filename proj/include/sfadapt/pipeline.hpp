#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfadapt/llm.hpp"
#include "sfadapt/metrics.hpp"
#include "sfadapt/plausibility.hpp"

namespace sfa {

// Process exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitAbort = 1, kExitPartial = 2 };

using path = std::filesystem::path;

// Regular, non-hidden files of `dir` keyed by filename stem. Throws
// IoError when the directory is missing and InvalidArgument on duplicate
// stems.
std::map<std::string, path> list_cases(const path& dir);

// One raw batch per input line, one "[SEP]"-joined canonical batch per
// output line. Blank lines are skipped; failed lines are logged with their
// line number and left out of the output.
struct CanonizeOptions {
  path in;
  path out;
  std::optional<path> lexicon;     // default: built-in lexicon
  std::optional<path> llm_config;  // switches to the HTTP path
  int jobs = 1;
  // Test hook: builds the transport for the LLM path instead of HTTP.
  std::function<std::unique_ptr<ChatTransport>(const MetaPromptConfig&)> transport_factory;
};
int cmd_canonize(const CanonizeOptions& opt);

struct RefineOptions {
  path masks;
  path images;
  std::optional<path> probs;
  path priors;
  path out;
  int connectivity = 0;  // 0: full neighbourhood for the grid's rank
  std::optional<path> report;  // combined report of all cases
  int jobs = 1;
};

// Refines one case exactly as cmd_refine does; returns the encoded SRT1 mask
// and the report JSON written for it.
struct RefinedCase {
  std::string mask_bytes;
  std::string report_json;
  RefineResult result;
};
RefinedCase refine_case(const LabelMask& mask, const ProbabilityMap* prob,
                        const GridImage& image, const PriorsTable& priors,
                        int connectivity);

// Writes <out>/<mask file name> and <out>/<stem>.report.json per case.
int cmd_refine(const RefineOptions& opt);

struct AssembleOptions {
  path images;
  path pseudolabels;
  path out;  // manifest path; equalized images go to <dir of out>/equalized/
  int levels = 256;
  bool per_slice = false;
  bool stamp = false;  // add a creation timestamp to the provenance
  std::map<std::string, std::string> provenance;  // extra entries
  int jobs = 1;
};
int cmd_assemble(const AssembleOptions& opt);

struct ChaosOptions {
  path in;
  path out;
  double tau = 0.0;
  std::uint64_t seed = 0;
  int candidates = 50;
};

// Seed of the k-th non-blank prompt line (0-based).
std::uint64_t prompt_seed(std::uint64_t seed, std::uint64_t k);
int cmd_chaos(const ChaosOptions& opt);

struct EvaluateOptions {
  path pred;
  path gt;
  path out;  // CSV
  std::optional<path> markdown;
  AsdMode asd_mode = AsdMode::kVolume;
  int jobs = 1;
};

// Per-case metrics rows and aggregate, as written by cmd_evaluate.
struct EvaluationTables {
  std::string csv;
  std::string markdown;
};
EvaluationTables evaluation_tables(const std::vector<MetricResult>& rows, AsdMode mode);
int cmd_evaluate(const EvaluateOptions& opt);

struct KsOptions {
  std::vector<path> sets;   // image directories
  std::vector<path> masks;  // empty, or one mask directory per set
  path out;
};
int cmd_ks(const KsOptions& opt);

}  // namespace sfa
