// sfadapt: command-line front end.
//
//   sfadapt [--config run.toml] [--jobs N] [--log-level info] <command> ...
//
// Options may also come from the config file (TOML, or JSON when the file
// starts with '{'); a [refine] table sets the refine options and so on.
// Flags on the command line win over the file.

#include <iostream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfadapt/buffer_api.hpp"
#include "sfadapt/log.hpp"
#include "sfadapt/parallel.hpp"
#include "sfadapt/pipeline.hpp"

namespace {

// CLI11's TOML reader, plus JSON objects flattened into the same items.
class TomlOrJsonConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::string text((std::istreambuf_iterator<char>(input)),
                           std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream toml(text);
      return CLI::ConfigTOML::from_config(toml);
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void flatten(const nlohmann::json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto deeper = parents;
        deeper.push_back(key);
        flatten(value, deeper, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

sfa::LogLevel parse_level(const std::string& s) {
  if (s == "debug") return sfa::LogLevel::kDebug;
  if (s == "warn") return sfa::LogLevel::kWarn;
  if (s == "error") return sfa::LogLevel::kError;
  return sfa::LogLevel::kInfo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-free adaptation toolkit: prompts, refinement, evaluation"};
  app.config_formatter(std::make_shared<TomlOrJsonConfig>());
  app.set_config("--config", "", "TOML or JSON file with default option values");
  app.set_version_flag("--version", std::string(sfa::buffer::version()));
  app.require_subcommand(1);
  app.fallthrough();  // global flags may also follow the command

  int jobs = sfa::max_threads();
  std::string log_level = "info";
  app.add_option("--jobs,-j", jobs, "Cases processed concurrently")->check(CLI::PositiveNumber);
  app.add_option("--log-level", log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  int rc = sfa::kExitOk;
  auto setup = [&] {
    sfa::set_log_level(parse_level(log_level));
    sfa::set_threads(jobs);
  };

  // canonize
  sfa::CanonizeOptions canon;
  std::string canon_lexicon, canon_llm;
  auto* c = app.add_subcommand("canonize", "Rewrite raw prompt batches into canonical prompts");
  c->add_option("--in", canon.in, "One raw [SEP]-joined batch per line")->required();
  c->add_option("--out", canon.out, "Canonical batches, one per line")->required();
  c->add_option("--lexicon", canon_lexicon, "Lexicon JSON (default: built-in)");
  c->add_option("--llm", canon_llm, "LLM config (TOML/JSON); switches to the HTTP path");
  c->callback([&] {
    setup();
    if (!canon_lexicon.empty()) canon.lexicon = canon_lexicon;
    if (!canon_llm.empty()) canon.llm_config = canon_llm;
    canon.jobs = jobs;
    rc = sfa::cmd_canonize(canon);
  });

  // refine
  sfa::RefineOptions refine;
  std::string refine_probs, refine_report;
  auto* r = app.add_subcommand("refine", "Drop implausible connected components from masks");
  r->add_option("--masks", refine.masks, "Directory of SRT1 masks")->required();
  r->add_option("--images", refine.images, "Directory of images (SRT1/PGM/PPM)")->required();
  r->add_option("--probs", refine_probs, "Directory of SRT1 probability maps");
  r->add_option("--priors", refine.priors, "Priors JSON")->required();
  r->add_option("--out", refine.out, "Output directory")->required();
  r->add_option("--connectivity", refine.connectivity, "4 or 8 (2-D), 6 or 26 (3-D)")
      ->check(CLI::IsMember({0, 4, 6, 8, 26}));
  r->add_option("--report", refine_report, "Combined JSON report of all cases");
  r->callback([&] {
    setup();
    if (!refine_probs.empty()) refine.probs = refine_probs;
    if (!refine_report.empty()) refine.report = refine_report;
    refine.jobs = jobs;
    rc = sfa::cmd_refine(refine);
  });

  // assemble
  sfa::AssembleOptions assemble;
  auto* a = app.add_subcommand("assemble", "Equalize images and write the adaptation manifest");
  a->add_option("--images", assemble.images, "Directory of target images")->required();
  a->add_option("--pseudolabels", assemble.pseudolabels, "Directory of pseudo-labels")->required();
  a->add_option("--out", assemble.out, "Manifest JSON path")->required();
  a->add_option("--levels", assemble.levels, "Histogram levels")->check(CLI::Range(2, 65536));
  a->add_flag("--per-slice", assemble.per_slice, "Equalize each z slice separately");
  a->add_flag("--stamp", assemble.stamp, "Record a creation timestamp");
  a->callback([&] {
    setup();
    assemble.jobs = jobs;
    rc = sfa::cmd_assemble(assemble);
  });

  // chaos
  sfa::ChaosOptions chaos;
  auto* ch = app.add_subcommand("chaos", "Generate corrupted prompts at a target chaos level");
  ch->add_option("--in", chaos.in, "Prompts, one per line")->required();
  ch->add_option("--tau", chaos.tau, "Target chaos level in [0, 100]")->required();
  ch->add_option("--seed", chaos.seed, "Random seed");
  ch->add_option("--candidates", chaos.candidates, "Candidates drawn per prompt")
      ->check(CLI::PositiveNumber);
  ch->add_option("--out", chaos.out, "JSON report")->required();
  ch->callback([&] {
    setup();
    rc = sfa::cmd_chaos(chaos);
  });

  // evaluate
  sfa::EvaluateOptions eval;
  std::string eval_md, asd_mode = "volume";
  auto* e = app.add_subcommand("evaluate", "DICE and ASD tables for predictions");
  e->add_option("--pred", eval.pred, "Directory of predicted masks")->required();
  e->add_option("--gt", eval.gt, "Directory of ground-truth masks")->required();
  e->add_option("--out", eval.out, "CSV report")->required();
  e->add_option("--md", eval_md, "Markdown table");
  e->add_option("--asd-mode", asd_mode, "volume or slice")
      ->check(CLI::IsMember({"volume", "slice"}));
  e->callback([&] {
    setup();
    if (!eval_md.empty()) eval.markdown = eval_md;
    eval.asd_mode = asd_mode == "slice" ? sfa::AsdMode::kSlice : sfa::AsdMode::kVolume;
    eval.jobs = jobs;
    rc = sfa::cmd_evaluate(eval);
  });

  // ks
  sfa::KsOptions ks;
  sfa::path ks_a, ks_b;
  std::vector<sfa::path> ks_more;
  auto* k = app.add_subcommand("ks", "Kolmogorov-Smirnov matrix between image sets");
  k->add_option("--a", ks_a, "First image directory")->required();
  k->add_option("--b", ks_b, "Second image directory")->required();
  k->add_option("--set", ks_more, "Further image directories");
  k->add_option("--mask", ks.masks, "Mask directory per set, in set order");
  k->add_option("--out", ks.out, "JSON report")->required();
  k->callback([&] {
    setup();
    ks.sets = {ks_a, ks_b};
    ks.sets.insert(ks.sets.end(), ks_more.begin(), ks_more.end());
    rc = sfa::cmd_ks(ks);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    return app.exit(s);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return sfa::kExitAbort;
  }
  return rc;
}
