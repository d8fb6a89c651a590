#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfcorrect/cli.hpp"
#include "selfcorrect/config.hpp"

namespace {

struct SubcommandHelp {
  const char* name;
  const char* description;
};

constexpr SubcommandHelp kHelp[] = {
    {"sample", "sample and grade n solutions per training question"},
    {"pair", "form incorrect-correct solution pairs"},
    {"critique", "generate one hint-guided critique per pair"},
    {"filter", "apply the rule and prompting filters; write the corpus"},
    {"emit", "write refiner/verifier fine-tuning records"},
    {"select-threshold", "tune the refine threshold on the dev set"},
    {"evaluate", "run verify-then-refine over the test set"},
    {"rerank", "sample k candidates and rerank by verifier score"},
    {"report", "aggregate run records into metrics"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-correction data pipeline and evaluation harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string run_dir;
  std::vector<std::string> overrides;

  std::map<std::string, CLI::App*> subcommands;
  for (const SubcommandHelp& h : kHelp) {
    CLI::App* sub = app.add_subcommand(h.name, h.description);
    sub->add_option("--config", config_path, "key=value configuration file")->required();
    sub->add_option("--run-dir,-d", run_dir, "run directory (overrides run.dir)");
    sub->add_option("--set,-s", overrides, "config override, key=value (repeatable)");
    subcommands[h.name] = sub;
  }

  // Frequently swept knobs get first-class flags; they are sugar for --set.
  std::string fraction, verifier, refiner, threshold, rerank_k, rerank_c, n_samples;
  subcommands["sample"]->add_option("--n-samples", n_samples, "solutions per question");
  subcommands["emit"]->add_option("--fraction", fraction, "corpus fraction to emit");
  subcommands["evaluate"]->add_option("--verifier", verifier,
                                      "verifier kind: self|prompted|external|oracle");
  subcommands["evaluate"]->add_option("--refiner", refiner, "refiner kind: model|random");
  subcommands["evaluate"]->add_option("--threshold", threshold, "fixed refine threshold");
  subcommands["rerank"]->add_option("--k", rerank_k, "candidates per question");
  subcommands["rerank"]->add_option("--c", rerank_c, "refine threshold for reranking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? selfcorrect::cli::kExitOk : selfcorrect::cli::kExitConfig;
  }

  if (!n_samples.empty()) overrides.push_back("sampling.n_samples=" + n_samples);
  if (!fraction.empty()) overrides.push_back("emit.fraction=" + fraction);
  if (!verifier.empty()) overrides.push_back("verifier.kind=" + verifier);
  if (!refiner.empty()) overrides.push_back("refiner.kind=" + refiner);
  if (!threshold.empty()) {
    overrides.push_back("threshold.source=fixed");
    overrides.push_back("threshold.value=" + threshold);
  }
  if (!rerank_k.empty()) overrides.push_back("rerank.k=" + rerank_k);
  if (!rerank_c.empty()) overrides.push_back("rerank.c=" + rerank_c);

  selfcorrect::RunConfig config;
  try {
    config = selfcorrect::load_config(config_path);
    for (const std::string& assignment : overrides)
      selfcorrect::apply_override(config, assignment);
  } catch (const selfcorrect::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return selfcorrect::cli::kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  return selfcorrect::cli::run_stage(name, config, run_dir);
}
