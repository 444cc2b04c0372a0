// Command-line front end: one verb per pipeline stage, all driven by a JSON
// run config plus a handful of overrides.
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "anonrisk/llm.hpp"
#include "anonrisk/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::string> pipeline;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;
  bool second_guess_on = false;
  bool second_guess_off = false;
  bool seed_cache = false;
  bool svg = false;
};

void add_common_options(CLI::App* sub, Overrides& ov) {
  sub->add_option("--config", ov.config_path, "run config JSON file")->required();
  sub->add_option("--mode", ov.mode, "LLM mode: live, replay or mock");
  sub->add_option("--pipeline", ov.pipeline,
                  "mask_attack, rewrite_attack, ablate_attack or slot_fill");
  sub->add_option("--out", ov.out_dir, "run directory (overrides out_dir)");
  sub->add_option("--jobs", ov.jobs, "worker threads / concurrent requests");
  sub->add_flag("--second-guess", ov.second_guess_on,
                "allow one follow-up guess after a wrong first answer");
  sub->add_flag("--no-second-guess", ov.second_guess_off, "first answers only");
  sub->add_flag("--seed-cache", ov.seed_cache,
                "in mock mode, also record transcripts into the cache");
  sub->add_flag("--svg", ov.svg, "emit SVG charts with the report");
}

anonrisk::pipeline::RunConfig make_config(const Overrides& ov) {
  auto config = anonrisk::pipeline::load_run_config(ov.config_path);
  if (ov.mode.has_value()) config.llm.mode = anonrisk::llm::mode_from_name(*ov.mode);
  if (ov.pipeline.has_value()) {
    config.pipeline = anonrisk::pipeline::pipeline_from_name(*ov.pipeline);
  }
  if (ov.out_dir.has_value()) config.out_dir = *ov.out_dir;
  if (ov.jobs.has_value()) config.jobs = *ov.jobs;
  if (ov.second_guess_on) config.second_guess = true;
  if (ov.second_guess_off) config.second_guess = false;
  if (ov.svg) config.svg = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"re-identification risk harness for anonymised person descriptions"};
  app.require_subcommand(1);

  using Step = int (anonrisk::pipeline::Runner::*)();
  std::map<std::string, Overrides> overrides;
  std::map<std::string, Step> steps = {
      {"ingest", &anonrisk::pipeline::Runner::run_ingest},
      {"mask", &anonrisk::pipeline::Runner::run_mask},
      {"strip", &anonrisk::pipeline::Runner::run_strip},
      {"intrude", &anonrisk::pipeline::Runner::run_intrude},
      {"rewrite", &anonrisk::pipeline::Runner::run_rewrite},
      {"tokens", &anonrisk::pipeline::Runner::run_tokens},
      {"ablate", &anonrisk::pipeline::Runner::run_ablate},
      {"slotfill", &anonrisk::pipeline::Runner::run_slotfill},
      {"evaluate", &anonrisk::pipeline::Runner::run_evaluate},
      {"report", &anonrisk::pipeline::Runner::run_report},
  };
  const std::map<std::string, std::string> descriptions = {
      {"ingest", "validate the corpus manifest and print counts"},
      {"mask", "tag-mask every original document"},
      {"strip", "remove tag placeholders from masked texts"},
      {"intrude", "run the motivated-intruder attack for the configured pipeline"},
      {"rewrite", "whole-text LLM anonymisation"},
      {"tokens", "ask the LLM for identifying tokens and ground them"},
      {"ablate", "delete LLM-identified tokens from the originals"},
      {"slotfill", "ask the LLM to reconstruct redacted tag values"},
      {"evaluate", "compute the metric report files"},
      {"report", "print the report (recomputing it first)"},
  };

  for (auto& [name, step] : steps) {
    (void)step;
    auto* sub = app.add_subcommand(name, descriptions.at(name));
    add_common_options(sub, overrides[name]);
  }

  CLI11_PARSE(app, argc, argv);

  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    const Overrides& ov = overrides.at(name);
    anonrisk::pipeline::Runner runner(make_config(ov), ov.seed_cache);
    return (runner.*steps.at(name))();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
