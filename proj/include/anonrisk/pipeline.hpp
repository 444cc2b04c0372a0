#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "anonrisk/corpus.hpp"
#include "anonrisk/llm.hpp"
#include "anonrisk/llmanon.hpp"
#include "anonrisk/mask.hpp"
#include "anonrisk/metrics.hpp"

namespace anonrisk::pipeline {

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Pipeline { mask_attack, rewrite_attack, ablate_attack, slot_fill };

std::string_view pipeline_name(Pipeline p);
Pipeline pipeline_from_name(std::string_view name);

// Everything one run needs. Relative paths in the config file are resolved
// against the file's own directory, so a config can travel with its corpus.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path gazetteer;
  std::filesystem::path out_dir;
  Pipeline pipeline = Pipeline::mask_attack;
  long seed = 0;  // reserved for sampled subsets; recorded in the digest
  bool second_guess = true;
  int jobs = 1;
  bool svg = false;
  std::optional<metrics::RateLine> human_baseline;
  llm::LlmConfig llm;
};

RunConfig load_run_config(const std::filesystem::path& config_path);

// Canonical JSON of the effective config. out_dir is deliberately excluded:
// where a run lands must not change what it contains, and the determinism
// check compares two runs of one config written to two directories.
std::string config_canonical_json(const RunConfig& config);
std::string config_digest(const RunConfig& config);

// Drives one run directory. Every step is idempotent and resumable: per-doc
// artefacts are skipped when already present, JSONL checkpoints are appended
// line-by-line and rewritten sorted by doc_id once the step completes.
class Runner {
 public:
  explicit Runner(RunConfig config, bool seed_cache = false);

  const RunConfig& config() const { return config_; }

  int run_ingest();
  int run_mask();
  int run_strip();
  int run_intrude();
  int run_rewrite();
  int run_tokens();
  int run_ablate();
  int run_slotfill();
  int run_evaluate();
  int run_report();

 private:
  void prepare();
  const corpus::CorpusManifest& manifest();
  const mask::Gazetteer& gaz();
  llm::Completer& completer();
  std::vector<corpus::Document> originals();

  std::string masked_text(const corpus::Document& doc);
  // Docs eligible for the ablation flow: the ones the first attack identified
  // at rank 1 when results/mask_attack.jsonl exists, otherwise everything.
  std::vector<corpus::Document> ablation_targets();
  std::map<std::string, llmanon::SensitiveTokenReport> ensure_token_reports(
      const std::vector<corpus::Document>& docs, std::vector<std::string>& failures);
  metrics::MetricsReport assemble_report();
  void write_report_files(const metrics::MetricsReport& report);
  void write_svgs(const metrics::MetricsReport& report);

  RunConfig config_;
  bool seed_cache_ = false;
  bool prepared_ = false;
  std::optional<corpus::CorpusManifest> manifest_;
  std::optional<mask::Gazetteer> gazetteer_;
  std::unique_ptr<llm::Completer> completer_;
};

}  // namespace anonrisk::pipeline
