#include "anonrisk/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "anonrisk/adversary.hpp"
#include "anonrisk/align.hpp"
#include "anonrisk/prompts.hpp"
#include "anonrisk/svg.hpp"
#include "anonrisk/util.hpp"

namespace anonrisk::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::mask_attack: return "mask_attack";
    case Pipeline::rewrite_attack: return "rewrite_attack";
    case Pipeline::ablate_attack: return "ablate_attack";
    case Pipeline::slot_fill: return "slot_fill";
  }
  throw PipelineError("unhandled pipeline value");
}

Pipeline pipeline_from_name(std::string_view name) {
  if (name == "mask_attack") return Pipeline::mask_attack;
  if (name == "rewrite_attack") return Pipeline::rewrite_attack;
  if (name == "ablate_attack") return Pipeline::ablate_attack;
  if (name == "slot_fill") return Pipeline::slot_fill;
  throw PipelineError("unknown pipeline '" + std::string(name) +
                      "' (expected mask_attack, rewrite_attack, ablate_attack or slot_fill)");
}

namespace {

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (allowed.count(key) == 0) {
      throw PipelineError("unknown key '" + key + "' in " + where);
    }
  }
}

llm::RequestSettings request_settings(const llm::LlmConfig& config) {
  llm::RequestSettings settings;
  settings.model = config.model;
  settings.temperature = config.temperature;
  settings.max_tokens = config.max_tokens;
  return settings;
}

std::vector<std::string> non_empty_lines(const fs::path& path) {
  std::vector<std::string> lines;
  for (auto& line : util::read_lines(path)) {
    if (!util::trim(line).empty()) lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<adversary::GuessResult> read_guess_file(const fs::path& path) {
  std::vector<adversary::GuessResult> results;
  if (!fs::exists(path)) return results;
  for (const auto& line : non_empty_lines(path)) {
    results.push_back(adversary::guess_from_json_line(line));
  }
  return results;
}

void write_guess_file(const fs::path& path, std::vector<adversary::GuessResult> results) {
  std::sort(results.begin(), results.end(),
            [](const adversary::GuessResult& a, const adversary::GuessResult& b) {
              return a.doc_id < b.doc_id;
            });
  std::ostringstream out;
  for (const auto& result : results) out << adversary::guess_to_json_line(result) << '\n';
  util::write_text_file_atomic(path, out.str());
}

void print_failures(const std::string& stage, const std::vector<std::string>& failures) {
  if (failures.empty()) return;
  std::cerr << stage << ": " << failures.size() << " document(s) failed\n";
  for (const auto& failure : failures) std::cerr << "  " << failure << "\n";
}

// A redaction's surface tokens minus pure punctuation, case-folded — the same
// shape the grounded LLM token sets use, so the two are comparable.
std::set<std::string> folded_word_tokens(const std::vector<align::AlignedRedaction>& redactions) {
  std::set<std::string> folded;
  for (const auto& redaction : redactions) {
    for (const auto& token : redaction.original_tokens) {
      if (token.kind == align::TokenKind::punctuation) continue;
      folded.insert(util::case_fold(token.surface));
    }
  }
  return folded;
}

}  // namespace

RunConfig load_run_config(const fs::path& config_path) {
  json root;
  try {
    root = json::parse(util::read_text_file(config_path));
  } catch (const json::parse_error& e) {
    throw PipelineError("config " + config_path.string() + " is not valid JSON: " + e.what());
  }
  if (!root.is_object()) {
    throw PipelineError("config " + config_path.string() + " must be a JSON object");
  }
  reject_unknown_keys(root,
                      {"manifest", "gazetteer", "out_dir", "pipeline", "seed", "second_guess",
                       "jobs", "max_concurrency", "svg", "human_baseline", "llm"},
                      "config");

  const fs::path base = fs::absolute(config_path).parent_path();
  auto resolve = [&](const json& value, const char* key) {
    if (!value.is_string()) throw PipelineError(std::string(key) + " must be a string path");
    fs::path p = value.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };

  RunConfig config;
  if (!root.contains("manifest")) throw PipelineError("config is missing 'manifest'");
  if (!root.contains("gazetteer")) throw PipelineError("config is missing 'gazetteer'");
  if (!root.contains("out_dir")) throw PipelineError("config is missing 'out_dir'");
  config.manifest = resolve(root["manifest"], "manifest");
  config.gazetteer = resolve(root["gazetteer"], "gazetteer");
  config.out_dir = resolve(root["out_dir"], "out_dir");
  if (root.contains("pipeline")) {
    config.pipeline = pipeline_from_name(root["pipeline"].get<std::string>());
  }
  if (root.contains("seed")) config.seed = root["seed"].get<long>();
  if (root.contains("second_guess")) config.second_guess = root["second_guess"].get<bool>();
  if (root.contains("jobs")) config.jobs = root["jobs"].get<int>();
  if (root.contains("max_concurrency")) config.jobs = root["max_concurrency"].get<int>();
  if (root.contains("svg")) config.svg = root["svg"].get<bool>();

  if (root.contains("human_baseline") && !root["human_baseline"].is_null()) {
    const json& hb = root["human_baseline"];
    reject_unknown_keys(hb, {"label", "successes", "total"}, "human_baseline");
    metrics::RateLine line;
    line.label = hb.value("label", std::string("human intruders"));
    line.successes = hb.at("successes").get<std::size_t>();
    line.total = hb.at("total").get<std::size_t>();
    if (line.total == 0) throw PipelineError("human_baseline.total must be positive");
    config.human_baseline = line;
  }

  if (root.contains("llm")) {
    const json& l = root["llm"];
    reject_unknown_keys(l,
                        {"mode", "model", "temperature", "max_tokens", "cache_dir", "mock_table",
                         "endpoint_url", "base_url", "api_key_env", "timeout_seconds",
                         "rate_limit_rpm", "requests_per_minute", "max_concurrency", "retry"},
                        "llm");
    if (l.contains("mode")) config.llm.mode = llm::mode_from_name(l["mode"].get<std::string>());
    if (l.contains("model")) config.llm.model = l["model"].get<std::string>();
    if (l.contains("temperature")) config.llm.temperature = l["temperature"].get<double>();
    if (l.contains("max_tokens") && !l["max_tokens"].is_null()) {
      config.llm.max_tokens = l["max_tokens"].get<int>();
    }
    if (l.contains("cache_dir")) config.llm.cache_dir = resolve(l["cache_dir"], "llm.cache_dir");
    if (l.contains("mock_table")) {
      config.llm.mock_table = resolve(l["mock_table"], "llm.mock_table");
    }
    if (l.contains("endpoint_url")) config.llm.base_url = l["endpoint_url"].get<std::string>();
    if (l.contains("base_url")) config.llm.base_url = l["base_url"].get<std::string>();
    if (l.contains("api_key_env")) config.llm.api_key_env = l["api_key_env"].get<std::string>();
    if (l.contains("timeout_seconds")) {
      config.llm.timeout_seconds = l["timeout_seconds"].get<int>();
    }
    if (l.contains("rate_limit_rpm")) {
      config.llm.requests_per_minute = l["rate_limit_rpm"].get<int>();
    }
    if (l.contains("requests_per_minute")) {
      config.llm.requests_per_minute = l["requests_per_minute"].get<int>();
    }
    if (l.contains("max_concurrency")) config.jobs = l["max_concurrency"].get<int>();
    if (l.contains("retry")) {
      const json& r = l["retry"];
      reject_unknown_keys(r, {"max_attempts", "initial_backoff_ms", "multiplier"}, "llm.retry");
      if (r.contains("max_attempts")) config.llm.retry.max_attempts = r["max_attempts"].get<int>();
      if (r.contains("initial_backoff_ms")) {
        config.llm.retry.initial_backoff_ms = r["initial_backoff_ms"].get<int>();
      }
      if (r.contains("multiplier")) config.llm.retry.multiplier = r["multiplier"].get<double>();
    }
  }

  if (config.jobs < 1) throw PipelineError("jobs must be at least 1");
  if (config.llm.mode != llm::Mode::mock && config.llm.cache_dir.empty()) {
    throw PipelineError("llm.cache_dir is required in live and replay modes");
  }
  if (config.llm.mode == llm::Mode::mock && config.llm.mock_table.empty()) {
    throw PipelineError("llm.mock_table is required in mock mode");
  }
  return config;
}

std::string config_canonical_json(const RunConfig& config) {
  json j;
  j["manifest"] = config.manifest.string();
  j["gazetteer"] = config.gazetteer.string();
  j["pipeline"] = std::string(pipeline_name(config.pipeline));
  j["seed"] = config.seed;
  j["second_guess"] = config.second_guess;
  j["jobs"] = config.jobs;
  j["svg"] = config.svg;
  if (config.human_baseline.has_value()) {
    j["human_baseline"] = {{"label", config.human_baseline->label},
                           {"successes", config.human_baseline->successes},
                           {"total", config.human_baseline->total}};
  } else {
    j["human_baseline"] = nullptr;
  }
  json l;
  l["mode"] = std::string(llm::mode_name(config.llm.mode));
  l["model"] = config.llm.model;
  l["temperature"] = config.llm.temperature;
  if (config.llm.max_tokens.has_value()) {
    l["max_tokens"] = *config.llm.max_tokens;
  } else {
    l["max_tokens"] = nullptr;
  }
  l["cache_dir"] = config.llm.cache_dir.string();
  l["mock_table"] = config.llm.mock_table.string();
  l["base_url"] = config.llm.base_url;
  l["api_key_env"] = config.llm.api_key_env;
  l["timeout_seconds"] = config.llm.timeout_seconds;
  l["requests_per_minute"] = config.llm.requests_per_minute;
  l["retry"] = {{"max_attempts", config.llm.retry.max_attempts},
                {"initial_backoff_ms", config.llm.retry.initial_backoff_ms},
                {"multiplier", config.llm.retry.multiplier}};
  j["llm"] = l;
  return j.dump();
}

std::string config_digest(const RunConfig& config) {
  return util::sha256_hex(config_canonical_json(config));
}

Runner::Runner(RunConfig config, bool seed_cache)
    : config_(std::move(config)), seed_cache_(seed_cache) {}

void Runner::prepare() {
  if (prepared_) return;
  fs::create_directories(config_.out_dir);
  prompts::write_prompt_files(config_.out_dir / "prompts");
  json run;
  run["config_sha256"] = config_digest(config_);
  run["mode"] = std::string(llm::mode_name(config_.llm.mode));
  run["pipeline"] = std::string(pipeline_name(config_.pipeline));
  run["prompt_version"] = std::string(prompts::kPromptVersion);
  util::write_text_file_atomic(config_.out_dir / "run.json", run.dump(2) + "\n");
  prepared_ = true;
}

const corpus::CorpusManifest& Runner::manifest() {
  if (!manifest_.has_value()) manifest_ = corpus::load_manifest(config_.manifest);
  return *manifest_;
}

const mask::Gazetteer& Runner::gaz() {
  if (!gazetteer_.has_value()) gazetteer_ = mask::Gazetteer::load(config_.gazetteer);
  return *gazetteer_;
}

llm::Completer& Runner::completer() {
  if (!completer_) completer_ = llm::make_completer(config_.llm, seed_cache_);
  return *completer_;
}

std::vector<corpus::Document> Runner::originals() {
  return corpus::load_documents(manifest(), corpus::Variant::original);
}

std::string Runner::masked_text(const corpus::Document& doc) {
  fs::path path = config_.out_dir / "masked" / (doc.doc_id + ".txt");
  if (fs::exists(path)) return util::read_text_file(path);
  return mask::mask_document(doc, gaz()).pair.anonymised.text;
}

int Runner::run_ingest() {
  const auto& m = manifest();
  std::map<corpus::Variant, std::size_t> counts;
  for (const auto& record : m.documents) counts[record.variant] += 1;
  auto docs = originals();  // forces a full read + validation pass
  std::size_t bytes = 0;
  for (const auto& doc : docs) bytes += doc.text.size();

  std::cout << "manifest: " << config_.manifest.string() << "\n";
  std::cout << "entities: " << m.entities.size() << "\n";
  for (const auto& [variant, count] : counts) {
    std::cout << corpus::to_string(variant) << " documents: " << count << "\n";
  }
  std::cout << "original text bytes: " << bytes << "\n";
  return 0;
}

int Runner::run_mask() {
  prepare();
  auto docs = originals();
  const auto& g = gaz();
  fs::path dir = config_.out_dir / "masked";
  fs::create_directories(dir);
  util::parallel_for(docs.size(), config_.jobs, [&](std::size_t i) {
    auto result = mask::mask_document(docs[i], g);
    util::write_text_file_atomic(dir / (docs[i].doc_id + ".txt"),
                                 result.pair.anonymised.text);
    util::write_text_file_atomic(dir / (docs[i].doc_id + ".redactions.json"),
                                 mask::redactions_to_json(result.redactions));
  });
  std::cout << "masked " << docs.size() << " document(s) -> " << dir.string() << "\n";
  return 0;
}

int Runner::run_strip() {
  prepare();
  auto docs = originals();
  fs::path dir = config_.out_dir / "stripped";
  fs::create_directories(dir);
  util::parallel_for(docs.size(), config_.jobs, [&](std::size_t i) {
    util::write_text_file_atomic(dir / (docs[i].doc_id + ".txt"),
                                 align::strip_tags(masked_text(docs[i])));
  });
  std::cout << "stripped " << docs.size() << " document(s) -> " << dir.string() << "\n";
  return 0;
}

int Runner::run_rewrite() {
  prepare();
  auto docs = originals();
  fs::path dir = config_.out_dir / "rewritten";
  fs::create_directories(dir);
  auto settings = request_settings(config_.llm);

  std::vector<std::string> failures;
  std::mutex failures_mutex;
  std::size_t written = 0;
  util::parallel_for(docs.size(), config_.jobs, [&](std::size_t i) {
    fs::path path = dir / (docs[i].doc_id + ".txt");
    if (fs::exists(path)) return;
    try {
      auto rewritten = llmanon::rewrite_anonymise(docs[i], completer(), settings);
      util::write_text_file_atomic(path, rewritten.text);
      std::lock_guard<std::mutex> lock(failures_mutex);
      written += 1;
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failures_mutex);
      failures.push_back(docs[i].doc_id + ": " + e.what());
    }
  });
  std::sort(failures.begin(), failures.end());
  std::cout << "rewrote " << written << " document(s) -> " << dir.string() << "\n";
  print_failures("rewrite", failures);
  return failures.empty() ? 0 : 2;
}

std::vector<corpus::Document> Runner::ablation_targets() {
  auto docs = originals();
  fs::path mask_results = config_.out_dir / "results" / "mask_attack.jsonl";
  if (!fs::exists(mask_results)) return docs;
  std::set<std::string> identified;
  for (const auto& result : read_guess_file(mask_results)) {
    if (result.matched && result.match_rank == 1) identified.insert(result.doc_id);
  }
  std::vector<corpus::Document> kept;
  for (auto& doc : docs) {
    if (identified.count(doc.doc_id) > 0) kept.push_back(std::move(doc));
  }
  return kept;
}

std::map<std::string, llmanon::SensitiveTokenReport> Runner::ensure_token_reports(
    const std::vector<corpus::Document>& docs, std::vector<std::string>& failures) {
  fs::path path = config_.out_dir / "token_reports.jsonl";
  std::map<std::string, llmanon::SensitiveTokenReport> reports;
  if (fs::exists(path)) {
    for (const auto& line : non_empty_lines(path)) {
      auto report = llmanon::report_from_json_line(line);
      reports.emplace(report.doc_id, std::move(report));
    }
  }

  auto settings = request_settings(config_.llm);
  bool appended = false;
  for (const auto& doc : docs) {
    if (reports.count(doc.doc_id) > 0) continue;
    try {
      auto report = llmanon::retrieve_sensitive_tokens(doc, completer(), settings);
      util::append_line(path, llmanon::report_to_json_line(report));
      reports.emplace(doc.doc_id, std::move(report));
      appended = true;
    } catch (const std::exception& e) {
      failures.push_back(doc.doc_id + ": " + e.what());
    }
  }
  if (appended) {
    std::ostringstream out;
    for (const auto& [doc_id, report] : reports) {
      (void)doc_id;
      out << llmanon::report_to_json_line(report) << '\n';
    }
    util::write_text_file_atomic(path, out.str());
  }
  return reports;
}

int Runner::run_tokens() {
  prepare();
  std::vector<std::string> failures;
  auto reports = ensure_token_reports(ablation_targets(), failures);
  std::cout << "token reports for " << reports.size() << " document(s) -> "
            << (config_.out_dir / "token_reports.jsonl").string() << "\n";
  print_failures("tokens", failures);
  return failures.empty() ? 0 : 2;
}

int Runner::run_ablate() {
  prepare();
  auto docs = ablation_targets();
  std::vector<std::string> failures;
  auto reports = ensure_token_reports(docs, failures);
  fs::path dir = config_.out_dir / "ablated";
  fs::create_directories(dir);
  std::size_t written = 0;
  for (const auto& doc : docs) {
    auto it = reports.find(doc.doc_id);
    if (it == reports.end()) continue;
    auto ablated = align::ablate_tokens(doc, it->second.matched);
    util::write_text_file_atomic(dir / (doc.doc_id + ".txt"), ablated.text);
    written += 1;
  }
  std::cout << "ablated " << written << " document(s) -> " << dir.string() << "\n";
  print_failures("ablate", failures);
  return failures.empty() ? 0 : 2;
}

int Runner::run_intrude() {
  prepare();
  if (config_.pipeline == Pipeline::slot_fill) {
    throw PipelineError("pipeline slot_fill has no intrude stage; run the slotfill command");
  }

  std::vector<std::string> failures;
  std::vector<corpus::Document> targets;
  std::string purpose = "intrude";

  if (config_.pipeline == Pipeline::mask_attack) {
    for (auto& doc : originals()) {
      fs::path stripped_path = config_.out_dir / "stripped" / (doc.doc_id + ".txt");
      doc.text = fs::exists(stripped_path) ? util::read_text_file(stripped_path)
                                           : align::strip_tags(masked_text(doc));
      doc.variant = corpus::Variant::masked;
      targets.push_back(std::move(doc));
    }
  } else if (config_.pipeline == Pipeline::rewrite_attack) {
    purpose = "intrude-rewrite";
    auto settings = request_settings(config_.llm);
    fs::path dir = config_.out_dir / "rewritten";
    fs::create_directories(dir);
    for (auto& doc : originals()) {
      fs::path path = dir / (doc.doc_id + ".txt");
      try {
        if (fs::exists(path)) {
          doc.text = util::read_text_file(path);
        } else {
          doc.text = llmanon::rewrite_anonymise(doc, completer(), settings).text;
          util::write_text_file_atomic(path, doc.text);
        }
      } catch (const std::exception& e) {
        failures.push_back(doc.doc_id + ": " + e.what());
        continue;
      }
      doc.variant = corpus::Variant::llm_rewritten;
      targets.push_back(std::move(doc));
    }
  } else {  // ablate_attack
    purpose = "intrude-ablate";
    auto docs = ablation_targets();
    auto reports = ensure_token_reports(docs, failures);
    fs::path dir = config_.out_dir / "ablated";
    fs::create_directories(dir);
    for (auto& doc : docs) {
      auto it = reports.find(doc.doc_id);
      if (it == reports.end()) continue;
      fs::path path = dir / (doc.doc_id + ".txt");
      if (fs::exists(path)) {
        doc.text = util::read_text_file(path);
      } else {
        doc.text = align::ablate_tokens(doc, it->second.matched).text;
        util::write_text_file_atomic(path, doc.text);
      }
      doc.variant = corpus::Variant::ablated;
      targets.push_back(std::move(doc));
    }
  }

  fs::path results_dir = config_.out_dir / "results";
  fs::create_directories(results_dir);
  std::string name(pipeline_name(config_.pipeline));
  fs::path results_path = results_dir / (name + ".jsonl");

  auto existing = read_guess_file(results_path);
  adversary::IntruderOptions options;
  options.settings = request_settings(config_.llm);
  options.second_guess = config_.second_guess;
  options.jobs = config_.jobs;
  options.purpose = purpose;
  for (const auto& result : existing) options.skip_doc_ids.insert(result.doc_id);
  options.on_result = [&](const adversary::GuessResult& result) {
    util::append_line(results_path, adversary::guess_to_json_line(result));
  };

  auto fresh = adversary::run_intruder(targets, completer(), manifest().entities, options);
  auto combined = existing;
  combined.insert(combined.end(), fresh.begin(), fresh.end());
  write_guess_file(results_path, combined);

  auto confusion = adversary::confusion_matrix(combined, manifest().entities);
  util::write_text_file_atomic(results_dir / (name + ".confusion.json"),
                               json(confusion).dump(2) + "\n");

  std::size_t rank1 = 0;
  std::size_t cumulative = 0;
  std::vector<std::string> errored;
  for (const auto& result : combined) {
    if (result.matched && result.match_rank == 1) rank1 += 1;
    if (result.matched) cumulative += 1;
    if (result.error.has_value()) errored.push_back(result.doc_id + ": " + *result.error);
  }
  std::cout << name << ": " << combined.size() << " document(s), rank-1 " << rank1 << "/"
            << combined.size() << ", cumulative " << cumulative << "/" << combined.size()
            << "\n";
  std::cout << "results -> " << results_path.string() << "\n";
  print_failures("intrude (input preparation)", failures);
  print_failures("intrude (adversary)", errored);
  return (failures.empty() && errored.empty()) ? 0 : 2;
}

int Runner::run_slotfill() {
  prepare();
  auto docs = originals();
  fs::path dir = config_.out_dir / "slotfill";
  fs::create_directories(dir);
  adversary::FillOptions options;
  options.settings = request_settings(config_.llm);

  std::vector<std::string> failures;
  std::size_t slots_total = 0;
  std::size_t slots_correct = 0;
  std::size_t documents = 0;
  for (const auto& doc : docs) {
    fs::path path = dir / (doc.doc_id + ".json");
    try {
      if (fs::exists(path)) {
        json recorded = json::parse(util::read_text_file(path));
        slots_total += recorded.at("slots_total").get<std::size_t>();
        slots_correct += recorded.at("slots_correct").get<std::size_t>();
        documents += 1;
        continue;
      }
      corpus::Document tagged = doc;
      tagged.text = masked_text(doc);
      tagged.variant = corpus::Variant::masked;
      auto result = adversary::fill_redactions(tagged, doc, completer(), options);
      util::write_text_file_atomic(path, adversary::slotfill_to_json(result));
      slots_total += static_cast<std::size_t>(result.slots_total);
      slots_correct += static_cast<std::size_t>(result.slots_correct);
      documents += 1;
    } catch (const std::exception& e) {
      failures.push_back(doc.doc_id + ": " + e.what());
    }
  }
  std::cout << "slot fill: " << slots_correct << "/" << slots_total << " slots correct over "
            << documents << " document(s) -> " << dir.string() << "\n";
  print_failures("slotfill", failures);
  return failures.empty() ? 0 : 2;
}

metrics::MetricsReport Runner::assemble_report() {
  metrics::MetricsReport report;
  auto docs = originals();

  auto read_results = [&](const char* name) {
    return read_guess_file(config_.out_dir / "results" / (std::string(name) + ".jsonl"));
  };

  auto mask_results = read_results("mask_attack");
  if (!mask_results.empty()) {
    report.rates = metrics::success_rates(mask_results);
    for (const auto& result : mask_results) {
      if (result.matched && result.match_rank == 1) report.attacked_ok.insert(result.doc_id);
    }
  } else {
    // No attack ran yet: emit explicit zero lines over the corpus size.
    report.rates.overall_rank1 = {"overall rank 1", 0, docs.size()};
    report.rates.overall_cumulative = {"overall rank <= 2", 0, docs.size()};
  }

  auto rewrite_results = read_results("rewrite_attack");
  if (!rewrite_results.empty()) report.rewrite_rates = metrics::success_rates(rewrite_results);

  auto ablate_results = read_results("ablate_attack");
  if (!ablate_results.empty()) {
    report.ablation_rates = metrics::success_rates(ablate_results);
    for (const auto& result : ablate_results) {
      if (result.matched) report.ablation_attack_ok.insert(result.doc_id);
    }
  }

  report.human_baseline = config_.human_baseline;

  std::map<std::string, llmanon::SensitiveTokenReport> reports;
  fs::path reports_path = config_.out_dir / "token_reports.jsonl";
  if (fs::exists(reports_path)) {
    for (const auto& line : non_empty_lines(reports_path)) {
      auto parsed = llmanon::report_from_json_line(line);
      reports.emplace(parsed.doc_id, std::move(parsed));
    }
  }

  std::vector<std::vector<align::AlignedRedaction>> aligned_docs;
  std::vector<align::TokenSet> gpt_sets;
  std::vector<metrics::DocTermRecord> term_docs;

  for (const auto& doc : docs) {
    corpus::Document masked = doc;
    masked.text = masked_text(doc);
    masked.variant = corpus::Variant::masked;
    auto alignment = align::align_pair({doc, masked});

    fs::path stripped_path = config_.out_dir / "stripped" / (doc.doc_id + ".txt");
    corpus::Document stripped = doc;
    stripped.text = fs::exists(stripped_path) ? util::read_text_file(stripped_path)
                                              : align::strip_tags(masked.text);
    stripped.variant = corpus::Variant::masked;
    report.p_anon_masked.push_back(metrics::p_anon(doc, stripped));

    fs::path rewritten_path = config_.out_dir / "rewritten" / (doc.doc_id + ".txt");
    if (fs::exists(rewritten_path)) {
      corpus::Document rewritten = doc;
      rewritten.text = util::read_text_file(rewritten_path);
      rewritten.variant = corpus::Variant::llm_rewritten;
      report.p_anon_rewritten.push_back(metrics::p_anon(doc, rewritten));
    }

    auto it = reports.find(doc.doc_id);
    if (it == reports.end()) continue;

    // The histogram, fractions and term table all compare the two methods, so
    // they only cover documents the LLM actually reported on.
    aligned_docs.push_back(alignment.redactions);
    gpt_sets.push_back(it->second.matched);

    align::TokenSet t_tw;
    t_tw.provenance = align::Provenance::textwash;
    t_tw.items = folded_word_tokens(alignment.redactions);
    if (!t_tw.items.empty() || !it->second.matched.items.empty()) {
      auto pair = metrics::token_fractions(t_tw, it->second.matched);
      pair.doc_id = doc.doc_id;
      report.fractions.push_back(std::move(pair));
    }

    std::set<std::string> exclusive;
    for (const auto& token : it->second.matched.items) {
      if (t_tw.items.count(token) == 0) exclusive.insert(token);
    }
    if (!exclusive.empty()) term_docs.push_back(metrics::make_term_record(doc, exclusive));
  }

  report.histogram = metrics::tag_histogram(aligned_docs, gpt_sets);
  metrics::RuleLemmatizer lemmatizer;
  report.terms = metrics::exclusive_terms(term_docs, lemmatizer, 12);
  return report;
}

void Runner::write_report_files(const metrics::MetricsReport& report) {
  fs::path dir = config_.out_dir / "report";
  fs::create_directories(dir);
  util::write_text_file_atomic(dir / "report.json", metrics::report_to_json(report));
  util::write_text_file_atomic(dir / "report.txt", metrics::render_report_text(report));
  metrics::write_report_csv(report, dir);
}

void Runner::write_svgs(const metrics::MetricsReport& report) {
  fs::path dir = config_.out_dir / "report";
  fs::create_directories(dir);

  std::vector<svg::Bar> bars;
  bars.push_back({"tag rank 1", report.rates.overall_rank1.percent()});
  bars.push_back({"tag rank <= 2", report.rates.overall_cumulative.percent()});
  if (report.human_baseline.has_value()) {
    bars.push_back({"human", report.human_baseline->percent()});
  }
  if (report.rewrite_rates.has_value()) {
    bars.push_back({"rewrite rank 1", report.rewrite_rates->overall_rank1.percent()});
    bars.push_back({"rewrite rank <= 2", report.rewrite_rates->overall_cumulative.percent()});
  }
  if (report.ablation_rates.has_value()) {
    bars.push_back({"ablation rank 1", report.ablation_rates->overall_rank1.percent()});
  }
  svg::write_bar_chart(dir / "success_rates.svg", "identification success (%)", bars);

  auto add_series = [](std::vector<svg::Series>& series, const std::string& name,
                       const std::vector<double>& values) {
    if (!values.empty()) series.push_back({name, metrics::cdf(values)});
  };

  {
    std::vector<double> identified;
    std::vector<double> missed;
    for (const auto& value : report.p_anon_masked) {
      (report.attacked_ok.count(value.doc_id) > 0 ? identified : missed)
          .push_back(value.value());
    }
    std::vector<double> rewritten;
    for (const auto& value : report.p_anon_rewritten) rewritten.push_back(value.value());
    std::vector<svg::Series> series;
    add_series(series, "masked, identified", identified);
    add_series(series, "masked, not identified", missed);
    add_series(series, "rewritten", rewritten);
    if (!series.empty()) svg::write_cdf_chart(dir / "p_anon_cdf.svg", "P_anon CDF", series);
  }

  {
    const auto& split = report.fraction_split();
    std::vector<double> identified;
    std::vector<double> missed;
    for (const auto& pair : report.fractions) {
      (split.count(pair.doc_id) > 0 ? identified : missed).push_back(pair.f_gpt());
    }
    std::vector<svg::Series> series;
    add_series(series, "identified", identified);
    add_series(series, "not identified", missed);
    if (!series.empty()) {
      svg::write_cdf_chart(dir / "fractions_cdf.svg", "LLM-exclusive token fraction CDF",
                           series);
    }
  }

  {
    std::vector<std::pair<mask::TagCategory, metrics::TagHistogramEntry>> entries(
        report.histogram.begin(), report.histogram.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.second.textwash != b.second.textwash) return a.second.textwash > b.second.textwash;
      return a.first < b.first;
    });
    std::vector<svg::Bar> tw_bars;
    std::vector<svg::Bar> gpt_bars;
    for (const auto& [category, entry] : entries) {
      std::string label(mask::tag_name(category));
      tw_bars.push_back({label, static_cast<double>(entry.textwash)});
      gpt_bars.push_back({label, static_cast<double>(entry.gpt)});
    }
    if (!tw_bars.empty()) {
      svg::write_bar_chart(dir / "tag_histogram_tagger.svg", "redacted instances by tag",
                           tw_bars);
      svg::write_bar_chart(dir / "tag_histogram_llm.svg",
                           "instances fully covered by LLM tokens", gpt_bars);
    }
  }
}

int Runner::run_evaluate() {
  prepare();
  write_report_files(assemble_report());
  std::cout << "report written to " << (config_.out_dir / "report").string() << "\n";
  return 0;
}

int Runner::run_report() {
  prepare();
  auto report = assemble_report();
  write_report_files(report);
  std::cout << metrics::render_report_text(report);
  if (config_.svg) write_svgs(report);
  return 0;
}

}  // namespace anonrisk::pipeline
