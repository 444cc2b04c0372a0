#include "anonrisk/llmanon.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "json.hpp"

#include "anonrisk/prompts.hpp"
#include "anonrisk/util.hpp"

namespace anonrisk::llmanon {

namespace {

// Locates the first balanced [...] block, honouring string literals and
// escapes, so prose or code fences around the array do not matter.
std::optional<std::string> first_array_block(const std::string& raw) {
  std::size_t start = raw.find('[');
  while (start != std::string::npos) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '[') {
        ++depth;
      } else if (c == ']') {
        --depth;
        if (depth == 0) return raw.substr(start, i - start + 1);
      }
    }
    start = raw.find('[', start + 1);
  }
  return std::nullopt;
}

std::vector<std::string> quoted_fragments(const std::string& raw) {
  std::vector<std::string> out;
  bool in_string = false;
  bool escaped = false;
  std::string current;
  for (char c : raw) {
    if (!in_string) {
      if (c == '"') {
        in_string = true;
        current.clear();
      }
      continue;
    }
    if (escaped) {
      current += c;
      escaped = false;
    } else if (c == '\\') {
      escaped = true;
    } else if (c == '"') {
      in_string = false;
      if (!util::trim(current).empty()) out.push_back(util::trim(current));
    } else {
      current += c;
    }
  }
  return out;
}

std::vector<std::string> dedupe_case_insensitive(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(util::case_fold(item)).second) out.push_back(item);
  }
  return out;
}

}  // namespace

std::vector<std::string> extract_json_array(const std::string& raw) {
  if (auto block = first_array_block(raw)) {
    nlohmann::json parsed = nlohmann::json::parse(*block, nullptr, false);
    if (parsed.is_array()) {
      std::vector<std::string> items;
      for (const auto& element : parsed) {
        if (element.is_string()) {
          items.push_back(element.get<std::string>());
        } else if (!element.is_null()) {
          items.push_back(element.dump());
        }
      }
      return dedupe_case_insensitive(items);
    }
  }
  std::vector<std::string> repaired = quoted_fragments(raw);
  if (!repaired.empty()) return dedupe_case_insensitive(repaired);
  if (util::trim(raw).empty() || util::trim(raw) == "[]") return {};
  throw UnparseableResponse("no JSON array or quoted fragments in answer: " + raw);
}

corpus::Document rewrite_anonymise(const corpus::Document& doc, llm::Completer& completer,
                                   const llm::RequestSettings& settings) {
  llm::ChatRequest request = llm::make_request(
      settings, {{llm::Role::system, std::string(prompts::kAssistantSystem)},
                 {llm::Role::user, std::string(prompts::kRewriteUserPrefix) + doc.text}});
  llm::ChatResponse response = completer.complete(request, "rewrite/" + doc.doc_id);
  std::string body = util::trim(response.content);
  if (body.empty()) throw EmptyRewrite("empty rewrite for " + doc.doc_id);

  corpus::Document out;
  out.doc_id = doc.doc_id;
  out.entity_id = doc.entity_id;
  out.variant = corpus::Variant::llm_rewritten;
  out.text = std::move(body);
  return out;
}

SensitiveTokenReport retrieve_sensitive_tokens(const corpus::Document& doc,
                                               llm::Completer& completer,
                                               const llm::RequestSettings& settings) {
  llm::ChatRequest request = llm::make_request(
      settings, {{llm::Role::system, std::string(prompts::kAssistantSystem)},
                 {llm::Role::user, std::string(prompts::kTokensUserPrefix) + doc.text}});
  llm::ChatResponse response = completer.complete(request, "tokens/" + doc.doc_id);

  SensitiveTokenReport report;
  report.doc_id = doc.doc_id;
  report.raw_response = response.content;
  report.parsed_excerpts = extract_json_array(response.content);

  align::MatchResult matched = align::match_excerpts(doc, report.parsed_excerpts);
  report.matched = std::move(matched.matched);
  report.rejects = std::move(matched.rejects);
  return report;
}

AblationOutcome anonymise_by_ablation(const corpus::Document& doc, llm::Completer& completer,
                                      const llm::RequestSettings& settings) {
  AblationOutcome outcome;
  outcome.report = retrieve_sensitive_tokens(doc, completer, settings);
  outcome.ablated = align::ablate_tokens(doc, outcome.report.matched);
  return outcome;
}

// ---------------------------------------------------------------------------
// serialisation

std::string report_to_json_line(const SensitiveTokenReport& report) {
  nlohmann::json doc;
  doc["doc_id"] = report.doc_id;
  doc["raw_response"] = report.raw_response;
  doc["parsed_excerpts"] = report.parsed_excerpts;
  doc["matched"] = std::vector<std::string>(report.matched.items.begin(),
                                            report.matched.items.end());
  doc["rejects"] = report.rejects;
  return doc.dump();
}

SensitiveTokenReport report_from_json_line(const std::string& line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw LlmAnonError(std::string("bad token-report line: ") + e.what());
  }
  SensitiveTokenReport report;
  report.doc_id = doc.at("doc_id").get<std::string>();
  report.raw_response = doc.at("raw_response").get<std::string>();
  for (const auto& item : doc.at("parsed_excerpts")) {
    report.parsed_excerpts.push_back(item.get<std::string>());
  }
  report.matched.provenance = align::Provenance::gpt;
  for (const auto& item : doc.at("matched")) {
    report.matched.items.insert(item.get<std::string>());
  }
  for (const auto& item : doc.at("rejects")) {
    report.rejects.push_back(item.get<std::string>());
  }
  return report;
}

}  // namespace anonrisk::llmanon
