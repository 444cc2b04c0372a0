#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "anonrisk/align.hpp"
#include "anonrisk/corpus.hpp"
#include "anonrisk/llm.hpp"

namespace anonrisk::llmanon {

struct LlmAnonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyRewrite : LlmAnonError {
  using LlmAnonError::LlmAnonError;
};

// Both direct JSON parsing and quoted-fragment repair failed.
struct UnparseableResponse : LlmAnonError {
  using LlmAnonError::LlmAnonError;
};

struct SensitiveTokenReport {
  std::string doc_id;
  std::string raw_response;
  std::vector<std::string> parsed_excerpts;  // deduplicated case-insensitively
  align::TokenSet matched;                   // provenance = gpt
  std::vector<std::string> rejects;          // excerpts absent from the original
};

std::string report_to_json_line(const SensitiveTokenReport& report);
SensitiveTokenReport report_from_json_line(const std::string& line);

// Pulls the first well-formed JSON array out of a chat answer (fenced code
// blocks and surrounding prose are fine). Falls back to collecting quoted
// fragments; throws UnparseableResponse when neither yields anything usable.
std::vector<std::string> extract_json_array(const std::string& raw);

// Whole-text zero-shot anonymisation: the model's answer replaces the body.
corpus::Document rewrite_anonymise(const corpus::Document& doc, llm::Completer& completer,
                                   const llm::RequestSettings& settings);

// Asks the model which tokens identify the person, then grounds the answer in
// the original text via token matching.
SensitiveTokenReport retrieve_sensitive_tokens(const corpus::Document& doc,
                                               llm::Completer& completer,
                                               const llm::RequestSettings& settings);

struct AblationOutcome {
  corpus::Document ablated;
  SensitiveTokenReport report;
};

// retrieve_sensitive_tokens followed by deletion of the matched tokens.
AblationOutcome anonymise_by_ablation(const corpus::Document& doc, llm::Completer& completer,
                                      const llm::RequestSettings& settings);

}  // namespace anonrisk::llmanon
