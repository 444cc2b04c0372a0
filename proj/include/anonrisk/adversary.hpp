#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "anonrisk/corpus.hpp"
#include "anonrisk/llm.hpp"

namespace anonrisk::adversary {

struct AdversaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The model's answer contained no usable name.
struct EmptyGuess : AdversaryError {
  using AdversaryError::AdversaryError;
};

struct MalformedFill : AdversaryError {
  using AdversaryError::AdversaryError;
};

struct GuessResult {
  std::string doc_id;
  std::string gold_entity;
  std::string guess_1;  // extracted name, verbatim
  std::optional<std::string> guess_1_entity;
  std::optional<std::string> guess_2;
  std::optional<std::string> guess_2_entity;
  bool matched = false;
  int match_rank = 0;  // 0 = never matched, else the round that matched
  std::optional<std::string> error;  // per-document failure, batch continues
};

std::string guess_to_json_line(const GuessResult& result);
GuessResult guess_from_json_line(const std::string& line);

enum class SlotVerdict { correct, incorrect, unverifiable };

std::string_view verdict_name(SlotVerdict verdict);

struct SlotJudgement {
  std::string tag;  // rendered tag token, e.g. "ORGANIZATION_1"
  std::string expected_surface;
  std::string produced_surface;
  SlotVerdict verdict = SlotVerdict::unverifiable;
};

struct SlotFillResult {
  std::string doc_id;
  std::string filled_text;
  int slots_total = 0;
  int slots_correct = 0;
  std::vector<SlotJudgement> verdicts;
};

std::string slotfill_to_json(const SlotFillResult& result);

// Two messages: the fixed identification system prompt and
// "Identify the person: <text>". The text should already be tag-stripped when
// it came from the tag masker.
llm::ChatRequest build_intruder_prompt(const std::string& anon_text,
                                       const llm::RequestSettings& settings);

// Extends a failed exchange with the model's own answer and the fixed
// follow-up asking for the next most likely candidate.
llm::ChatRequest build_second_guess_request(const llm::ChatRequest& first_request,
                                            const std::string& first_answer,
                                            const llm::RequestSettings& settings);

// Pulls the name out of a chat answer: first quoted span when present, else
// the whole content; strips lead-ins ("The person is ..."), quotes and final
// punctuation. Throws EmptyGuess when nothing remains.
std::string extract_name(const std::string& response_content);

// Case-, accent-, punctuation- and honorific-insensitive form used for all
// guess comparisons ("J.K. Rowling" == "jk rowling" == "Dame J.K. Rowling").
std::string normalise_name(const std::string& name);

bool match_guess(const std::string& guess, const corpus::EntityProfile& profile);

// First entity whose alias set matches the guess, in manifest order.
std::optional<std::string> resolve_guess(const std::string& guess,
                                         const std::vector<corpus::EntityProfile>& profiles);

struct IntruderOptions {
  llm::RequestSettings settings;
  bool second_guess = true;
  int jobs = 1;
  // Prefix for transcript key hints; round and doc id are appended as
  // "<purpose>1/<doc_id>".
  std::string purpose = "intrude";
  // Documents already answered in a previous run; they are skipped entirely.
  std::set<std::string> skip_doc_ids;
  // Called once per finished document, serialised, in completion order.
  std::function<void(const GuessResult&)> on_result;
};

// One result per document (minus skips), in input order. Per-document
// failures are recorded on the result, never thrown.
std::vector<GuessResult> run_intruder(const std::vector<corpus::Document>& docs,
                                      llm::Completer& completer,
                                      const std::vector<corpus::EntityProfile>& profiles,
                                      const IntruderOptions& options);

// gold entity id -> guessed label -> count. Labels are entity ids when the
// first guess resolves to a corpus entity, otherwise the verbatim guess.
using ConfusionMatrix = std::map<std::string, std::map<std::string, int>>;

ConfusionMatrix confusion_matrix(const std::vector<GuessResult>& results,
                                 const std::vector<corpus::EntityProfile>& profiles);

struct FillOptions {
  llm::RequestSettings settings;
  std::string purpose = "slotfill";
};

// Asks the model to reconstruct the redacted values of a tagged text, then
// aligns the filled answer back onto the tags. With the original document
// available each slot is judged correct/incorrect; otherwise unverifiable.
SlotFillResult fill_redactions(const corpus::Document& tagged,
                               const std::optional<corpus::Document>& original,
                               llm::Completer& completer, const FillOptions& options);

}  // namespace anonrisk::adversary
