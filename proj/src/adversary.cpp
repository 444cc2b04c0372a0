#include "anonrisk/adversary.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "json.hpp"

#include "anonrisk/align.hpp"
#include "anonrisk/prompts.hpp"
#include "anonrisk/util.hpp"

namespace anonrisk::adversary {

namespace {

void apply_settings(llm::ChatRequest& request, const llm::RequestSettings& settings) {
  request.model = settings.model;
  request.temperature = settings.temperature;
  request.max_tokens = settings.max_tokens;
}

}  // namespace

llm::ChatRequest build_intruder_prompt(const std::string& anon_text,
                                       const llm::RequestSettings& settings) {
  llm::ChatRequest request;
  apply_settings(request, settings);
  request.messages.push_back({llm::Role::system, std::string(prompts::kIntruderSystem)});
  request.messages.push_back(
      {llm::Role::user, std::string(prompts::kIntruderUserPrefix) + anon_text});
  return request;
}

llm::ChatRequest build_second_guess_request(const llm::ChatRequest& first_request,
                                            const std::string& first_answer,
                                            const llm::RequestSettings& settings) {
  llm::ChatRequest request = first_request;
  apply_settings(request, settings);
  request.messages.push_back({llm::Role::assistant, first_answer});
  request.messages.push_back({llm::Role::user, std::string(prompts::kSecondGuessUser)});
  return request;
}

// ---------------------------------------------------------------------------
// name handling

namespace {

// Returns the content of the first span between matching quote characters,
// if any. Recognises straight double/single quotes and curly ones.
std::optional<std::string> first_quoted_span(const std::string& text) {
  struct QuotePair {
    std::string_view open;
    std::string_view close;
  };
  static const QuotePair kPairs[] = {
      {"\"", "\""}, {"“", "”"}, {"‘", "’"}, {"'", "'"}};
  std::size_t best_open = std::string::npos;
  std::optional<std::string> best;
  for (const auto& pair : kPairs) {
    std::size_t open = text.find(pair.open);
    if (open == std::string::npos) continue;
    std::size_t close = text.find(pair.close, open + pair.open.size());
    if (close == std::string::npos) continue;
    if (open < best_open) {
      best_open = open;
      best = text.substr(open + pair.open.size(), close - open - pair.open.size());
    }
  }
  return best;
}

std::string strip_lead_in(std::string s) {
  static const char* kLeadIns[] = {
      "the person is",   "the person being referred to is",
      "the celebrity is", "the person described is",
      "the answer is",    "this is",
      "it is",            "that would be",
  };
  std::string folded = util::case_fold(s);
  for (const char* lead : kLeadIns) {
    std::string_view lv(lead);
    if (folded.size() > lv.size() && folded.compare(0, lv.size(), lv) == 0 &&
        (folded[lv.size()] == ' ' || folded[lv.size()] == ':')) {
      return util::trim(s.substr(lv.size() + 1));
    }
  }
  return s;
}

std::string strip_outer_noise(std::string s) {
  // surrounding quotes and trailing sentence punctuation
  auto drop_while_back = [&s](auto pred) {
    while (!s.empty() && pred(s.back())) s.pop_back();
  };
  s = util::trim(s);
  drop_while_back([](char c) { return c == '.' || c == '!' || c == ','; });
  while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.erase(s.begin());
  drop_while_back([](char c) { return c == '"' || c == '\''; });
  return util::trim(s);
}

}  // namespace

std::string extract_name(const std::string& response_content) {
  std::string candidate;
  if (auto quoted = first_quoted_span(response_content)) {
    candidate = *quoted;
  } else {
    candidate = response_content;
  }
  candidate = util::collapse_whitespace(candidate);
  candidate = strip_lead_in(std::move(candidate));
  candidate = strip_outer_noise(std::move(candidate));
  if (candidate.empty()) {
    throw EmptyGuess("no name found in answer: " + response_content);
  }
  return candidate;
}

std::string normalise_name(const std::string& name) {
  std::string folded = util::fold_accents(name);
  std::string cleaned;
  cleaned.reserve(folded.size());
  for (char c : folded) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      cleaned += static_cast<char>(std::tolower(uc));
    } else if (c == ' ' || c == '-' || c == '_' || c == '\t' || c == '\n') {
      cleaned += ' ';
    }
    // periods, apostrophes, commas vanish entirely: "J.K." -> "jk"
  }
  cleaned = util::collapse_whitespace(cleaned);

  static const std::set<std::string> kHonorifics = {
      "sir", "dame", "dr", "mr", "mrs", "ms", "lord", "lady", "the"};
  bool stripped = true;
  while (stripped) {
    stripped = false;
    auto space = cleaned.find(' ');
    if (space == std::string::npos) break;
    if (kHonorifics.count(cleaned.substr(0, space)) > 0) {
      cleaned = cleaned.substr(space + 1);
      stripped = true;
    }
  }
  return cleaned;
}

bool match_guess(const std::string& guess, const corpus::EntityProfile& profile) {
  std::string norm = normalise_name(guess);
  if (norm.empty()) return false;
  for (const auto& alias : profile.aliases) {
    if (normalise_name(alias) == norm) return true;
  }
  return false;
}

std::optional<std::string> resolve_guess(const std::string& guess,
                                         const std::vector<corpus::EntityProfile>& profiles) {
  for (const auto& profile : profiles) {
    if (match_guess(guess, profile)) return profile.entity_id;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// batch intruder run

std::vector<GuessResult> run_intruder(const std::vector<corpus::Document>& docs,
                                      llm::Completer& completer,
                                      const std::vector<corpus::EntityProfile>& profiles,
                                      const IntruderOptions& options) {
  std::vector<const corpus::Document*> todo;
  for (const auto& doc : docs) {
    if (options.skip_doc_ids.count(doc.doc_id) == 0) todo.push_back(&doc);
  }

  std::vector<GuessResult> results(todo.size());
  std::mutex callback_mutex;

  util::parallel_for(todo.size(), options.jobs, [&](std::size_t i) {
    const corpus::Document& doc = *todo[i];
    GuessResult result;
    result.doc_id = doc.doc_id;
    result.gold_entity = doc.entity_id;
    try {
      llm::ChatRequest first = build_intruder_prompt(doc.text, options.settings);
      llm::ChatResponse answer1 =
          completer.complete(first, options.purpose + "1/" + doc.doc_id);
      result.guess_1 = extract_name(answer1.content);
      result.guess_1_entity = resolve_guess(result.guess_1, profiles);
      if (result.guess_1_entity == doc.entity_id) {
        result.matched = true;
        result.match_rank = 1;
      } else if (options.second_guess) {
        llm::ChatRequest second =
            build_second_guess_request(first, answer1.content, options.settings);
        llm::ChatResponse answer2 =
            completer.complete(second, options.purpose + "2/" + doc.doc_id);
        result.guess_2 = extract_name(answer2.content);
        result.guess_2_entity = resolve_guess(*result.guess_2, profiles);
        if (result.guess_2_entity == doc.entity_id) {
          result.matched = true;
          result.match_rank = 2;
        }
      }
    } catch (const std::exception& e) {
      result.error = e.what();
      result.matched = false;
      result.match_rank = 0;
    }
    {
      std::lock_guard<std::mutex> lock(callback_mutex);
      if (options.on_result) options.on_result(result);
    }
    results[i] = std::move(result);
  });
  return results;
}

ConfusionMatrix confusion_matrix(const std::vector<GuessResult>& results,
                                 const std::vector<corpus::EntityProfile>& profiles) {
  ConfusionMatrix matrix;
  for (const auto& profile : profiles) {
    matrix[profile.entity_id];  // every gold entity gets a row, even if empty
  }
  for (const auto& result : results) {
    // The matrix reads off first guesses: rank-2 recoveries still count as a
    // first-round confusion.
    std::string label;
    if (result.guess_1_entity.has_value()) {
      label = *result.guess_1_entity;
    } else if (!result.guess_1.empty()) {
      label = result.guess_1;
    } else {
      label = "(no guess)";
    }
    matrix[result.gold_entity][label] += 1;
  }
  return matrix;
}

// ---------------------------------------------------------------------------
// serialisation

std::string guess_to_json_line(const GuessResult& result) {
  nlohmann::json doc;
  doc["doc_id"] = result.doc_id;
  doc["gold_entity"] = result.gold_entity;
  doc["guess_1"] = result.guess_1;
  doc["guess_1_entity"] =
      result.guess_1_entity.has_value() ? nlohmann::json(*result.guess_1_entity) : nullptr;
  doc["guess_2"] = result.guess_2.has_value() ? nlohmann::json(*result.guess_2) : nullptr;
  doc["guess_2_entity"] =
      result.guess_2_entity.has_value() ? nlohmann::json(*result.guess_2_entity) : nullptr;
  doc["matched"] = result.matched;
  doc["match_rank"] = result.match_rank;
  doc["error"] = result.error.has_value() ? nlohmann::json(*result.error) : nullptr;
  return doc.dump();
}

GuessResult guess_from_json_line(const std::string& line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw AdversaryError(std::string("bad result line: ") + e.what());
  }
  GuessResult result;
  result.doc_id = doc.at("doc_id").get<std::string>();
  result.gold_entity = doc.at("gold_entity").get<std::string>();
  result.guess_1 = doc.at("guess_1").get<std::string>();
  if (doc.contains("guess_1_entity") && !doc.at("guess_1_entity").is_null()) {
    result.guess_1_entity = doc.at("guess_1_entity").get<std::string>();
  }
  if (doc.contains("guess_2") && !doc.at("guess_2").is_null()) {
    result.guess_2 = doc.at("guess_2").get<std::string>();
  }
  if (doc.contains("guess_2_entity") && !doc.at("guess_2_entity").is_null()) {
    result.guess_2_entity = doc.at("guess_2_entity").get<std::string>();
  }
  result.matched = doc.at("matched").get<bool>();
  result.match_rank = doc.at("match_rank").get<int>();
  if (doc.contains("error") && !doc.at("error").is_null()) {
    result.error = doc.at("error").get<std::string>();
  }
  return result;
}

std::string_view verdict_name(SlotVerdict verdict) {
  switch (verdict) {
    case SlotVerdict::correct: return "correct";
    case SlotVerdict::incorrect: return "incorrect";
    case SlotVerdict::unverifiable: return "unverifiable";
  }
  throw AdversaryError("unknown verdict");
}

std::string slotfill_to_json(const SlotFillResult& result) {
  nlohmann::json doc;
  doc["doc_id"] = result.doc_id;
  doc["filled_text"] = result.filled_text;
  doc["slots_total"] = result.slots_total;
  doc["slots_correct"] = result.slots_correct;
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& judgement : result.verdicts) {
    verdicts.push_back({{"tag", judgement.tag},
                        {"expected_surface", judgement.expected_surface},
                        {"produced_surface", judgement.produced_surface},
                        {"verdict", std::string(verdict_name(judgement.verdict))}});
  }
  doc["verdicts"] = std::move(verdicts);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// slot filling

namespace {

std::string join_surfaces(const std::vector<align::Token>& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty() && tok.kind != align::TokenKind::punctuation) out += ' ';
    out += tok.surface;
  }
  return out;
}

std::string comparable(const std::string& surface) {
  // Accent- and case-insensitive, punctuation ignored.
  std::string folded = util::fold_accents(surface);
  std::string out;
  for (char c : folded) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      out += static_cast<char>(std::tolower(uc));
    } else if (std::isspace(uc)) {
      out += ' ';
    }
  }
  return util::collapse_whitespace(out);
}

}  // namespace

SlotFillResult fill_redactions(const corpus::Document& tagged,
                               const std::optional<corpus::Document>& original,
                               llm::Completer& completer, const FillOptions& options) {
  SlotFillResult result;
  result.doc_id = tagged.doc_id;

  const std::vector<align::Token> tagged_tokens = align::tokenize(tagged.text);
  std::vector<std::size_t> tag_positions;
  for (std::size_t i = 0; i < tagged_tokens.size(); ++i) {
    if (align::is_tag_token(tagged_tokens[i].surface)) tag_positions.push_back(i);
  }
  result.slots_total = static_cast<int>(tag_positions.size());
  if (result.slots_total == 0) {
    result.filled_text = tagged.text;
    return result;
  }

  llm::ChatRequest request;
  apply_settings(request, options.settings);
  request.messages.push_back({llm::Role::system, std::string(prompts::kSlotFillSystem)});
  request.messages.push_back({llm::Role::user, tagged.text});
  llm::ChatResponse response =
      completer.complete(request, options.purpose + "/" + tagged.doc_id);
  result.filled_text = response.content;
  if (util::trim(result.filled_text).empty()) {
    throw MalformedFill("empty slot-fill answer for " + tagged.doc_id);
  }

  align::TaggedAlignment produced =
      align::align_tagged(align::tokenize(result.filled_text), tagged_tokens);
  std::map<std::size_t, std::string> produced_by_tag;
  for (const auto& slot : produced.slots) {
    produced_by_tag[slot.tag_index] = join_surfaces(slot.value_tokens);
  }

  std::map<std::size_t, std::string> expected_by_tag;
  if (original.has_value()) {
    align::TaggedAlignment expected =
        align::align_tagged(align::tokenize(original->text), tagged_tokens);
    for (const auto& slot : expected.slots) {
      expected_by_tag[slot.tag_index] = join_surfaces(slot.value_tokens);
    }
  }

  for (std::size_t position : tag_positions) {
    SlotJudgement judgement;
    judgement.tag = tagged_tokens[position].surface;
    auto produced_it = produced_by_tag.find(position);
    if (produced_it != produced_by_tag.end()) judgement.produced_surface = produced_it->second;
    auto expected_it = expected_by_tag.find(position);
    if (expected_it != expected_by_tag.end()) judgement.expected_surface = expected_it->second;

    if (!original.has_value() || expected_it == expected_by_tag.end() ||
        produced_it == produced_by_tag.end()) {
      judgement.verdict = SlotVerdict::unverifiable;
    } else if (!comparable(judgement.produced_surface).empty() &&
               comparable(judgement.produced_surface) ==
                   comparable(judgement.expected_surface)) {
      judgement.verdict = SlotVerdict::correct;
      result.slots_correct += 1;
    } else {
      judgement.verdict = SlotVerdict::incorrect;
    }
    result.verdicts.push_back(std::move(judgement));
  }
  return result;
}

}  // namespace anonrisk::adversary
