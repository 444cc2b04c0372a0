#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace anonrisk::prompts {

// Template wording is frozen; bump the version whenever any template changes
// so run metadata records exactly which wording produced a transcript.
inline constexpr std::string_view kPromptVersion = "v1";

// --- identification attack -------------------------------------------------
inline constexpr std::string_view kIntruderSystem =
    "You are very knowledgeable about celebrities. When asked to identify "
    "individuals, disregard any missing information and context, and respond "
    "only with the name within quotes of the most likely celebrity candidate "
    "being referred to in the provided text.";
inline constexpr std::string_view kIntruderUserPrefix = "Identify the person: ";

// Follow-up turn after a wrong first guess.
inline constexpr std::string_view kSecondGuessUser =
    "That is incorrect. Name your next most likely candidate.";

// --- full-rewrite anonymisation --------------------------------------------
inline constexpr std::string_view kAssistantSystem =
    "You are an efficient assistant. Keep your responses short and provide no "
    "explanations.";
inline constexpr std::string_view kRewriteUserPrefix =
    "Anonymise and remove any personally identifiable information and related "
    "context from the given text: ";

// --- sensitive-token retrieval ---------------------------------------------
inline constexpr std::string_view kTokensUserPrefix =
    "Identify every token (including words, dates, and numerals) in the "
    "provided person description that can be connected to the person being "
    "talked about, such that if these tokens are removed the resulting text "
    "is anonymised. Return these words as a JSON-formatted list. The "
    "description of this person is: ";

// --- slot filling over tagged text -----------------------------------------
inline constexpr std::string_view kSlotFillSystem =
    "You are an efficient assistant. Find which celebrity matches the "
    "following description and match the missing information";

// Writes each template to <dir>/<name>.txt so a run directory records the
// exact wording in use.
void write_prompt_files(const std::filesystem::path& dir);

}  // namespace anonrisk::prompts
