#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "anonrisk/corpus.hpp"
#include "anonrisk/mask.hpp"

namespace anonrisk::align {

enum class TokenKind { word, number, punctuation };

struct Token {
  std::string surface;
  mask::Span span;
  TokenKind kind = TokenKind::word;
};

// Whitespace-splitting tokeniser with punctuation detached as single tokens.
// Interior apostrophes and hyphens keep contractions and hyphenated words
// whole ("don't", "well-known"); trailing ones split off. Tag tokens such as
// PERSON_FIRSTNAME_1 stay whole because '_' is a word character.
std::vector<Token> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

// True when the surface matches the tag grammar: a category name with an
// optional _k suffix (bare form for PRONOUN and friends).
bool is_tag_token(std::string_view surface);

struct ParsedTag {
  mask::TagCategory category;
  std::optional<int> instance;
};

std::optional<ParsedTag> parse_tag(std::string_view surface);

// Removes every tag token and collapses the surrounding whitespace to single
// spaces. Idempotent.
std::string strip_tags(const std::string& anon_text);

enum class Provenance { textwash, gpt };

// Case-folded token surfaces with their origin.
struct TokenSet {
  std::set<std::string> items;
  Provenance provenance = Provenance::textwash;
};

struct AlignedRedaction {
  std::vector<Token> original_tokens;  // non-empty, spans refer to the original text
  mask::TagCategory tag = mask::TagCategory::other_identifying_attribute;
  std::optional<int> instance;
  bool ambiguous = false;  // region was split by position order, not evidence
};

struct AlignmentResult {
  std::vector<AlignedRedaction> redactions;
  // Replaced or inserted regions that could not be paired with a tag; never
  // silently dropped.
  std::vector<std::string> unmapped;
  bool ambiguous = false;  // any redaction flagged
};

// Recovers which original tokens each tag replaced, anchoring on tokens that
// are identical in both texts (longest common subsequence) and splitting the
// replaced regions between tag tokens. Regions whose split is not determined
// by anchors or by instance-consistency evidence are resolved by position
// order and flagged.
AlignmentResult align_pair(const corpus::DocumentPair& pair);

// Shared machinery for pairing tag tokens in `tagged_tokens` with the token
// runs of `value_tokens` that fill them. Used by align_pair (value = original
// text) and by slot-fill scoring (value = the model's filled text).
struct TagSlot {
  std::size_t tag_index = 0;  // index into tagged_tokens
  mask::TagCategory tag = mask::TagCategory::other_identifying_attribute;
  std::optional<int> instance;
  std::vector<Token> value_tokens;
  bool ambiguous = false;
};

struct TaggedAlignment {
  std::vector<TagSlot> slots;
  std::vector<std::string> unmapped;
  bool ambiguous = false;
};

TaggedAlignment align_tagged(const std::vector<Token>& value_tokens,
                             const std::vector<Token>& tagged_tokens);

struct MatchResult {
  TokenSet matched;                  // provenance = gpt
  std::vector<std::string> rejects;  // excerpts with zero matching tokens
};

// Token-level, case-insensitive membership of excerpt words in the original
// text. Punctuation tokens never join the set.
MatchResult match_excerpts(const corpus::Document& original,
                           const std::vector<std::string>& excerpts);

// Deletes every token whose case-folded surface is in `sensitive`; remaining
// tokens are re-joined with single spaces, keeping punctuation attached to its
// surviving left neighbour.
corpus::Document ablate_tokens(const corpus::Document& original, const TokenSet& sensitive);

}  // namespace anonrisk::align
