#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "anonrisk/align.hpp"
#include "anonrisk/corpus.hpp"
#include "anonrisk/mask.hpp"
#include "anonrisk/metrics.hpp"

// Randomised inputs with their expected outcomes tracked during construction,
// so properties can be checked against a model that never ran the code under
// test. All generators are deterministic for a given engine state.
namespace testsupport {

// A document whose redactions are known by construction: gazetteer terms are
// fresh nonsense words, every taggable item is separated from the next by at
// least one plain filler word, and nothing collides with the closed-class
// vocabularies (months, street suffixes, pronouns, meridiems).
struct MaskCase {
  anonrisk::corpus::Document doc;
  anonrisk::mask::Gazetteer gazetteer;
  std::vector<anonrisk::mask::Redaction> expected;          // span order
  std::vector<std::vector<std::string>> expected_tokens;    // per redaction
};

MaskCase random_mask_case(std::mt19937& rng);

// Text mixing real tag tokens, near-miss decoys, words, numbers and attached
// punctuation, with the exact post-strip rendering tracked alongside.
struct TaggedCase {
  std::string text;
  std::string expected_stripped;
  std::size_t tag_count = 0;
};

TaggedCase random_tagged_case(std::mt19937& rng);

std::pair<anonrisk::align::TokenSet, anonrisk::align::TokenSet> random_token_sets(
    std::mt19937& rng);

std::vector<anonrisk::metrics::DocTermRecord> random_term_records(std::mt19937& rng);

std::vector<double> random_values(std::mt19937& rng, std::size_t max_size = 50);

// Plain prose with punctuation shapes whose token count the byte-scan oracle
// understands (ASCII plus accented word characters).
std::string random_plain_text(std::mt19937& rng);

}  // namespace testsupport
