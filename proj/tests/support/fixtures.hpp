#pragma once

#include <set>
#include <string>
#include <vector>

#include "anonrisk/align.hpp"
#include "anonrisk/corpus.hpp"
#include "anonrisk/llm.hpp"
#include "anonrisk/metrics.hpp"

// Hand-frozen scenario data with every expected count written down explicitly.
// The fixtures know their own answers; tests compare the library against them
// without recomputing anything.
namespace testsupport {

// A 20-celebrity corpus of 1080 documents with a scripted oracle covering the
// identification attack on masked, rewritten and ablated text. Membership in
// the expectation sets is decided by the construction loops alone.
struct ReplayFixture {
  std::vector<anonrisk::corpus::EntityProfile> profiles;
  std::vector<anonrisk::corpus::Document> docs;      // 1080
  std::vector<anonrisk::corpus::Document> attacked;  // expected first-round hits, 784
  anonrisk::llm::MockOracle oracle;

  std::set<std::string> rank1_ids;         // 784
  std::set<std::string> rank2_ids;         // 77, matched only on the second guess
  std::set<std::string> rewrite_rank1_ids; // 729
  std::set<std::string> rewrite_rank2_ids; // 9
  std::set<std::string> ablation_ok_ids;   // 459, still identified after ablation
};

ReplayFixture make_replay_fixture();

// One synthetic document per tagger instance, with the per-category coverage
// counts fixed in the construction table.
struct HistogramFixture {
  std::vector<std::vector<anonrisk::align::AlignedRedaction>> aligned_docs;
  std::vector<anonrisk::align::TokenSet> gpt_sets;
  anonrisk::metrics::TagHistogram expected;
};

HistogramFixture make_histogram_fixture();

// 784 documents of flagged-token overlap shaped so that the failed-attack
// group carries a visibly larger model-exclusive share.
struct FractionFixture {
  std::vector<anonrisk::metrics::FractionPair> fractions;
  std::set<std::string> identified;  // attack succeeded on these
};

FractionFixture make_fraction_fixture();

// A 23-slot tagged description with a scripted reconstruction that gets
// exactly three slots wrong.
struct SlotFillFixture {
  anonrisk::corpus::Document tagged;
  anonrisk::corpus::Document original;
  std::string answer;
  int slots_total = 23;
  int slots_correct = 20;
};

SlotFillFixture make_slotfill_fixture();

// Exclusive-token records whose top lemma is "singer" with 31 mentions,
// merged from two surface forms.
struct TermFixture {
  std::vector<anonrisk::metrics::DocTermRecord> docs;
};

TermFixture make_term_fixture();

}  // namespace testsupport
