#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anonrisk/adversary.hpp"
#include "anonrisk/align.hpp"
#include "anonrisk/corpus.hpp"
#include "anonrisk/mask.hpp"

namespace anonrisk::metrics {

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyUnion : MetricsError {
  using MetricsError::MetricsError;
};

struct EmptyInput : MetricsError {
  using MetricsError::MetricsError;
};

// Proportion of the original token count that survives anonymisation. Stored
// as the two integer counts; the ratio is derived, so it is exact.
struct PAnonValue {
  std::string doc_id;
  std::size_t ntok_original = 1;
  std::size_t ntok_anonymised = 0;

  double value() const {
    return static_cast<double>(ntok_anonymised) / static_cast<double>(ntok_original);
  }
  // Rewrites can be longer than their source; reported raw, never clamped.
  bool lengthened() const { return ntok_anonymised > ntok_original; }
};

PAnonValue p_anon(const corpus::Document& original, const corpus::Document& anonymised);

// Share of the union of flagged tokens belonging to each method. The two
// fractions are complements by construction, so their sum is exactly 1.
struct FractionPair {
  std::string doc_id;
  std::size_t n_tw = 0;             // |T_TW|
  std::size_t n_gpt_exclusive = 0;  // |T_GPT \ T_TW|
  std::size_t n_union = 1;

  double f_tw() const { return static_cast<double>(n_tw) / static_cast<double>(n_union); }
  double f_gpt() const { return 1.0 - f_tw(); }
};

FractionPair token_fractions(const align::TokenSet& t_tw, const align::TokenSet& t_gpt);

struct RateLine {
  std::string label;
  std::size_t successes = 0;
  std::size_t total = 0;

  double percent() const {
    return total == 0 ? 0.0
                      : 100.0 * static_cast<double>(successes) / static_cast<double>(total);
  }
};

struct RateTable {
  RateLine overall_rank1;       // matched in the first round
  RateLine overall_cumulative;  // matched in either round
  std::vector<RateLine> per_entity_rank1;       // sorted by entity id
  std::vector<RateLine> per_entity_cumulative;  // same order
};

RateTable success_rates(const std::vector<adversary::GuessResult>& results);

struct TagHistogramEntry {
  std::size_t textwash = 0;
  std::size_t gpt = 0;  // of those, instances whose tokens the LLM also flagged
};

using TagHistogram = std::map<mask::TagCategory, TagHistogramEntry>;

// aligned_docs[i] and gpt_sets[i] must describe the same document. An
// instance counts for the LLM when every one of its word tokens appears in
// that document's flagged set.
TagHistogram tag_histogram(const std::vector<std::vector<align::AlignedRedaction>>& aligned_docs,
                           const std::vector<align::TokenSet>& gpt_sets);

// Empirical CDF: unique sorted x with cumulative fraction, ending at 1.
std::vector<std::pair<double, double>> cdf(const std::vector<double>& values);

class Lemmatizer {
 public:
  virtual ~Lemmatizer() = default;
  virtual std::string lemma(const std::string& folded_token) const = 0;
};

// Lookup table for irregular forms plus common suffix rules; intentionally a
// baseline, pluggable for anything stronger.
class RuleLemmatizer : public Lemmatizer {
 public:
  RuleLemmatizer();
  std::string lemma(const std::string& folded_token) const override;

 private:
  std::map<std::string, std::string> irregular_;
};

// Tokens one method flagged and the other missed, for one document, kept in
// text order. Tokens that were adjacent in the source stay in the same run so
// 2-grams can be formed; unrelated tokens never become a 2-gram.
struct DocTermRecord {
  std::string entity_id;
  std::vector<std::vector<std::string>> runs;  // folded surfaces
};

DocTermRecord make_term_record(const corpus::Document& original,
                               const std::set<std::string>& exclusive_folded);

struct RankedTerm {
  std::string term;  // lemma or lemma_lemma for 2-grams
  std::size_t count = 0;
};

// Per entity: lemmatised 1-grams and underscore-joined adjacent 2-grams over
// the exclusive tokens, ranked by count descending then term ascending.
std::map<std::string, std::vector<RankedTerm>> exclusive_terms(
    const std::vector<DocTermRecord>& docs, const Lemmatizer& lemmatizer,
    std::size_t top_n = 12);

// Everything the report stage emits. Sections with no data stay empty.
struct MetricsReport {
  RateTable rates;  // attack on the tag-masked corpus
  std::optional<RateTable> rewrite_rates;   // attack on LLM-rewritten texts
  std::optional<RateTable> ablation_rates;  // attack on ablated texts
  std::optional<RateLine> human_baseline;
  std::vector<PAnonValue> p_anon_masked;
  std::vector<PAnonValue> p_anon_rewritten;
  std::vector<FractionPair> fractions;
  // First-round identification successes; splits the retained-text CDFs.
  std::set<std::string> attacked_ok;
  // Docs still identified after ablation; splits the fraction CDFs. Falls
  // back to attacked_ok when empty.
  std::set<std::string> ablation_attack_ok;
  TagHistogram histogram;
  std::map<std::string, std::vector<RankedTerm>> terms;

  const std::set<std::string>& fraction_split() const {
    return ablation_attack_ok.empty() ? attacked_ok : ablation_attack_ok;
  }
};

std::string report_to_json(const MetricsReport& report);
std::string render_report_text(const MetricsReport& report);
// One CSV per figure: success rates, CDF points, histogram pairs, term table.
void write_report_csv(const MetricsReport& report, const std::filesystem::path& dir);

}  // namespace anonrisk::metrics
