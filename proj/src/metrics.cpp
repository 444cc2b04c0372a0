#include "anonrisk/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "anonrisk/util.hpp"

namespace anonrisk::metrics {

PAnonValue p_anon(const corpus::Document& original, const corpus::Document& anonymised) {
  std::size_t ntok_original = align::count_tokens(original.text);
  if (ntok_original == 0) {
    throw MetricsError("original document " + original.doc_id + " has no tokens");
  }
  PAnonValue value;
  value.doc_id = original.doc_id;
  value.ntok_original = ntok_original;
  value.ntok_anonymised = align::count_tokens(anonymised.text);
  return value;
}

FractionPair token_fractions(const align::TokenSet& t_tw, const align::TokenSet& t_gpt) {
  FractionPair pair;
  pair.n_tw = t_tw.items.size();
  std::size_t gpt_exclusive = 0;
  std::size_t union_size = t_tw.items.size();
  for (const auto& token : t_gpt.items) {
    if (t_tw.items.count(token) == 0) {
      ++gpt_exclusive;
      ++union_size;
    }
  }
  if (union_size == 0) throw EmptyUnion("both token sets are empty");
  pair.n_gpt_exclusive = gpt_exclusive;
  pair.n_union = union_size;
  return pair;
}

RateTable success_rates(const std::vector<adversary::GuessResult>& results) {
  RateTable table;
  table.overall_rank1.label = "overall rank 1";
  table.overall_cumulative.label = "overall rank <= 2";

  std::map<std::string, RateLine> rank1;
  std::map<std::string, RateLine> cumulative;
  for (const auto& result : results) {
    table.overall_rank1.total += 1;
    table.overall_cumulative.total += 1;
    auto& entity_rank1 = rank1[result.gold_entity];
    auto& entity_cumulative = cumulative[result.gold_entity];
    entity_rank1.label = result.gold_entity;
    entity_cumulative.label = result.gold_entity;
    entity_rank1.total += 1;
    entity_cumulative.total += 1;
    if (result.match_rank == 1) {
      table.overall_rank1.successes += 1;
      entity_rank1.successes += 1;
    }
    if (result.matched) {
      table.overall_cumulative.successes += 1;
      entity_cumulative.successes += 1;
    }
  }
  for (auto& [entity, line] : rank1) {
    (void)entity;
    table.per_entity_rank1.push_back(line);
  }
  for (auto& [entity, line] : cumulative) {
    (void)entity;
    table.per_entity_cumulative.push_back(line);
  }
  return table;
}

TagHistogram tag_histogram(const std::vector<std::vector<align::AlignedRedaction>>& aligned_docs,
                           const std::vector<align::TokenSet>& gpt_sets) {
  if (aligned_docs.size() != gpt_sets.size()) {
    throw MetricsError("aligned docs and token sets differ in length");
  }
  TagHistogram histogram;
  for (std::size_t i = 0; i < aligned_docs.size(); ++i) {
    const auto& flagged = gpt_sets[i].items;
    for (const auto& redaction : aligned_docs[i]) {
      auto& entry = histogram[redaction.tag];
      entry.textwash += 1;
      bool covered = !redaction.original_tokens.empty();
      for (const auto& token : redaction.original_tokens) {
        if (token.kind == align::TokenKind::punctuation) continue;
        if (flagged.count(util::case_fold(token.surface)) == 0) {
          covered = false;
          break;
        }
      }
      if (covered) entry.gpt += 1;
    }
  }
  return histogram;
}

std::vector<std::pair<double, double>> cdf(const std::vector<double>& values) {
  if (values.empty()) throw EmptyInput("cdf of an empty sample");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> points;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double x = sorted[i];
    if (i + 1 < sorted.size() && sorted[i + 1] == x) continue;  // keep last duplicate
    points.emplace_back(x, static_cast<double>(i + 1) / n);
  }
  return points;
}

// ---------------------------------------------------------------------------
// lemmatisation

RuleLemmatizer::RuleLemmatizer() {
  irregular_ = {
      {"am", "be"},       {"is", "be"},        {"are", "be"},      {"was", "be"},
      {"were", "be"},     {"been", "be"},      {"being", "be"},    {"has", "have"},
      {"had", "have"},    {"having", "have"},  {"does", "do"},     {"did", "do"},
      {"done", "do"},     {"went", "go"},      {"gone", "go"},     {"goes", "go"},
      {"children", "child"}, {"men", "man"},   {"women", "woman"}, {"people", "person"},
      {"feet", "foot"},   {"teeth", "tooth"},  {"mice", "mouse"},  {"geese", "goose"},
      {"lives", "life"},  {"wives", "wife"},   {"knives", "knife"},{"leaves", "leaf"},
      {"better", "good"}, {"best", "good"},    {"worse", "bad"},   {"worst", "bad"},
      {"sang", "sing"},   {"sung", "sing"},    {"wrote", "write"}, {"written", "write"},
      {"won", "win"},     {"movies", "movie"}, {"series", "series"}, {"news", "news"},
      {"became", "become"}, {"born", "bear"},  {"grew", "grow"},   {"grown", "grow"},
      {"made", "make"},   {"met", "meet"},     {"sold", "sell"},   {"began", "begin"},
      {"begun", "begin"}, {"held", "hold"},    {"left", "leave"},  {"his", "his"},
      {"this", "this"},   {"its", "its"},      {"businesses", "business"},
  };
}

namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// After stripping -ing/-ed: undo consonant doubling, restore a dropped final
// 'e' after vowel+consonant ("mak" -> "make"), leave other stems alone.
std::string fix_stem(std::string stem) {
  if (stem.size() >= 3) {
    char last = stem[stem.size() - 1];
    char prev = stem[stem.size() - 2];
    if (last == prev && !is_vowel(last) && last != 'l' && last != 's') {
      stem.pop_back();
      return stem;
    }
    if (!is_vowel(last) && last != 'w' && last != 'x' && last != 'y' && is_vowel(prev) &&
        stem.size() >= 3 && !is_vowel(stem[stem.size() - 3])) {
      stem += 'e';
    }
  }
  return stem;
}

}  // namespace

std::string RuleLemmatizer::lemma(const std::string& folded_token) const {
  auto it = irregular_.find(folded_token);
  if (it != irregular_.end()) return it->second;
  const std::string& w = folded_token;
  if (w.size() < 4) return w;

  if (ends_with(w, "ies") && w.size() >= 5) {
    return w.substr(0, w.size() - 3) + "y";
  }
  if (ends_with(w, "sses")) {
    return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes") ||
      ends_with(w, "zes")) {
    return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "ing") && w.size() >= 6) {
    return fix_stem(w.substr(0, w.size() - 3));
  }
  if (ends_with(w, "ed") && w.size() >= 5 && !is_vowel(w[w.size() - 3])) {
    return fix_stem(w.substr(0, w.size() - 2));
  }
  if (w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

// ---------------------------------------------------------------------------
// exclusive terms

DocTermRecord make_term_record(const corpus::Document& original,
                               const std::set<std::string>& exclusive_folded) {
  DocTermRecord record;
  record.entity_id = original.entity_id;
  std::vector<std::string> current;
  for (const auto& token : align::tokenize(original.text)) {
    if (token.kind == align::TokenKind::punctuation) {
      if (!current.empty()) record.runs.push_back(std::move(current));
      current.clear();
      continue;
    }
    std::string folded = util::case_fold(token.surface);
    if (exclusive_folded.count(folded) > 0) {
      current.push_back(std::move(folded));
    } else if (!current.empty()) {
      record.runs.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) record.runs.push_back(std::move(current));
  return record;
}

std::map<std::string, std::vector<RankedTerm>> exclusive_terms(
    const std::vector<DocTermRecord>& docs, const Lemmatizer& lemmatizer,
    std::size_t top_n) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& doc : docs) {
    auto& entity_counts = counts[doc.entity_id];
    for (const auto& run : doc.runs) {
      std::vector<std::string> lemmas;
      lemmas.reserve(run.size());
      for (const auto& token : run) lemmas.push_back(lemmatizer.lemma(token));
      for (const auto& lemma : lemmas) entity_counts[lemma] += 1;
      for (std::size_t i = 0; i + 1 < lemmas.size(); ++i) {
        entity_counts[lemmas[i] + "_" + lemmas[i + 1]] += 1;
      }
    }
  }

  std::map<std::string, std::vector<RankedTerm>> ranked;
  for (const auto& [entity, entity_counts] : counts) {
    std::vector<RankedTerm> terms;
    terms.reserve(entity_counts.size());
    for (const auto& [term, count] : entity_counts) terms.push_back({term, count});
    std::sort(terms.begin(), terms.end(), [](const RankedTerm& a, const RankedTerm& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.term < b.term;
    });
    if (terms.size() > top_n) terms.resize(top_n);
    ranked[entity] = std::move(terms);
  }
  return ranked;
}

// ---------------------------------------------------------------------------
// report rendering

namespace {

std::string format_percent(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f%%", value);
  return buffer;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

struct SplitValues {
  std::vector<double> succeeded;
  std::vector<double> failed;
};

SplitValues split_by_attack(const std::vector<PAnonValue>& values,
                            const std::set<std::string>& attacked_ok) {
  SplitValues split;
  for (const auto& value : values) {
    (attacked_ok.count(value.doc_id) > 0 ? split.succeeded : split.failed)
        .push_back(value.value());
  }
  return split;
}

nlohmann::json rate_line_json(const RateLine& line) {
  return {{"label", line.label},
          {"successes", line.successes},
          {"total", line.total},
          {"percent", line.percent()}};
}

void write_cdf_rows(std::ostringstream& out, const std::string& series,
                    const std::vector<double>& values) {
  if (values.empty()) return;
  for (const auto& [x, y] : cdf(values)) {
    out << series << ',' << x << ',' << y << '\n';
  }
}

}  // namespace

namespace {

nlohmann::json rate_table_json(const RateTable& table) {
  nlohmann::json doc;
  doc["overall_rank1"] = rate_line_json(table.overall_rank1);
  doc["overall_cumulative"] = rate_line_json(table.overall_cumulative);
  doc["per_entity_rank1"] = nlohmann::json::array();
  for (const auto& line : table.per_entity_rank1) {
    doc["per_entity_rank1"].push_back(rate_line_json(line));
  }
  doc["per_entity_cumulative"] = nlohmann::json::array();
  for (const auto& line : table.per_entity_cumulative) {
    doc["per_entity_cumulative"].push_back(rate_line_json(line));
  }
  return doc;
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json doc;
  doc["rates"] = rate_table_json(report.rates);
  if (report.rewrite_rates.has_value()) {
    doc["rewrite_rates"] = rate_table_json(*report.rewrite_rates);
  }
  if (report.ablation_rates.has_value()) {
    doc["ablation_rates"] = rate_table_json(*report.ablation_rates);
  }
  if (report.human_baseline.has_value()) {
    doc["human_baseline"] = rate_line_json(*report.human_baseline);
  }

  auto p_anon_json = [](const std::vector<PAnonValue>& values) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& value : values) {
      arr.push_back({{"doc_id", value.doc_id},
                     {"ntok_original", value.ntok_original},
                     {"ntok_anonymised", value.ntok_anonymised},
                     {"value", value.value()},
                     {"lengthened", value.lengthened()}});
    }
    return arr;
  };
  doc["p_anon_masked"] = p_anon_json(report.p_anon_masked);
  doc["p_anon_rewritten"] = p_anon_json(report.p_anon_rewritten);

  doc["fractions"] = nlohmann::json::array();
  for (const auto& pair : report.fractions) {
    doc["fractions"].push_back({{"doc_id", pair.doc_id},
                                {"n_tw", pair.n_tw},
                                {"n_gpt_exclusive", pair.n_gpt_exclusive},
                                {"n_union", pair.n_union},
                                {"f_tw", pair.f_tw()},
                                {"f_gpt", pair.f_gpt()}});
  }

  doc["histogram"] = nlohmann::json::array();
  for (const auto& [category, entry] : report.histogram) {
    doc["histogram"].push_back({{"category", std::string(mask::tag_name(category))},
                                {"textwash", entry.textwash},
                                {"gpt", entry.gpt}});
  }

  doc["terms"] = nlohmann::json::object();
  for (const auto& [entity, terms] : report.terms) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& term : terms) {
      arr.push_back({{"term", term.term}, {"count", term.count}});
    }
    doc["terms"][entity] = std::move(arr);
  }
  doc["attacked_ok"] = std::vector<std::string>(report.attacked_ok.begin(),
                                                report.attacked_ok.end());
  doc["ablation_attack_ok"] = std::vector<std::string>(report.ablation_attack_ok.begin(),
                                                       report.ablation_attack_ok.end());
  return doc.dump(2) + "\n";
}

std::string render_report_text(const MetricsReport& report) {
  std::ostringstream out;
  auto print_rate = [&out](const std::string& prefix, const RateLine& line) {
    out << "  " << prefix << line.label << ": " << line.successes << "/" << line.total
        << " = " << format_percent(line.percent()) << "\n";
  };
  out << "== identification success (tag-masked corpus) ==\n";
  if (report.rates.overall_rank1.total > 0) {
    print_rate("", report.rates.overall_rank1);
    print_rate("", report.rates.overall_cumulative);
    if (report.human_baseline.has_value()) print_rate("", *report.human_baseline);
    for (const auto& line : report.rates.per_entity_rank1) print_rate("", line);
  } else {
    out << "  (no results)\n";
  }
  if (report.rewrite_rates.has_value()) {
    out << "== identification success (rewritten corpus) ==\n";
    print_rate("rewrite ", report.rewrite_rates->overall_rank1);
    print_rate("rewrite ", report.rewrite_rates->overall_cumulative);
    if (report.rates.overall_cumulative.total > 0) {
      double absolute = report.rates.overall_cumulative.percent() -
                        report.rewrite_rates->overall_cumulative.percent();
      double relative = report.rates.overall_cumulative.percent() <= 0.0
                            ? 0.0
                            : 100.0 * absolute / report.rates.overall_cumulative.percent();
      char buffer[96];
      std::snprintf(buffer, sizeof(buffer),
                    "  delta vs tag masking: %.2f pp absolute, %.2f%% relative\n", absolute,
                    relative);
      out << buffer;
    }
  }
  if (report.ablation_rates.has_value()) {
    out << "== identification success (ablated corpus) ==\n";
    print_rate("ablation ", report.ablation_rates->overall_rank1);
    print_rate("ablation ", report.ablation_rates->overall_cumulative);
  }

  auto print_p_anon = [&](const char* name, const std::vector<PAnonValue>& values) {
    out << "== retained-text proportion (" << name << ") ==\n";
    if (values.empty()) {
      out << "  (no documents)\n";
      return;
    }
    SplitValues split = split_by_attack(values, report.attacked_ok);
    std::vector<double> all;
    for (const auto& value : values) all.push_back(value.value());
    out << "  mean: " << mean(all);
    if (!split.succeeded.empty()) out << "  identified-docs mean: " << mean(split.succeeded);
    if (!split.failed.empty()) out << "  unidentified-docs mean: " << mean(split.failed);
    out << "\n";
    std::size_t lengthened =
        static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                               [](const PAnonValue& v) { return v.lengthened(); }));
    if (lengthened > 0) out << "  note: " << lengthened << " document(s) grew longer\n";
  };
  print_p_anon("tag masking", report.p_anon_masked);
  print_p_anon("rewrite", report.p_anon_rewritten);

  out << "== exclusive-token fractions ==\n";
  if (report.fractions.empty()) {
    out << "  (no documents)\n";
  } else {
    std::vector<double> tw_ok, tw_fail, gpt_ok, gpt_fail;
    for (const auto& pair : report.fractions) {
      bool ok = report.fraction_split().count(pair.doc_id) > 0;
      (ok ? tw_ok : tw_fail).push_back(pair.f_tw());
      (ok ? gpt_ok : gpt_fail).push_back(pair.f_gpt());
    }
    if (!tw_fail.empty()) {
      out << "  attack failed:    mean f_tw = " << format_percent(100.0 * mean(tw_fail))
          << ", mean f_gpt = " << format_percent(100.0 * mean(gpt_fail)) << "\n";
    }
    if (!tw_ok.empty()) {
      out << "  attack succeeded: mean f_tw = " << format_percent(100.0 * mean(tw_ok))
          << ", mean f_gpt = " << format_percent(100.0 * mean(gpt_ok)) << "\n";
    }
  }

  out << "== tag histogram (masker instances / also LLM-flagged) ==\n";
  if (report.histogram.empty()) {
    out << "  (empty)\n";
  } else {
    std::vector<std::pair<mask::TagCategory, TagHistogramEntry>> rows(
        report.histogram.begin(), report.histogram.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.second.textwash > b.second.textwash;
    });
    for (const auto& [category, entry] : rows) {
      out << "  " << mask::tag_name(category) << ": " << entry.textwash << " / "
          << entry.gpt << "\n";
    }
  }

  out << "== top exclusive terms per entity ==\n";
  if (report.terms.empty()) {
    out << "  (empty)\n";
  } else {
    for (const auto& [entity, terms] : report.terms) {
      out << "  " << entity << ":";
      for (const auto& term : terms) out << " " << term.term << " (" << term.count << ")";
      out << "\n";
    }
  }
  return out.str();
}

void write_report_csv(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ostringstream out;
    out << "label,successes,total,percent\n";
    auto row = [&out](const RateLine& line) {
      out << '"' << line.label << "\"," << line.successes << ',' << line.total << ','
          << line.percent() << '\n';
    };
    row(report.rates.overall_rank1);
    row(report.rates.overall_cumulative);
    if (report.human_baseline.has_value()) row(*report.human_baseline);
    if (report.rewrite_rates.has_value()) {
      row(report.rewrite_rates->overall_rank1);
      row(report.rewrite_rates->overall_cumulative);
    }
    if (report.ablation_rates.has_value()) {
      row(report.ablation_rates->overall_rank1);
      row(report.ablation_rates->overall_cumulative);
    }
    for (const auto& line : report.rates.per_entity_rank1) row(line);
    util::write_text_file_atomic(dir / "success_rates.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "series,x,cumulative\n";
    SplitValues masked = split_by_attack(report.p_anon_masked, report.attacked_ok);
    SplitValues rewritten = split_by_attack(report.p_anon_rewritten, report.attacked_ok);
    write_cdf_rows(out, "masked_attack_succeeded", masked.succeeded);
    write_cdf_rows(out, "masked_attack_failed", masked.failed);
    write_cdf_rows(out, "rewritten_attack_succeeded", rewritten.succeeded);
    write_cdf_rows(out, "rewritten_attack_failed", rewritten.failed);
    util::write_text_file_atomic(dir / "p_anon_cdf.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "series,x,cumulative\n";
    std::vector<double> tw_ok, tw_fail, gpt_ok, gpt_fail;
    for (const auto& pair : report.fractions) {
      bool ok = report.fraction_split().count(pair.doc_id) > 0;
      (ok ? tw_ok : tw_fail).push_back(pair.f_tw());
      (ok ? gpt_ok : gpt_fail).push_back(pair.f_gpt());
    }
    write_cdf_rows(out, "f_tw_attack_succeeded", tw_ok);
    write_cdf_rows(out, "f_tw_attack_failed", tw_fail);
    write_cdf_rows(out, "f_gpt_attack_succeeded", gpt_ok);
    write_cdf_rows(out, "f_gpt_attack_failed", gpt_fail);
    util::write_text_file_atomic(dir / "fractions_cdf.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "category,textwash,gpt\n";
    for (const auto& [category, entry] : report.histogram) {
      out << mask::tag_name(category) << ',' << entry.textwash << ',' << entry.gpt << '\n';
    }
    util::write_text_file_atomic(dir / "tag_histogram.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "entity,rank,term,count\n";
    for (const auto& [entity, terms] : report.terms) {
      for (std::size_t i = 0; i < terms.size(); ++i) {
        out << entity << ',' << (i + 1) << ',' << terms[i].term << ',' << terms[i].count
            << '\n';
      }
    }
    util::write_text_file_atomic(dir / "exclusive_terms.csv", out.str());
  }
}

}  // namespace anonrisk::metrics
