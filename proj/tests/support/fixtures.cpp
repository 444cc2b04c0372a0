#include "support/fixtures.hpp"

#include <array>
#include <cstdio>

namespace testsupport {

namespace {

using anonrisk::mask::TagCategory;

struct Celebrity {
  const char* id;
  const char* display;
};

constexpr std::array<Celebrity, 20> kCelebrities = {{
    {"adele", "Adele"},
    {"bale", "Christian Bale"},
    {"beckham", "David Beckham"},
    {"campbell", "Naomi Campbell"},
    {"craig", "Daniel Craig"},
    {"cumberbatch", "Benedict Cumberbatch"},
    {"delevingne", "Cara Delevingne"},
    {"dench", "Judi Dench"},
    {"gervais", "Ricky Gervais"},
    {"grant", "Hugh Grant"},
    {"hamilton", "Lewis Hamilton"},
    {"jagger", "Mick Jagger"},
    {"john", "Elton John"},
    {"middleton", "Kate Middleton"},
    {"moss", "Kate Moss"},
    {"radcliffe", "Daniel Radcliffe"},
    {"rowling", "J.K. Rowling"},
    {"sheeran", "Ed Sheeran"},
    {"smith", "Sam Smith"},
    {"watson", "Emma Watson"},
}};

// Per-entity document counts and attack outcomes. The sums are the whole
// point of the fixture, so they are enforced at compile time.
constexpr std::array<int, 20> kDocCounts = {55, 52, 57, 54, 53, 56, 51, 58, 54, 50,
                                            59, 49, 56, 52, 55, 53, 57, 51, 54, 54};
constexpr std::array<int, 20> kRank1 = {48, 33, 46, 37, 22, 23, 35, 22, 29, 32,
                                        53, 33, 50, 47, 40, 47, 42, 49, 46, 50};
constexpr std::array<int, 20> kRank2 = {2, 5, 3, 5, 8, 9, 5, 7, 6, 5,
                                        2, 5, 2, 2, 4, 1, 3, 0, 2, 1};
constexpr std::array<int, 20> kAblateOk = {29, 20, 27, 22, 13, 14, 21, 13, 17, 19,
                                           32, 19, 29, 27, 23, 27, 24, 28, 26, 29};

constexpr int rewrite_rank1(std::size_t e) { return kRank1[e] - (e < 15 ? 3 : 2); }
constexpr int rewrite_rank2(std::size_t e) { return e < 9 ? 1 : 0; }

constexpr int sum(const std::array<int, 20>& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

constexpr int sum_rewrite_rank1() {
  int s = 0;
  for (std::size_t e = 0; e < 20; ++e) s += rewrite_rank1(e);
  return s;
}

constexpr int sum_rewrite_rank2() {
  int s = 0;
  for (std::size_t e = 0; e < 20; ++e) s += rewrite_rank2(e);
  return s;
}

constexpr bool per_entity_bounds_hold() {
  for (std::size_t e = 0; e < 20; ++e) {
    if (kRank1[e] + kRank2[e] > kDocCounts[e]) return false;
    if (kAblateOk[e] > kRank1[e]) return false;
    if (rewrite_rank1(e) < 0) return false;
  }
  return true;
}

static_assert(sum(kDocCounts) == 1080);
static_assert(sum(kRank1) == 784);
static_assert(sum(kRank1) + sum(kRank2) == 861);
static_assert(sum(kAblateOk) == 459);
static_assert(sum_rewrite_rank1() == 729);
static_assert(sum_rewrite_rank1() + sum_rewrite_rank2() == 738);
static_assert(per_entity_bounds_hold());

std::string doc_id_for(std::size_t e, int j) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%03d", kCelebrities[e].id, j);
  return buf;
}

std::string quoted(const std::string& name) { return "\"" + name + "\""; }

// Scripted answer for a correct identification, with some formatting variety
// so extraction sees more than one shape.
std::string correct_answer(std::size_t e, int j) {
  const std::string name = kCelebrities[e].display;
  if (j % 7 == 3) return "The person is " + quoted(name) + ".";
  if (j % 7 == 5) return name;
  return quoted(name);
}

// Wrong answers alternate between another corpus member and an outsider, so
// the confusion matrix sees both label kinds.
std::string wrong_answer_round1(std::size_t e, int j) {
  if (j % 2 == 0) return quoted(kCelebrities[(e + 7) % 20].display);
  return quoted("Taylor Swift");
}

std::string wrong_answer_round2(std::size_t e, int j) {
  if (j % 2 == 0) return quoted(kCelebrities[(e + 13) % 20].display);
  return quoted("Harry Styles");
}

}  // namespace

ReplayFixture make_replay_fixture() {
  ReplayFixture fx;
  fx.oracle.set_default("UNKNOWN");

  for (const auto& celeb : kCelebrities) {
    anonrisk::corpus::EntityProfile profile;
    profile.entity_id = celeb.id;
    profile.display_name = celeb.display;
    profile.aliases.insert(celeb.display);
    fx.profiles.push_back(std::move(profile));
  }
  // A couple of extra aliases, as a manifest would carry.
  fx.profiles[16].aliases.insert("Joanne Rowling");
  fx.profiles[19].aliases.insert("Emma Charlotte Duerre Watson");

  for (std::size_t e = 0; e < kCelebrities.size(); ++e) {
    for (int j = 0; j < kDocCounts[e]; ++j) {
      anonrisk::corpus::Document doc;
      doc.doc_id = doc_id_for(e, j);
      doc.entity_id = kCelebrities[e].id;
      doc.variant = anonrisk::corpus::Variant::masked;
      doc.text = "A description of a public figure, stripped of identifiers, item " +
                 std::to_string(j) + ".";
      fx.docs.push_back(doc);

      // identification attack on the masked text
      if (j < kRank1[e]) {
        fx.oracle.set_answer("intrude1/" + doc.doc_id, correct_answer(e, j));
        fx.rank1_ids.insert(doc.doc_id);
        fx.attacked.push_back(doc);
      } else if (j < kRank1[e] + kRank2[e]) {
        fx.oracle.set_answer("intrude1/" + doc.doc_id, wrong_answer_round1(e, j));
        fx.oracle.set_answer("intrude2/" + doc.doc_id, correct_answer(e, j));
        fx.rank2_ids.insert(doc.doc_id);
      } else {
        fx.oracle.set_answer("intrude1/" + doc.doc_id, wrong_answer_round1(e, j));
        fx.oracle.set_answer("intrude2/" + doc.doc_id, wrong_answer_round2(e, j));
      }

      // identification attack on the rewritten text
      if (j < rewrite_rank1(e)) {
        fx.oracle.set_answer("intrude-rewrite1/" + doc.doc_id, correct_answer(e, j));
        fx.rewrite_rank1_ids.insert(doc.doc_id);
      } else if (j < rewrite_rank1(e) + rewrite_rank2(e)) {
        fx.oracle.set_answer("intrude-rewrite1/" + doc.doc_id, wrong_answer_round1(e, j));
        fx.oracle.set_answer("intrude-rewrite2/" + doc.doc_id, correct_answer(e, j));
        fx.rewrite_rank2_ids.insert(doc.doc_id);
      } else {
        fx.oracle.set_answer("intrude-rewrite1/" + doc.doc_id, wrong_answer_round1(e, j));
        fx.oracle.set_answer("intrude-rewrite2/" + doc.doc_id, wrong_answer_round2(e, j));
      }

      // single-round attack on the ablated text, only where round one hit
      if (j < kRank1[e]) {
        if (j < kAblateOk[e]) {
          fx.oracle.set_answer("intrude-ablate1/" + doc.doc_id, correct_answer(e, j));
          fx.ablation_ok_ids.insert(doc.doc_id);
        } else {
          fx.oracle.set_answer("intrude-ablate1/" + doc.doc_id, wrong_answer_round1(e, j));
        }
      }
    }
  }
  return fx;
}

HistogramFixture make_histogram_fixture() {
  struct Row {
    TagCategory category;
    std::size_t textwash;
    std::size_t gpt;
  };
  static const std::array<Row, 10> kRows = {{
      {TagCategory::pronoun, 2365, 59},
      {TagCategory::person_firstname, 1802, 1563},
      {TagCategory::numeric, 1544, 1065},
      {TagCategory::person_lastname, 1383, 1259},
      {TagCategory::location, 1321, 1224},
      {TagCategory::other_identifying_attribute, 1287, 1079},
      {TagCategory::date, 1134, 949},
      {TagCategory::organization, 827, 758},
      {TagCategory::occupation, 33, 30},
      {TagCategory::title, 33, 19},
  }};

  HistogramFixture fx;
  std::vector<anonrisk::align::AlignedRedaction> doc;
  anonrisk::align::TokenSet flagged;
  flagged.provenance = anonrisk::align::Provenance::gpt;

  for (const auto& row : kRows) {
    for (std::size_t i = 0; i < row.textwash; ++i) {
      const std::string surface = "c" + std::to_string(static_cast<int>(row.category)) +
                                  "x" + std::to_string(i);
      anonrisk::align::AlignedRedaction red;
      anonrisk::align::Token token;
      token.surface = surface;
      token.span = {0, surface.size()};
      token.kind = anonrisk::align::TokenKind::word;
      red.original_tokens.push_back(std::move(token));
      red.tag = row.category;
      if (row.category != TagCategory::pronoun) red.instance = static_cast<int>(i) + 1;
      doc.push_back(std::move(red));
      if (i < row.gpt) flagged.items.insert(surface);
    }
    fx.expected[row.category] = {row.textwash, row.gpt};
  }

  fx.aligned_docs.push_back(std::move(doc));
  fx.gpt_sets.push_back(std::move(flagged));
  return fx;
}

FractionFixture make_fraction_fixture() {
  FractionFixture fx;
  for (int i = 0; i < 784; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "frac-%03d", i);
    const std::string doc_id = buf;
    const bool hit = i < 459;
    if (hit) fx.identified.insert(doc_id);

    const int t = 6 + (i * 7) % 35;
    // Failed attacks carry roughly a 19-point model-exclusive surplus,
    // successful ones only about five.
    const int g = static_cast<int>(hit ? (t * 1108 + 500) / 1000 : (t * 1469 + 500) / 1000);

    anonrisk::align::TokenSet tw;
    tw.provenance = anonrisk::align::Provenance::textwash;
    for (int k = 0; k < t; ++k) tw.items.insert("a" + std::to_string(k));
    anonrisk::align::TokenSet gpt;
    gpt.provenance = anonrisk::align::Provenance::gpt;
    for (int k = 0; k < g; ++k) gpt.items.insert("b" + std::to_string(k));
    for (int k = 0; k < t / 2; ++k) gpt.items.insert("a" + std::to_string(k));

    auto pair = anonrisk::metrics::token_fractions(tw, gpt);
    pair.doc_id = doc_id;
    fx.fractions.push_back(std::move(pair));
  }
  return fx;
}

SlotFillFixture make_slotfill_fixture() {
  SlotFillFixture fx;

  fx.tagged.doc_id = "watson-001";
  fx.tagged.entity_id = "watson";
  fx.tagged.variant = anonrisk::corpus::Variant::masked;
  fx.tagged.text =
      "PERSON_FIRSTNAME_1 PERSON_LASTNAME_1 is an OCCUPATION_1 and OCCUPATION_2 born in "
      "LOCATION_1 on DATE_1 DATE_2 DATE_3. PRONOUN played OTHER_IDENTIFYING_ATTRIBUTE_1 "
      "OTHER_IDENTIFYING_ATTRIBUTE_2 in the ORGANIZATION_1 film series and graduated from "
      "ORGANIZATION_2 University in DATE_4. PRONOUN was appointed TITLE_1 for the "
      "ORGANIZATION_3, has modelled for ORGANIZATION_4 and ORGANIZATION_5, and turned "
      "NUMERIC_1 in DATE_5. PRONOUN lives near LOCATION_2.";

  fx.original.doc_id = "watson-001";
  fx.original.entity_id = "watson";
  fx.original.variant = anonrisk::corpus::Variant::original;
  fx.original.text =
      "Emma Watson is an actress and activist born in Paris on 15 April 1990. She played "
      "Hermione Granger in the Wizarding film series and graduated from Brown University in "
      "2014. She was appointed Ambassador for the UN, has modelled for Burberry and "
      "Lanc\xC3\xB4me, and turned 25 in 2015. She lives near London.";

  // Three designed mistakes: the first pronoun, the fourth organisation and a
  // near-miss spelling of the fifth. Twenty of twenty-three slots line up.
  fx.answer =
      "Emma Watson is an actress and activist born in Paris on 15 April 1990. Emma played "
      "Hermione Granger in the Wizarding film series and graduated from Brown University in "
      "2014. She was appointed Ambassador for the UN, has modelled for Vogue and "
      "Lan\xC3\xB4me, and turned 25 in 2015. She lives near London.";
  return fx;
}

TermFixture make_term_fixture() {
  struct WordCount {
    const char* word;
    int count;
  };
  // "singer" and "singers" share a lemma: 27 + 4 = 31 as the leading term.
  static const std::array<WordCount, 8> kSingles = {{
      {"singer", 27},
      {"singers", 4},
      {"songwriter", 19},
      {"album", 10},
      {"albums", 5},
      {"grammy", 12},
      {"tottenham", 8},
      {"hello", 6},
  }};

  TermFixture fx;
  fx.docs.resize(7);
  for (auto& doc : fx.docs) doc.entity_id = "adele";

  std::size_t cursor = 0;
  for (const auto& entry : kSingles) {
    for (int k = 0; k < entry.count; ++k) {
      fx.docs[cursor % fx.docs.size()].runs.push_back({entry.word});
      ++cursor;
    }
  }
  for (int k = 0; k < 5; ++k) {
    fx.docs[static_cast<std::size_t>(k) % fx.docs.size()].runs.push_back({"rolling", "deep"});
  }
  return fx;
}

}  // namespace testsupport
