#include <random>

#include "doctest.h"

#include "anonrisk/align.hpp"
#include "anonrisk/util.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace anonrisk;

namespace {

corpus::DocumentPair make_pair(const std::string& original, const std::string& anonymised) {
  corpus::DocumentPair pair;
  pair.original = {"d", "e", original, corpus::Variant::original, ""};
  pair.anonymised = {"d", "e", anonymised, corpus::Variant::masked, ""};
  return pair;
}

std::vector<std::string> surfaces(const std::vector<align::Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

}  // namespace

TEST_CASE("tokenize splits punctuation and keeps connected words whole") {
  auto tokens = align::tokenize("Ada, don't go to well-known places...");
  auto got = surfaces(tokens);
  std::vector<std::string> want = {"Ada", ",",      "don't", "go", "to",
                                   "well-known", "places", ".",  ".",  "."};
  CHECK(got == want);

  CHECK(tokens[0].kind == align::TokenKind::word);
  CHECK(tokens[1].kind == align::TokenKind::punctuation);

  // spans index bytes of the input
  CHECK(tokens[0].span == mask::Span{0, 3});
  CHECK(tokens[1].span == mask::Span{3, 4});
}

TEST_CASE("tokenize classifies digit runs as numbers") {
  auto tokens = align::tokenize("aged 26 in 1999 or 26th");
  REQUIRE(tokens.size() == 6);
  CHECK(tokens[1].kind == align::TokenKind::number);
  CHECK(tokens[3].kind == align::TokenKind::number);
  CHECK(tokens[5].kind == align::TokenKind::word);  // "26th" mixes letters in
}

TEST_CASE("tokenize keeps tags, emails split, and handles curly apostrophes") {
  auto tags = surfaces(align::tokenize("PERSON_FIRSTNAME_1 met DATE_12."));
  CHECK(tags == std::vector<std::string>{"PERSON_FIRSTNAME_1", "met", "DATE_12", "."});

  auto email = surfaces(align::tokenize("ada@post.example"));
  CHECK(email == std::vector<std::string>{"ada", "@", "post", ".", "example"});

  auto curly = surfaces(align::tokenize("don\xE2\x80\x99t stop"));
  CHECK(curly == std::vector<std::string>{"don\xE2\x80\x99t", "stop"});

  CHECK(align::count_tokens("a b, c") == 4);
}

TEST_CASE("tag grammar accepts the schema and rejects near misses") {
  CHECK(align::is_tag_token("PERSON_FIRSTNAME_1"));
  CHECK(align::is_tag_token("DATE_12"));
  CHECK(align::is_tag_token("PRONOUN"));
  CHECK(align::is_tag_token("ORGANIZATION"));  // bare category is a valid form
  CHECK(align::is_tag_token("OTHER_IDENTIFYING_ATTRIBUTE_3"));

  CHECK_FALSE(align::is_tag_token("DATE_0"));  // instances start at one
  CHECK_FALSE(align::is_tag_token("date_1"));
  CHECK_FALSE(align::is_tag_token("DATEE_1"));
  CHECK_FALSE(align::is_tag_token("PERSON_FIRSTNAME_X"));
  CHECK_FALSE(align::is_tag_token("TIME_"));
  CHECK_FALSE(align::is_tag_token("_1"));
  CHECK_FALSE(align::is_tag_token("ORGANIZATION_2_3"));
  CHECK_FALSE(align::is_tag_token(""));

  auto parsed = align::parse_tag("LOCATION_7");
  REQUIRE(parsed.has_value());
  CHECK(parsed->category == mask::TagCategory::location);
  CHECK(parsed->instance == 7);

  auto bare = align::parse_tag("PRONOUN");
  REQUIRE(bare.has_value());
  CHECK_FALSE(bare->instance.has_value());
}

TEST_CASE("strip_tags removes tags and tidies the leftover spacing") {
  CHECK(align::strip_tags("PERSON_FIRSTNAME_1, who sang") == ", who sang");
  CHECK(align::strip_tags("met PERSON_FIRSTNAME_1 at DATE_1.") == "met at.");
  CHECK(align::strip_tags("no tags here.") == "no tags here.");
  CHECK(align::strip_tags("PRONOUN went home") == "went home");
  CHECK(align::strip_tags("a  DATE_1   b") == "a b");
  CHECK(align::strip_tags("DATE_0 stays") == "DATE_0 stays");

  SUBCASE("idempotent") {
    const std::string once = align::strip_tags("He met PERSON_FIRSTNAME_1, DATE_1 ago.");
    CHECK(align::strip_tags(once) == once);
  }
}

TEST_CASE("randomised tagged text strips to exactly the kept tokens") {
  std::mt19937 rng(971);
  for (int iter = 0; iter < 200; ++iter) {
    auto c = testsupport::random_tagged_case(rng);
    CAPTURE(iter);
    CAPTURE(c.text);
    const std::string stripped = align::strip_tags(c.text);
    CHECK(stripped == c.expected_stripped);
    CHECK(stripped == testsupport::naive_strip(c.text));
    CHECK(align::strip_tags(stripped) == stripped);  // idempotent
    for (const auto& tok : align::tokenize(stripped)) {
      CHECK_FALSE(align::is_tag_token(tok.surface));
    }
  }
}

TEST_CASE("alignment recovers the replaced tokens") {
  SUBCASE("one token per adjacent tag") {
    auto result = align::align_pair(
        make_pair("Ada met Bea on 26 July", "PERSON_FIRSTNAME_1 met PERSON_FIRSTNAME_2 on DATE_1 DATE_2"));
    REQUIRE(result.redactions.size() == 4);
    CHECK_FALSE(result.ambiguous);
    CHECK(result.unmapped.empty());
    CHECK(surfaces(result.redactions[0].original_tokens) == std::vector<std::string>{"Ada"});
    CHECK(result.redactions[0].tag == mask::TagCategory::person_firstname);
    CHECK(result.redactions[0].instance == 1);
    CHECK(surfaces(result.redactions[1].original_tokens) == std::vector<std::string>{"Bea"});
    CHECK(surfaces(result.redactions[2].original_tokens) == std::vector<std::string>{"26"});
    CHECK(surfaces(result.redactions[3].original_tokens) == std::vector<std::string>{"July"});
  }

  SUBCASE("single tag absorbs a multi-token value") {
    auto result =
        align::align_pair(make_pair("born in New York City today", "born in LOCATION_1 today"));
    REQUIRE(result.redactions.size() == 1);
    CHECK_FALSE(result.ambiguous);
    CHECK(surfaces(result.redactions[0].original_tokens) ==
          std::vector<std::string>{"New", "York", "City"});
  }

  SUBCASE("instance evidence carves an uneven region") {
    auto result = align::align_pair(make_pair("York stands. York New Dunmore meet",
                                              "LOCATION_1 stands. LOCATION_1 LOCATION_2 meet"));
    REQUIRE(result.redactions.size() == 3);
    CHECK_FALSE(result.ambiguous);
    CHECK(surfaces(result.redactions[1].original_tokens) == std::vector<std::string>{"York"});
    CHECK(surfaces(result.redactions[2].original_tokens) ==
          std::vector<std::string>{"New", "Dunmore"});
  }

  SUBCASE("undetermined splits fall back to position order and get flagged") {
    auto result = align::align_pair(
        make_pair("Ada Vale Smith met", "PERSON_FIRSTNAME_1 PERSON_LASTNAME_1 met"));
    REQUIRE(result.redactions.size() == 2);
    CHECK(result.ambiguous);
    CHECK(result.redactions[0].ambiguous);
    CHECK(surfaces(result.redactions[0].original_tokens) == std::vector<std::string>{"Ada"});
    CHECK(surfaces(result.redactions[1].original_tokens) ==
          std::vector<std::string>{"Vale", "Smith"});
  }

  SUBCASE("pronoun tags take one token, the rest lands on the open tag") {
    auto result = align::align_pair(make_pair("She 26 July ok", "PRONOUN DATE_1 ok"));
    REQUIRE(result.redactions.size() == 2);
    CHECK(result.ambiguous);
    CHECK(surfaces(result.redactions[0].original_tokens) == std::vector<std::string>{"She"});
    CHECK(surfaces(result.redactions[1].original_tokens) ==
          std::vector<std::string>{"26", "July"});
  }

  SUBCASE("original-only insertions are reported, never dropped") {
    auto result = align::align_pair(make_pair("Ada met quietly her", "Ada met her"));
    CHECK(result.redactions.empty());
    REQUIRE(result.unmapped.size() == 1);
    CHECK(result.unmapped[0] == "quietly");
  }
}

TEST_CASE("randomised mask output aligns back onto its redactions") {
  std::mt19937 rng(424242);
  for (int iter = 0; iter < 120; ++iter) {
    auto c = testsupport::random_mask_case(rng);
    CAPTURE(iter);
    CAPTURE(c.doc.text);

    auto masked = mask::mask_document(c.doc, c.gazetteer);
    auto result = align::align_pair(masked.pair);

    CHECK_FALSE(result.ambiguous);
    CHECK(result.unmapped.empty());
    REQUIRE(result.redactions.size() == c.expected.size());
    for (std::size_t i = 0; i < c.expected.size(); ++i) {
      CAPTURE(i);
      const auto& got = result.redactions[i];
      CHECK(got.tag == c.expected[i].category);
      CHECK(got.instance == c.expected[i].instance);
      CHECK(surfaces(got.original_tokens) == c.expected_tokens[i]);
      // token spans cover exactly the redacted byte range
      CHECK(got.original_tokens.front().span.begin == c.expected[i].span.begin);
      CHECK(got.original_tokens.back().span.end == c.expected[i].span.end);
    }
  }
}

TEST_CASE("excerpt matching is token-level and case-insensitive") {
  corpus::Document doc{"d", "e", "Ada sang in Paris with the choir", corpus::Variant::original,
                       ""};
  auto result = align::match_excerpts(doc, {"paris", "the choir", "Berlin", "SANG!"});
  CHECK(result.matched.provenance == align::Provenance::gpt);
  CHECK(result.matched.items == std::set<std::string>{"paris", "the", "choir", "sang"});
  REQUIRE(result.rejects.size() == 1);
  CHECK(result.rejects[0] == "Berlin");

  SUBCASE("punctuation-only excerpts cannot match") {
    auto r2 = align::match_excerpts(doc, {"..."});
    CHECK(r2.matched.items.empty());
    CHECK(r2.rejects == std::vector<std::string>{"..."});
  }
}

TEST_CASE("ablation deletes flagged tokens and keeps punctuation attached") {
  corpus::Document doc{"d", "e", "She sang in Paris, happily.", corpus::Variant::original, ""};
  align::TokenSet sensitive;
  sensitive.items = {"she", "paris"};
  auto out = align::ablate_tokens(doc, sensitive);
  CHECK(out.text == "sang in, happily.");
  CHECK(out.variant == corpus::Variant::ablated);
  CHECK(out.doc_id == "d");

  SUBCASE("deleting nothing reflows whitespace only") {
    align::TokenSet empty;
    auto same = align::ablate_tokens(doc, empty);
    CHECK(same.text == "She sang in Paris, happily.");
  }

  SUBCASE("deleting everything leaves the punctuation skeleton") {
    align::TokenSet all;
    for (const auto& tok : align::tokenize(doc.text)) {
      all.items.insert(util::case_fold(tok.surface));
    }
    auto bare = align::ablate_tokens(doc, all);
    CHECK(bare.text == ",.");
  }
}
