#include <filesystem>

#include "doctest.h"

#include "anonrisk/corpus.hpp"
#include "anonrisk/util.hpp"
#include "support/tempdir.hpp"

using namespace anonrisk;

namespace {

// Lays out a small corpus on disk and returns the manifest path.
std::filesystem::path write_demo_corpus(const testsupport::TempDir& tmp) {
  util::write_text_file_atomic(tmp / "texts" / "a-001.txt", "Alpha was born here.\r\n");
  util::write_text_file_atomic(tmp / "texts" / "a-001.masked.txt",
                               "PERSON_FIRSTNAME_1 was born here.\n");
  util::write_text_file_atomic(tmp / "texts" / "b-001.txt", "Beta sails boats.\n");
  const char* manifest = R"({
    "entities": [
      {"id": "alpha", "name": "Alpha One", "aliases": ["A. One"]},
      {"id": "beta", "name": "Beta Two"}
    ],
    "label_overrides": {"b-001": "alpha"},
    "documents": [
      {"path": "texts/a-001.txt", "entity": "alpha"},
      {"id": "a-001", "path": "texts/a-001.masked.txt", "entity": "alpha", "variant": "masked"},
      {"path": "texts/b-001.txt", "entity": "beta"}
    ]
  })";
  util::write_text_file_atomic(tmp / "manifest.json", manifest);
  return tmp / "manifest.json";
}

}  // namespace

TEST_CASE("variant names round trip") {
  for (auto v : {corpus::Variant::original, corpus::Variant::masked,
                 corpus::Variant::llm_rewritten, corpus::Variant::ablated}) {
    auto back = corpus::variant_from_string(corpus::to_string(v));
    REQUIRE(back.has_value());
    CHECK(*back == v);
  }
  CHECK_FALSE(corpus::variant_from_string("shredded").has_value());
}

TEST_CASE("manifest loading resolves paths, ids and overrides") {
  testsupport::TempDir tmp;
  auto manifest = corpus::load_manifest(write_demo_corpus(tmp));

  REQUIRE(manifest.entities.size() == 2);
  CHECK(manifest.entities[0].entity_id == "alpha");
  // the display name always joins the alias set
  CHECK(manifest.entities[0].aliases.count("Alpha One") == 1);
  CHECK(manifest.entities[0].aliases.count("A. One") == 1);
  CHECK(manifest.entities[1].aliases.count("Beta Two") == 1);

  REQUIRE(manifest.documents.size() == 3);
  // sorted by (doc_id, variant); ids default to the file stem
  CHECK(manifest.documents[0].doc_id == "a-001");
  CHECK(manifest.documents[0].variant == corpus::Variant::original);
  CHECK(manifest.documents[1].doc_id == "a-001");
  CHECK(manifest.documents[1].variant == corpus::Variant::masked);
  CHECK(manifest.documents[2].doc_id == "b-001");
  // the override relabels b-001 to alpha without touching the file
  CHECK(manifest.documents[2].entity_id == "alpha");
  for (const auto& record : manifest.documents) CHECK(record.path.is_absolute());

  auto* found = manifest.find_entity("beta");
  REQUIRE(found != nullptr);
  CHECK(found->display_name == "Beta Two");
  CHECK(manifest.find_entity("gamma") == nullptr);
}

TEST_CASE("manifest validation failures") {
  testsupport::TempDir tmp;

  SUBCASE("missing file") {
    CHECK_THROWS_AS(corpus::load_manifest(tmp / "nope.json"), corpus::CorpusError);
  }

  SUBCASE("document referencing an unknown entity") {
    util::write_text_file_atomic(tmp / "t.txt", "text\n");
    util::write_text_file_atomic(tmp / "m.json", R"({
      "entities": [{"id": "a", "name": "A"}],
      "documents": [{"path": "t.txt", "entity": "ghost"}]
    })");
    CHECK_THROWS_AS(corpus::load_manifest(tmp / "m.json"), corpus::UnknownEntityError);
  }

  SUBCASE("override referencing an unknown entity") {
    util::write_text_file_atomic(tmp / "m.json", R"({
      "entities": [{"id": "a", "name": "A"}],
      "label_overrides": {"d": "ghost"},
      "documents": []
    })");
    CHECK_THROWS_AS(corpus::load_manifest(tmp / "m.json"), corpus::UnknownEntityError);
  }

  SUBCASE("duplicate (doc, variant) records") {
    util::write_text_file_atomic(tmp / "t.txt", "text\n");
    util::write_text_file_atomic(tmp / "m.json", R"({
      "entities": [{"id": "a", "name": "A"}],
      "documents": [
        {"id": "d", "path": "t.txt", "entity": "a"},
        {"id": "d", "path": "t.txt", "entity": "a"}
      ]
    })");
    CHECK_THROWS_AS(corpus::load_manifest(tmp / "m.json"), corpus::CorpusError);
  }

  SUBCASE("unreadable document file") {
    util::write_text_file_atomic(tmp / "m.json", R"({
      "entities": [{"id": "a", "name": "A"}],
      "documents": [{"path": "missing.txt", "entity": "a"}]
    })");
    CHECK_THROWS_AS(corpus::load_manifest(tmp / "m.json"), corpus::CorpusError);
  }
}

TEST_CASE("document loading normalises newlines and rejects empty bodies") {
  testsupport::TempDir tmp;
  auto manifest = corpus::load_manifest(write_demo_corpus(tmp));

  auto originals = corpus::load_documents(manifest, corpus::Variant::original);
  REQUIRE(originals.size() == 2);
  CHECK(originals[0].doc_id == "a-001");
  CHECK(originals[0].text == "Alpha was born here.\n");  // CRLF folded
  CHECK(originals[0].variant == corpus::Variant::original);
  CHECK_FALSE(originals[0].source_path.empty());

  util::write_text_file_atomic(tmp / "texts" / "empty.txt", "  \n ");
  util::write_text_file_atomic(tmp / "m2.json", R"({
    "entities": [{"id": "a", "name": "A"}],
    "documents": [{"path": "texts/empty.txt", "entity": "a"}]
  })");
  auto m2 = corpus::load_manifest(tmp / "m2.json");
  CHECK_THROWS_AS(corpus::load_documents(m2, corpus::Variant::original), corpus::CorpusError);
}

TEST_CASE("pair loading joins originals with their counterparts") {
  testsupport::TempDir tmp;
  auto manifest = corpus::load_manifest(write_demo_corpus(tmp));

  SUBCASE("b-001 has no masked counterpart") {
    CHECK_THROWS_AS(corpus::load_pairs(manifest, corpus::Variant::masked),
                    corpus::MissingCounterpartError);
  }

  SUBCASE("complete pairing works") {
    util::write_text_file_atomic(tmp / "texts" / "b-001.masked.txt",
                                 "PERSON_FIRSTNAME_1 sails boats.\n");
    util::write_text_file_atomic(tmp / "manifest2.json", R"({
      "entities": [{"id": "alpha", "name": "Alpha One"}],
      "documents": [
        {"id": "a-001", "path": "texts/a-001.txt", "entity": "alpha"},
        {"id": "a-001", "path": "texts/a-001.masked.txt", "entity": "alpha", "variant": "masked"}
      ]
    })");
    auto pairs = corpus::load_pairs(corpus::load_manifest(tmp / "manifest2.json"),
                                    corpus::Variant::masked);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].original.doc_id == pairs[0].anonymised.doc_id);
    CHECK(pairs[0].original.entity_id == pairs[0].anonymised.entity_id);
    CHECK(pairs[0].original.variant == corpus::Variant::original);
    CHECK(pairs[0].anonymised.variant == corpus::Variant::masked);
  }
}
