#include "anonrisk/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "anonrisk/util.hpp"
#include "json.hpp"

namespace anonrisk::corpus {

using nlohmann::json;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::original: return "original";
    case Variant::masked: return "masked";
    case Variant::llm_rewritten: return "llm_rewritten";
    case Variant::ablated: return "ablated";
  }
  return "original";
}

std::optional<Variant> variant_from_string(std::string_view s) {
  if (s == "original") return Variant::original;
  if (s == "masked") return Variant::masked;
  if (s == "llm_rewritten") return Variant::llm_rewritten;
  if (s == "ablated") return Variant::ablated;
  return std::nullopt;
}

const EntityProfile* CorpusManifest::find_entity(const std::string& entity_id) const {
  for (const auto& e : entities) {
    if (e.entity_id == entity_id) return &e;
  }
  return nullptr;
}

namespace {

std::string stem_of(const std::filesystem::path& p) { return p.stem().string(); }

}  // namespace

CorpusManifest load_manifest(const std::filesystem::path& manifest_path) {
  if (!std::filesystem::exists(manifest_path)) {
    throw CorpusError("manifest not found: " + manifest_path.string());
  }
  json doc;
  try {
    std::ifstream in(manifest_path);
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CorpusError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw CorpusError("manifest root must be a JSON object");

  CorpusManifest manifest;
  manifest.base_dir = std::filesystem::absolute(manifest_path).parent_path();

  std::set<std::string> seen_entities;
  for (const auto& je : doc.value("entities", json::array())) {
    EntityProfile profile;
    profile.entity_id = je.at("id").get<std::string>();
    profile.display_name = je.at("name").get<std::string>();
    if (profile.entity_id.empty()) throw CorpusError("entity with empty id");
    if (!seen_entities.insert(profile.entity_id).second) {
      throw CorpusError("duplicate entity id: " + profile.entity_id);
    }
    for (const auto& ja : je.value("aliases", json::array())) {
      profile.aliases.insert(ja.get<std::string>());
    }
    profile.aliases.insert(profile.display_name);
    manifest.entities.push_back(std::move(profile));
  }

  // Keep the object alive for the whole loop: items() holds a reference and
  // must not be chained onto a temporary.
  const json overrides = doc.value("label_overrides", json::object());
  for (const auto& [doc_id, entity_id] : overrides.items()) {
    if (!seen_entities.count(entity_id.get<std::string>())) {
      throw UnknownEntityError("label override for '" + doc_id +
                               "' references unknown entity: " + entity_id.get<std::string>());
    }
    manifest.label_overrides[doc_id] = entity_id.get<std::string>();
  }

  std::set<std::pair<std::string, Variant>> seen_records;
  for (const auto& jd : doc.value("documents", json::array())) {
    DocumentRecord record;
    std::filesystem::path rel = jd.at("path").get<std::string>();
    record.path = rel.is_absolute() ? rel : manifest.base_dir / rel;
    record.doc_id = jd.contains("id") ? jd.at("id").get<std::string>() : stem_of(rel);
    record.entity_id = jd.at("entity").get<std::string>();
    auto variant = variant_from_string(jd.value("variant", "original"));
    if (!variant) {
      throw CorpusError("document '" + record.doc_id +
                        "' has unknown variant: " + jd.value("variant", ""));
    }
    record.variant = *variant;
    if (!seen_entities.count(record.entity_id)) {
      throw UnknownEntityError("document '" + record.doc_id +
                               "' references unknown entity: " + record.entity_id);
    }
    if (!seen_records.insert({record.doc_id, record.variant}).second) {
      throw CorpusError("duplicate document record: " + record.doc_id + "/" +
                        std::string(to_string(record.variant)));
    }
    std::ifstream probe(record.path);
    if (!probe) {
      throw CorpusError("document file not readable: " + record.path.string());
    }
    // Gold-label corrections live in the manifest so the files stay untouched.
    auto ov = manifest.label_overrides.find(record.doc_id);
    if (ov != manifest.label_overrides.end()) record.entity_id = ov->second;
    manifest.documents.push_back(std::move(record));
  }

  std::sort(manifest.documents.begin(), manifest.documents.end(),
            [](const DocumentRecord& a, const DocumentRecord& b) {
              if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
              return static_cast<int>(a.variant) < static_cast<int>(b.variant);
            });
  return manifest;
}

Document load_document(const CorpusManifest& manifest, const DocumentRecord& record) {
  (void)manifest;
  Document d;
  d.doc_id = record.doc_id;
  d.entity_id = record.entity_id;
  d.variant = record.variant;
  d.source_path = record.path.string();
  d.text = util::normalise_newlines(util::read_text_file(record.path));
  if (util::trim(d.text).empty()) {
    throw CorpusError("document '" + record.doc_id + "' is empty: " + record.path.string());
  }
  return d;
}

std::vector<Document> load_documents(const CorpusManifest& manifest, Variant variant) {
  std::vector<Document> docs;
  for (const auto& record : manifest.documents) {
    if (record.variant == variant) docs.push_back(load_document(manifest, record));
  }
  return docs;
}

std::vector<DocumentPair> load_pairs(const CorpusManifest& manifest, Variant anonymised_variant) {
  std::map<std::string, const DocumentRecord*> originals;
  std::map<std::string, const DocumentRecord*> counterparts;
  for (const auto& record : manifest.documents) {
    if (record.variant == Variant::original) originals[record.doc_id] = &record;
    if (record.variant == anonymised_variant) counterparts[record.doc_id] = &record;
  }
  for (const auto& [doc_id, record] : counterparts) {
    (void)record;
    if (!originals.count(doc_id)) throw MissingCounterpartError(doc_id);
  }
  std::vector<DocumentPair> pairs;
  pairs.reserve(originals.size());
  for (const auto& [doc_id, orig_record] : originals) {
    auto it = counterparts.find(doc_id);
    if (it == counterparts.end()) throw MissingCounterpartError(doc_id);
    DocumentPair pair;
    pair.original = load_document(manifest, *orig_record);
    pair.anonymised = load_document(manifest, *it->second);
    if (pair.original.entity_id != pair.anonymised.entity_id) {
      throw CorpusError("pair '" + doc_id + "' has mismatched entity labels");
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace anonrisk::corpus
