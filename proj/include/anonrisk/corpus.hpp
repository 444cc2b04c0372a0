#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace anonrisk::corpus {

enum class Variant { original, masked, llm_rewritten, ablated };

std::string_view to_string(Variant v);
std::optional<Variant> variant_from_string(std::string_view s);

// One identity in the corpus universe. `aliases` always contains at least the
// display name, so guess matching never needs a special case.
struct EntityProfile {
  std::string entity_id;
  std::string display_name;
  std::set<std::string> aliases;
};

struct Document {
  std::string doc_id;
  std::string entity_id;
  std::string text;  // non-empty, LF newlines
  Variant variant = Variant::original;
  std::string source_path;
};

// Invariant: both sides share doc_id and entity_id; original.variant == original.
struct DocumentPair {
  Document original;
  Document anonymised;
};

struct DocumentRecord {
  std::string doc_id;
  std::string entity_id;
  Variant variant = Variant::original;
  std::filesystem::path path;  // absolute after load_manifest
};

struct CorpusManifest {
  std::vector<EntityProfile> entities;
  // Sorted by (doc_id, variant); label_overrides already applied.
  std::vector<DocumentRecord> documents;
  std::map<std::string, std::string> label_overrides;
  std::filesystem::path base_dir;

  const EntityProfile* find_entity(const std::string& entity_id) const;
};

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownEntityError : CorpusError {
  using CorpusError::CorpusError;
};

struct MissingCounterpartError : CorpusError {
  explicit MissingCounterpartError(const std::string& doc_id)
      : CorpusError("no anonymised counterpart for doc '" + doc_id + "'"), doc_id(doc_id) {}
  std::string doc_id;
};

// Parses and validates the manifest JSON. Relative document paths are resolved
// against the manifest's directory; every referenced file must be readable.
CorpusManifest load_manifest(const std::filesystem::path& manifest_path);

// Reads a single document text (UTF-8, newlines normalised to LF).
Document load_document(const CorpusManifest& manifest, const DocumentRecord& record);

std::vector<Document> load_documents(const CorpusManifest& manifest, Variant variant);

// Pairs every original with its counterpart of `anonymised_variant`.
// Throws MissingCounterpartError when either side of a pair is absent.
std::vector<DocumentPair> load_pairs(const CorpusManifest& manifest,
                                     Variant anonymised_variant = Variant::masked);

}  // namespace anonrisk::corpus
