#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "anonrisk/corpus.hpp"

namespace anonrisk::mask {

// Closed tag schema. Serialised form is the upper-snake name.
enum class TagCategory {
  person_firstname,
  person_lastname,
  occupation,
  location,
  time_of_day,
  organization,
  date,
  address,
  phone_number,
  email_address,
  other_identifying_attribute,
  pronoun,
  numeric,
  title,
};

inline constexpr int kTagCategoryCount = 14;

std::string_view tag_name(TagCategory c);
std::optional<TagCategory> tag_from_name(std::string_view name);
const std::vector<TagCategory>& all_tag_categories();

// Byte range, half-open.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

// One replaced span. Identical (category, case-folded surface) pairs share the
// same instance number document-wide; PRONOUN carries no instance and renders
// as the bare tag.
struct Redaction {
  Span span;
  std::string surface;
  TagCategory category = TagCategory::other_identifying_attribute;
  std::optional<int> instance;

  std::string tag_text() const;  // e.g. "PERSON_FIRSTNAME_1", "PRONOUN"
};

struct PatternToggles {
  bool date = false;
  bool time_of_day = false;
  bool numeric = false;
  bool email = false;
  bool phone = false;
  bool address = false;
};

// Term lists plus pattern-rule toggles. A default-constructed gazetteer
// matches nothing; the file loader turns every pattern rule on unless the
// file says otherwise and installs the third-person pronoun closed class.
class Gazetteer {
 public:
  Gazetteer() = default;

  static Gazetteer load(const std::filesystem::path& path);
  static Gazetteer from_json_text(const std::string& text);

  // Terms are case-folded on entry; multi-word terms are allowed and win over
  // shorter matches.
  void add_term(TagCategory category, std::string_view term);
  void set_pronouns(std::set<std::string> pronouns);
  static const std::set<std::string>& default_pronouns();

  const std::vector<std::string>& terms(TagCategory category) const;
  const std::set<std::string>& pronouns() const { return pronouns_; }
  bool has_term(TagCategory category, std::string_view folded) const;
  // True when `folded_tokens` matches any term of any category as a whole run.
  bool contains_token_run(const std::vector<std::string>& folded_tokens) const;

  // Matching index: each term stored as its folded token sequence.
  struct Bucket {
    std::set<std::vector<std::string>> phrases;
    std::size_t max_len = 0;
  };
  const Bucket* bucket(TagCategory category) const;

  PatternToggles patterns;

 private:
  std::map<TagCategory, std::vector<std::string>> terms_;
  std::map<TagCategory, Bucket> buckets_;
  std::set<std::string> pronouns_;
};

struct MaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OverlappingSpansError : MaskError {
  using MaskError::MaskError;
  OverlappingSpansError(Span a, Span b);
};

// Tags every token the gazetteer or a pattern rule recognises. Redactions come
// back sorted by span start, non-overlapping, longest match first, with
// instance numbers already assigned.
std::vector<Redaction> classify(const std::string& text, const Gazetteer& gazetteer);

// Replaces every redacted span with its tag; all other bytes are copied
// verbatim. Missing instance numbers are assigned by first appearance of each
// distinct (category, case-folded surface).
std::string apply(const std::string& text, std::vector<Redaction> redactions);

// Inverse of apply: rebuilds the original text from the masked text and the
// redaction list. Exact round-trip.
std::string reconstruct(const std::string& masked_text, const std::vector<Redaction>& redactions);

struct MaskResult {
  corpus::DocumentPair pair;
  std::vector<Redaction> redactions;
};

MaskResult mask_document(const corpus::Document& doc, const Gazetteer& gazetteer);

std::string redactions_to_json(const std::vector<Redaction>& redactions);
std::vector<Redaction> redactions_from_json(const std::string& text);

}  // namespace anonrisk::mask
