#include "anonrisk/mask.hpp"

#include <algorithm>
#include <array>
#include <regex>

#include "json.hpp"

#include "anonrisk/align.hpp"
#include "anonrisk/util.hpp"

namespace anonrisk::mask {

namespace {

struct TagNameEntry {
  TagCategory category;
  const char* name;
};

constexpr std::array<TagNameEntry, kTagCategoryCount> kTagNames = {{
    {TagCategory::person_firstname, "PERSON_FIRSTNAME"},
    {TagCategory::person_lastname, "PERSON_LASTNAME"},
    {TagCategory::occupation, "OCCUPATION"},
    {TagCategory::location, "LOCATION"},
    {TagCategory::time_of_day, "TIME"},
    {TagCategory::organization, "ORGANIZATION"},
    {TagCategory::date, "DATE"},
    {TagCategory::address, "ADDRESS"},
    {TagCategory::phone_number, "PHONE_NUMBER"},
    {TagCategory::email_address, "EMAIL_ADDRESS"},
    {TagCategory::other_identifying_attribute, "OTHER_IDENTIFYING_ATTRIBUTE"},
    {TagCategory::pronoun, "PRONOUN"},
    {TagCategory::numeric, "NUMERIC"},
    {TagCategory::title, "TITLE"},
}};

}  // namespace

std::string_view tag_name(TagCategory c) {
  for (const auto& entry : kTagNames) {
    if (entry.category == c) return entry.name;
  }
  throw MaskError("unknown tag category");
}

std::optional<TagCategory> tag_from_name(std::string_view name) {
  for (const auto& entry : kTagNames) {
    if (name == entry.name) return entry.category;
  }
  return std::nullopt;
}

const std::vector<TagCategory>& all_tag_categories() {
  static const std::vector<TagCategory> kAll = [] {
    std::vector<TagCategory> v;
    v.reserve(kTagNames.size());
    for (const auto& entry : kTagNames) v.push_back(entry.category);
    return v;
  }();
  return kAll;
}

std::string Redaction::tag_text() const {
  std::string out{tag_name(category)};
  if (category != TagCategory::pronoun && instance.has_value()) {
    out += '_';
    out += std::to_string(*instance);
  }
  return out;
}

OverlappingSpansError::OverlappingSpansError(Span a, Span b)
    : MaskError("redaction spans overlap: [" + std::to_string(a.begin) + "," +
                std::to_string(a.end) + ") and [" + std::to_string(b.begin) + "," +
                std::to_string(b.end) + ")") {}

// ---------------------------------------------------------------------------
// Gazetteer

const std::set<std::string>& Gazetteer::default_pronouns() {
  static const std::set<std::string> kPronouns = {
      "he",      "him",     "his",  "she",  "her",   "hers",
      "himself", "herself", "they", "them", "their", "theirs",
      "themself", "themselves"};
  return kPronouns;
}

void Gazetteer::add_term(TagCategory category, std::string_view term) {
  std::string folded = util::case_fold(term);
  std::vector<std::string> parts;
  for (const auto& tok : align::tokenize(folded)) parts.push_back(tok.surface);
  if (parts.empty()) return;
  auto& bucket = buckets_[category];
  bucket.max_len = std::max(bucket.max_len, parts.size());
  if (bucket.phrases.insert(parts).second) {
    terms_[category].push_back(std::move(folded));
  }
}

void Gazetteer::set_pronouns(std::set<std::string> pronouns) {
  pronouns_.clear();
  for (const auto& p : pronouns) pronouns_.insert(util::case_fold(p));
}

const std::vector<std::string>& Gazetteer::terms(TagCategory category) const {
  static const std::vector<std::string> kEmpty;
  auto it = terms_.find(category);
  return it == terms_.end() ? kEmpty : it->second;
}

bool Gazetteer::has_term(TagCategory category, std::string_view folded) const {
  auto it = buckets_.find(category);
  if (it == buckets_.end()) return false;
  std::vector<std::string> parts;
  for (const auto& tok : align::tokenize(util::case_fold(folded))) {
    parts.push_back(tok.surface);
  }
  return it->second.phrases.count(parts) > 0;
}

bool Gazetteer::contains_token_run(const std::vector<std::string>& folded_tokens) const {
  for (const auto& [category, bucket] : buckets_) {
    (void)category;
    if (bucket.phrases.count(folded_tokens) > 0) return true;
  }
  return false;
}

const Gazetteer::Bucket* Gazetteer::bucket(TagCategory category) const {
  auto it = buckets_.find(category);
  return it == buckets_.end() ? nullptr : &it->second;
}

namespace {

const std::map<std::string, TagCategory, std::less<>>& gazetteer_keys() {
  static const std::map<std::string, TagCategory, std::less<>> kKeys = {
      {"person_firstname", TagCategory::person_firstname},
      {"first_names", TagCategory::person_firstname},
      {"person_lastname", TagCategory::person_lastname},
      {"last_names", TagCategory::person_lastname},
      {"occupation", TagCategory::occupation},
      {"occupations", TagCategory::occupation},
      {"location", TagCategory::location},
      {"locations", TagCategory::location},
      {"organization", TagCategory::organization},
      {"organizations", TagCategory::organization},
      {"title", TagCategory::title},
      {"titles", TagCategory::title},
      {"other_identifying_attribute", TagCategory::other_identifying_attribute},
      {"other_identifying", TagCategory::other_identifying_attribute},
      {"date", TagCategory::date},
      {"dates", TagCategory::date},
      {"address", TagCategory::address},
      {"addresses", TagCategory::address},
  };
  return kKeys;
}

}  // namespace

Gazetteer Gazetteer::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MaskError(std::string("gazetteer is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MaskError("gazetteer root must be a JSON object");

  Gazetteer gaz;
  gaz.patterns = PatternToggles{true, true, true, true, true, true};
  gaz.pronouns_ = default_pronouns();

  const auto& keys = gazetteer_keys();
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "pronouns") {
      if (!it.value().is_array()) throw MaskError("gazetteer 'pronouns' must be an array");
      std::set<std::string> pronouns;
      for (const auto& p : it.value()) pronouns.insert(p.get<std::string>());
      gaz.set_pronouns(std::move(pronouns));
      continue;
    }
    if (key == "patterns") {
      if (!it.value().is_object()) throw MaskError("gazetteer 'patterns' must be an object");
      const auto& obj = it.value();
      auto toggle = [&obj](const char* name) {
        return obj.contains(name) ? obj.at(name).get<bool>() : true;
      };
      gaz.patterns.date = toggle("date");
      gaz.patterns.time_of_day = toggle("time");
      gaz.patterns.numeric = toggle("numeric");
      gaz.patterns.email = toggle("email");
      gaz.patterns.phone = toggle("phone");
      gaz.patterns.address = toggle("address");
      continue;
    }
    auto cat = keys.find(key);
    if (cat == keys.end()) throw MaskError("unknown gazetteer key: " + key);
    if (!it.value().is_array()) throw MaskError("gazetteer '" + key + "' must be an array");
    for (const auto& term : it.value()) gaz.add_term(cat->second, term.get<std::string>());
  }
  return gaz;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
  return from_json_text(util::read_text_file(path));
}

// ---------------------------------------------------------------------------
// classify

namespace {

// Lower value wins when two candidates start at the same offset with the same
// length. Structured patterns outrank list lookups, which outrank the
// closed-class fallbacks.
enum RulePriority : int {
  kPriorityEmail = 0,
  kPriorityPhone = 1,
  kPriorityTime = 2,
  kPriorityDate = 3,
  kPriorityAddress = 4,
  kPriorityGazetteer = 5,
  kPriorityPronoun = 6,
  kPriorityNumeric = 7,
};

struct Candidate {
  Span span;
  TagCategory category;
  int priority = kPriorityGazetteer;
};

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int parse_int(std::string_view s) {
  int value = 0;
  for (char c : s) value = value * 10 + (c - '0');
  return value;
}

bool is_month_name(const std::string& folded) {
  static const std::set<std::string> kMonths = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december",
      "jan",     "feb",      "mar",       "apr",     "jun",      "jul",
      "aug",     "sep",      "sept",      "oct",     "nov",      "dec"};
  return kMonths.count(folded) > 0;
}

bool is_day_token(const align::Token& tok, const std::string& folded) {
  if (tok.kind == align::TokenKind::number) {
    if (tok.surface.size() > 2 || !all_digits(tok.surface)) return false;
    int v = parse_int(tok.surface);
    return v >= 1 && v <= 31;
  }
  static const std::regex kOrdinal("^([0-9]{1,2})(st|nd|rd|th)$");
  std::smatch m;
  if (!std::regex_match(folded, m, kOrdinal)) return false;
  int v = parse_int(m[1].str());
  return v >= 1 && v <= 31;
}

bool is_year_token(const align::Token& tok) {
  if (tok.kind != align::TokenKind::number || tok.surface.size() != 4 ||
      !all_digits(tok.surface)) {
    return false;
  }
  int v = parse_int(tok.surface);
  return v >= 1500 && v <= 2100;
}

bool is_street_suffix(const std::string& folded) {
  static const std::set<std::string> kSuffixes = {
      "street", "st", "road", "rd", "avenue", "ave", "lane", "ln",
      "drive",  "dr", "boulevard", "blvd", "way", "court", "ct",
      "square", "sq", "terrace", "crescent", "close"};
  return kSuffixes.count(folded) > 0;
}

void add_regex_candidates(const std::string& text, const std::regex& re,
                          TagCategory category, int priority,
                          std::vector<Candidate>& out) {
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
       it != std::sregex_iterator(); ++it) {
    Span span{static_cast<std::size_t>(it->position(0)),
              static_cast<std::size_t>(it->position(0) + it->length(0))};
    out.push_back({span, category, priority});
  }
}

}  // namespace

std::vector<Redaction> classify(const std::string& text, const Gazetteer& gazetteer) {
  const std::vector<align::Token> tokens = align::tokenize(text);
  std::vector<std::string> folded(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    folded[i] = util::case_fold(tokens[i].surface);
  }

  std::vector<Candidate> candidates;

  // --- raw-text patterns -------------------------------------------------
  if (gazetteer.patterns.email) {
    static const std::regex kEmail(
        R"([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,})");
    add_regex_candidates(text, kEmail, TagCategory::email_address, kPriorityEmail,
                         candidates);
  }
  if (gazetteer.patterns.phone) {
    // Only shapes with unambiguous phone punctuation: an international prefix,
    // a parenthesised area code, or hyphen-joined digit groups. Plain
    // space-separated numbers are left to the date and numeric rules.
    static const std::regex kPhone(
        R"((\+[0-9][0-9 ()-]{6,}[0-9])|(\([0-9]{2,5}\)[ -]?[0-9][0-9 -]{4,}[0-9])|(\b[0-9]{2,5}-[0-9]{3,4}-[0-9]{3,5}\b))");
    add_regex_candidates(text, kPhone, TagCategory::phone_number, kPriorityPhone,
                         candidates);
  }
  if (gazetteer.patterns.time_of_day) {
    // Meridiem suffixes are either fully dotted ("a.m.") or bare ("am");
    // "am." would swallow the sentence-ending period.
    static const std::regex kClock(
        R"(\b[0-9]{1,2}:[0-9]{2}(:[0-9]{2})?( ?([ap]m|[AP]M|[ap]\.m\.|[AP]\.M\.))?)");
    add_regex_candidates(text, kClock, TagCategory::time_of_day, kPriorityTime,
                         candidates);
    static const std::regex kAmPm(R"(\b[0-9]{1,2} ?([ap]m|[AP]M)\b)");
    add_regex_candidates(text, kAmPm, TagCategory::time_of_day, kPriorityTime,
                         candidates);
  }
  if (gazetteer.patterns.date) {
    // Slash and dot dates stay one unit; spelled-out dates are tagged per
    // token below, so "26 July 1943" becomes three adjacent tags.
    static const std::regex kSlashDate(
        R"(\b[0-9]{1,2}[/.][0-9]{1,2}[/.][0-9]{2,4}\b)");
    add_regex_candidates(text, kSlashDate, TagCategory::date, kPriorityDate,
                         candidates);
  }

  // --- token-run date rule ------------------------------------------------
  if (gazetteer.patterns.date) {
    enum class Role { none, month, day, year };
    std::vector<Role> roles(tokens.size(), Role::none);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].kind == align::TokenKind::punctuation) continue;
      if (is_month_name(folded[i])) {
        roles[i] = Role::month;
      } else if (is_year_token(tokens[i])) {
        roles[i] = Role::year;
      } else if (is_day_token(tokens[i], folded[i])) {
        roles[i] = Role::day;
      }
    }
    std::size_t i = 0;
    while (i < tokens.size()) {
      if (roles[i] == Role::none) {
        ++i;
        continue;
      }
      std::size_t j = i;
      bool has_month = false;
      while (j < tokens.size() && roles[j] != Role::none) {
        has_month = has_month || roles[j] == Role::month;
        ++j;
      }
      for (std::size_t k = i; k < j; ++k) {
        // Day numbers only count inside a run containing a month name;
        // "aged 26" stays numeric, while a lone year or month is a date.
        if (!has_month && roles[k] == Role::day) continue;
        candidates.push_back({tokens[k].span, TagCategory::date, kPriorityDate});
      }
      i = j;
    }
  }

  // --- address rule -------------------------------------------------------
  if (gazetteer.patterns.address) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].kind != align::TokenKind::number) continue;
      for (std::size_t j = i + 1; j <= i + 3 && j < tokens.size(); ++j) {
        if (tokens[j].kind != align::TokenKind::word) break;
        if (is_street_suffix(folded[j])) {
          candidates.push_back({Span{tokens[i].span.begin, tokens[j].span.end},
                                TagCategory::address, kPriorityAddress});
          break;
        }
      }
    }
  }

  // --- gazetteer phrases --------------------------------------------------
  for (TagCategory category : all_tag_categories()) {
    const auto* bucket = gazetteer.bucket(category);
    if (bucket == nullptr || bucket->phrases.empty()) continue;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::size_t max_len = std::min(bucket->max_len, tokens.size() - i);
      for (std::size_t len = max_len; len >= 1; --len) {
        std::vector<std::string> run(folded.begin() + static_cast<std::ptrdiff_t>(i),
                                     folded.begin() + static_cast<std::ptrdiff_t>(i + len));
        if (bucket->phrases.count(run) > 0) {
          candidates.push_back({Span{tokens[i].span.begin, tokens[i + len - 1].span.end},
                                category, kPriorityGazetteer});
          break;  // longest match at this start wins for this category
        }
      }
    }
  }

  // --- closed classes -----------------------------------------------------
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind == align::TokenKind::word &&
        gazetteer.pronouns().count(folded[i]) > 0) {
      candidates.push_back({tokens[i].span, TagCategory::pronoun, kPriorityPronoun});
    }
    if (gazetteer.patterns.numeric && tokens[i].kind == align::TokenKind::number &&
        all_digits(tokens[i].surface)) {
      candidates.push_back({tokens[i].span, TagCategory::numeric, kPriorityNumeric});
    }
  }

  // --- greedy non-overlapping selection ------------------------------------
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.span.begin != b.span.begin) return a.span.begin < b.span.begin;
              std::size_t la = a.span.end - a.span.begin;
              std::size_t lb = b.span.end - b.span.begin;
              if (la != lb) return la > lb;
              if (a.priority != b.priority) return a.priority < b.priority;
              return static_cast<int>(a.category) < static_cast<int>(b.category);
            });

  std::vector<Redaction> out;
  std::size_t current_end = 0;
  for (const auto& cand : candidates) {
    if (!out.empty() && cand.span.begin < current_end) continue;
    Redaction red;
    red.span = cand.span;
    red.surface = text.substr(cand.span.begin, cand.span.end - cand.span.begin);
    red.category = cand.category;
    out.push_back(std::move(red));
    current_end = cand.span.end;
  }

  // --- instance numbering ---------------------------------------------------
  std::map<TagCategory, std::map<std::string, int>> seen;
  for (auto& red : out) {
    if (red.category == TagCategory::pronoun) continue;
    auto& by_surface = seen[red.category];
    std::string key = util::case_fold(red.surface);
    auto it = by_surface.find(key);
    if (it == by_surface.end()) {
      int next = static_cast<int>(by_surface.size()) + 1;
      it = by_surface.emplace(std::move(key), next).first;
    }
    red.instance = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// apply / reconstruct

std::string apply(const std::string& text, std::vector<Redaction> redactions) {
  std::sort(redactions.begin(), redactions.end(),
            [](const Redaction& a, const Redaction& b) { return a.span.begin < b.span.begin; });

  for (std::size_t i = 0; i < redactions.size(); ++i) {
    const auto& red = redactions[i];
    if (red.span.begin >= red.span.end || red.span.end > text.size()) {
      throw MaskError("redaction span out of range");
    }
    if (i > 0 && red.span.begin < redactions[i - 1].span.end) {
      throw OverlappingSpansError(redactions[i - 1].span, red.span);
    }
    std::string_view actual(text.data() + red.span.begin, red.span.end - red.span.begin);
    if (!red.surface.empty() && red.surface != actual) {
      throw MaskError("redaction surface does not match the text at its span");
    }
  }

  // Fill in missing instance numbers without disturbing any the caller set.
  std::map<TagCategory, std::map<std::string, int>> assigned;
  std::map<TagCategory, int> next;
  for (auto& red : redactions) {
    if (red.surface.empty()) {
      red.surface = text.substr(red.span.begin, red.span.end - red.span.begin);
    }
    if (red.category == TagCategory::pronoun || !red.instance.has_value()) continue;
    assigned[red.category][util::case_fold(red.surface)] = *red.instance;
    next[red.category] = std::max(next[red.category], *red.instance);
  }
  for (auto& red : redactions) {
    if (red.category == TagCategory::pronoun || red.instance.has_value()) continue;
    std::string key = util::case_fold(red.surface);
    auto& by_surface = assigned[red.category];
    auto it = by_surface.find(key);
    if (it == by_surface.end()) {
      it = by_surface.emplace(std::move(key), ++next[red.category]).first;
    }
    red.instance = it->second;
  }

  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (const auto& red : redactions) {
    out.append(text, cursor, red.span.begin - cursor);
    out += red.tag_text();
    cursor = red.span.end;
  }
  out.append(text, cursor, text.size() - cursor);
  return out;
}

std::string reconstruct(const std::string& masked_text,
                        const std::vector<Redaction>& redactions) {
  std::vector<Redaction> sorted = redactions;
  std::sort(sorted.begin(), sorted.end(),
            [](const Redaction& a, const Redaction& b) { return a.span.begin < b.span.begin; });

  std::string out;
  std::size_t masked_cursor = 0;    // position in masked_text
  std::size_t original_cursor = 0;  // position in the text being rebuilt
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& red = sorted[i];
    if (red.span.begin < original_cursor) {
      throw OverlappingSpansError(sorted[i - 1].span, red.span);
    }
    std::size_t gap = red.span.begin - original_cursor;
    if (masked_cursor + gap > masked_text.size()) {
      throw MaskError("masked text is shorter than the redaction layout implies");
    }
    out.append(masked_text, masked_cursor, gap);
    masked_cursor += gap;
    std::string tag = red.tag_text();
    if (masked_text.compare(masked_cursor, tag.size(), tag) != 0) {
      throw MaskError("masked text does not carry the expected tag '" + tag +
                      "' at offset " + std::to_string(masked_cursor));
    }
    masked_cursor += tag.size();
    out += red.surface;
    original_cursor = red.span.end;
  }
  out.append(masked_text, masked_cursor, masked_text.size() - masked_cursor);
  return out;
}

MaskResult mask_document(const corpus::Document& doc, const Gazetteer& gazetteer) {
  MaskResult result;
  result.redactions = classify(doc.text, gazetteer);
  corpus::Document anonymised;
  anonymised.doc_id = doc.doc_id;
  anonymised.entity_id = doc.entity_id;
  anonymised.variant = corpus::Variant::masked;
  anonymised.text = apply(doc.text, result.redactions);
  result.pair.original = doc;
  result.pair.anonymised = std::move(anonymised);
  return result;
}

// ---------------------------------------------------------------------------
// sidecar serialisation

std::string redactions_to_json(const std::vector<Redaction>& redactions) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& red : redactions) {
    nlohmann::json item;
    item["begin"] = red.span.begin;
    item["end"] = red.span.end;
    item["surface"] = red.surface;
    item["category"] = std::string(tag_name(red.category));
    if (red.instance.has_value()) {
      item["instance"] = *red.instance;
    } else {
      item["instance"] = nullptr;
    }
    arr.push_back(std::move(item));
  }
  return arr.dump(2) + "\n";
}

std::vector<Redaction> redactions_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MaskError(std::string("redaction sidecar is not valid JSON: ") + e.what());
  }
  if (!arr.is_array()) throw MaskError("redaction sidecar must be a JSON array");
  std::vector<Redaction> out;
  for (const auto& item : arr) {
    Redaction red;
    red.span.begin = item.at("begin").get<std::size_t>();
    red.span.end = item.at("end").get<std::size_t>();
    red.surface = item.at("surface").get<std::string>();
    auto cat = tag_from_name(item.at("category").get<std::string>());
    if (!cat) {
      throw MaskError("redaction sidecar names unknown category: " +
                      item.at("category").get<std::string>());
    }
    red.category = *cat;
    if (item.contains("instance") && !item.at("instance").is_null()) {
      red.instance = item.at("instance").get<int>();
    }
    out.push_back(std::move(red));
  }
  return out;
}

}  // namespace anonrisk::mask
