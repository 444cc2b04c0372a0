#include "anonrisk/align.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "anonrisk/util.hpp"

namespace anonrisk::align {

namespace {

// ---------------------------------------------------------------------------
// code-point scanning

struct Cp {
  char32_t value = 0;
  std::size_t begin = 0;
  std::size_t size = 1;
};

std::vector<Cp> decode(std::string_view s) {
  std::vector<Cp> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    char32_t value = c;
    if (c >= 0xF0) {
      extra = 3;
      value = c & 0x07u;
    } else if (c >= 0xE0) {
      extra = 2;
      value = c & 0x0Fu;
    } else if (c >= 0xC0) {
      extra = 1;
      value = c & 0x1Fu;
    }
    if (extra > 0 && i + extra < s.size()) {
      bool ok = true;
      for (std::size_t k = 1; k <= extra; ++k) {
        unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0u) != 0x80u) {
          ok = false;
          break;
        }
        value = (value << 6) | (cc & 0x3Fu);
      }
      if (ok) {
        out.push_back({value, i, extra + 1});
        i += extra + 1;
        continue;
      }
    }
    // Invalid or truncated sequence: treat the byte as an opaque symbol.
    out.push_back({c, i, 1});
    ++i;
  }
  return out;
}

bool is_space_cp(char32_t c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return true;
  if (c == 0xA0 || c == 0x3000 || c == 0x202F || c == 0x205F) return true;
  return c >= 0x2000 && c <= 0x200A;
}

bool is_ascii_digit(char32_t c) { return c >= '0' && c <= '9'; }

bool is_nonascii_punct(char32_t c) {
  if (c == 0xA1 || c == 0xAB || c == 0xBB || c == 0xBF || c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x2010 && c <= 0x2027) return true;  // dashes, quotes, bullets, ellipsis
  if (c >= 0x2030 && c <= 0x205E) return true;
  if (c >= 0x2E00 && c <= 0x2E7F) return true;
  if (c >= 0x3001 && c <= 0x303F) return true;
  if (c == 0x2028 || c == 0x2029) return false;  // handled as whitespace
  return false;
}

bool is_word_cp(char32_t c) {
  if (c < 0x80) {
    return is_ascii_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  return !is_space_cp(c) && !is_nonascii_punct(c);
}

// Characters that keep a word together when flanked by word characters.
bool is_connector_cp(char32_t c) { return c == '\'' || c == '-' || c == 0x2019; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  const std::vector<Cp> cps = decode(text);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_space_cp(cps[i].value) || cps[i].value == 0x2028 || cps[i].value == 0x2029) {
      ++i;
      continue;
    }
    if (is_word_cp(cps[i].value)) {
      std::size_t j = i;
      bool all_digits = true;
      while (j < cps.size()) {
        if (is_word_cp(cps[j].value)) {
          all_digits = all_digits && is_ascii_digit(cps[j].value);
          ++j;
          continue;
        }
        if (is_connector_cp(cps[j].value) && j + 1 < cps.size() &&
            is_word_cp(cps[j + 1].value)) {
          all_digits = false;
          ++j;
          continue;
        }
        break;
      }
      std::size_t begin = cps[i].begin;
      std::size_t end = cps[j - 1].begin + cps[j - 1].size;
      Token tok;
      tok.surface = std::string(text.substr(begin, end - begin));
      tok.span = {begin, end};
      tok.kind = all_digits ? TokenKind::number : TokenKind::word;
      out.push_back(std::move(tok));
      i = j;
      continue;
    }
    // punctuation: one code point per token
    Token tok;
    tok.surface = std::string(text.substr(cps[i].begin, cps[i].size));
    tok.span = {cps[i].begin, cps[i].begin + cps[i].size};
    tok.kind = TokenKind::punctuation;
    out.push_back(std::move(tok));
    ++i;
  }
  return out;
}

std::size_t count_tokens(std::string_view text) { return tokenize(text).size(); }

// ---------------------------------------------------------------------------
// tag grammar

bool is_tag_token(std::string_view surface) { return parse_tag(surface).has_value(); }

std::optional<ParsedTag> parse_tag(std::string_view surface) {
  if (auto cat = mask::tag_from_name(surface)) {
    return ParsedTag{*cat, std::nullopt};
  }
  auto underscore = surface.rfind('_');
  if (underscore == std::string_view::npos || underscore + 1 >= surface.size()) {
    return std::nullopt;
  }
  std::string_view digits = surface.substr(underscore + 1);
  if (!std::all_of(digits.begin(), digits.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  auto cat = mask::tag_from_name(surface.substr(0, underscore));
  if (!cat) return std::nullopt;
  int instance = 0;
  for (char c : digits) instance = instance * 10 + (c - '0');
  if (instance < 1) return std::nullopt;
  return ParsedTag{*cat, instance};
}

std::string strip_tags(const std::string& anon_text) {
  std::vector<Token> tokens = tokenize(anon_text);
  std::string without;
  without.reserve(anon_text.size());
  std::size_t cursor = 0;
  for (const auto& tok : tokens) {
    if (!is_tag_token(tok.surface)) continue;
    without.append(anon_text, cursor, tok.span.begin - cursor);
    cursor = tok.span.end;
  }
  without.append(anon_text, cursor, anon_text.size() - cursor);

  std::string collapsed = util::collapse_whitespace(without);

  // Drop the space a removed tag leaves in front of trailing punctuation:
  // "PERSON_FIRSTNAME_1, who" -> ", who" -> ", who" (not " , who").
  std::string out;
  out.reserve(collapsed.size());
  for (std::size_t i = 0; i < collapsed.size(); ++i) {
    char c = collapsed[i];
    if (c == ' ' && i + 1 < collapsed.size()) {
      char n = collapsed[i + 1];
      if (n == ',' || n == '.' || n == ';' || n == ':' || n == '!' || n == '?' ||
          n == ')' || n == ']' || n == '}' || n == '\'') {
        continue;
      }
    }
    out += c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// alignment

namespace {

// Longest common subsequence over token surfaces. Tag tokens on the tagged
// side never anchor. Returns matched index pairs in increasing order.
std::vector<std::pair<std::size_t, std::size_t>> lcs_anchors(
    const std::vector<Token>& value_tokens, const std::vector<Token>& tagged_tokens,
    const std::vector<bool>& is_tag) {
  const std::size_t n = value_tokens.size();
  const std::size_t m = tagged_tokens.size();
  std::vector<std::uint32_t> dp((n + 1) * (m + 1), 0);
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (!is_tag[j - 1] && value_tokens[i - 1].surface == tagged_tokens[j - 1].surface) {
        dp[at(i, j)] = dp[at(i - 1, j - 1)] + 1;
      } else {
        dp[at(i, j)] = std::max(dp[at(i - 1, j)], dp[at(i, j - 1)]);
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> anchors;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 && j > 0) {
    if (!is_tag[j - 1] && value_tokens[i - 1].surface == tagged_tokens[j - 1].surface &&
        dp[at(i, j)] == dp[at(i - 1, j - 1)] + 1) {
      anchors.emplace_back(i - 1, j - 1);
      --i;
      --j;
    } else if (dp[at(i - 1, j)] >= dp[at(i, j - 1)]) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(anchors.begin(), anchors.end());
  return anchors;
}

struct Region {
  std::size_t value_begin = 0;
  std::size_t value_end = 0;
  std::vector<std::size_t> tag_indices;   // indices into tagged_tokens
  std::vector<std::size_t> extra_indices; // unmatched non-tag tagged tokens
};

using BindingKey = std::pair<mask::TagCategory, int>;

std::vector<std::string> folded_run(const std::vector<Token>& tokens, std::size_t begin,
                                    std::size_t end) {
  std::vector<std::string> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(util::case_fold(tokens[i].surface));
  return out;
}

}  // namespace

TaggedAlignment align_tagged(const std::vector<Token>& value_tokens,
                             const std::vector<Token>& tagged_tokens) {
  TaggedAlignment result;

  std::vector<bool> is_tag(tagged_tokens.size(), false);
  std::vector<std::optional<ParsedTag>> parsed(tagged_tokens.size());
  for (std::size_t j = 0; j < tagged_tokens.size(); ++j) {
    parsed[j] = parse_tag(tagged_tokens[j].surface);
    is_tag[j] = parsed[j].has_value();
  }

  const auto anchors = lcs_anchors(value_tokens, tagged_tokens, is_tag);

  // Cut the token streams into regions between consecutive anchors.
  std::vector<Region> regions;
  std::size_t vi = 0;
  std::size_t tj = 0;
  auto flush_region = [&](std::size_t value_end, std::size_t tagged_end) {
    if (vi == value_end && tj == tagged_end) return;
    Region region;
    region.value_begin = vi;
    region.value_end = value_end;
    for (std::size_t j = tj; j < tagged_end; ++j) {
      if (is_tag[j]) {
        region.tag_indices.push_back(j);
      } else {
        region.extra_indices.push_back(j);
      }
    }
    regions.push_back(std::move(region));
  };
  for (const auto& [ai, aj] : anchors) {
    flush_region(ai, aj);
    vi = ai + 1;
    tj = aj + 1;
  }
  flush_region(value_tokens.size(), tagged_tokens.size());

  // Unmatched non-tag tokens on the tagged side are insertions; report them.
  for (const auto& region : regions) {
    for (std::size_t j : region.extra_indices) {
      result.unmapped.push_back(tagged_tokens[j].surface);
    }
  }

  // Instance-consistency evidence: once some region shows which token run a
  // numbered tag replaced, every other occurrence of that tag binds the same
  // case-folded run.
  std::map<BindingKey, std::vector<std::string>> bindings;

  std::vector<std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>>>
      resolved(regions.size());  // per region: (tag index, value token range)
  std::vector<bool> done(regions.size(), false);
  std::vector<bool> flagged(regions.size(), false);

  auto record = [&](std::size_t region_idx, std::size_t tag_j, std::size_t vb,
                    std::size_t ve) {
    resolved[region_idx].push_back({tag_j, {vb, ve}});
    const auto& tag = *parsed[tag_j];
    if (tag.instance.has_value() && ve > vb) {
      BindingKey key{tag.category, *tag.instance};
      if (bindings.find(key) == bindings.end()) {
        bindings[key] = folded_run(value_tokens, vb, ve);
      }
    }
  };

  auto binding_for = [&](std::size_t tag_j) -> const std::vector<std::string>* {
    const auto& tag = *parsed[tag_j];
    if (!tag.instance.has_value()) return nullptr;
    auto it = bindings.find(BindingKey{tag.category, *tag.instance});
    return it == bindings.end() ? nullptr : &it->second;
  };

  auto run_matches = [&](const std::vector<std::string>& want, std::size_t vb) {
    if (vb + want.size() > value_tokens.size()) return false;
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (util::case_fold(value_tokens[vb + k].surface) != want[k]) return false;
    }
    return true;
  };

  // try_resolve attempts a certain (evidence-backed) split of one region.
  auto try_resolve = [&](std::size_t region_idx) -> bool {
    const Region& region = regions[region_idx];
    const auto& tags = region.tag_indices;
    const std::size_t k = tags.size();
    const std::size_t m = region.value_end - region.value_begin;
    if (k == 0) {
      if (m > 0) {
        std::string joined;
        for (std::size_t i = region.value_begin; i < region.value_end; ++i) {
          if (!joined.empty()) joined += ' ';
          joined += value_tokens[i].surface;
        }
        result.unmapped.push_back(std::move(joined));
      }
      return true;
    }
    if (m == 0) {
      for (std::size_t tag_j : tags) record(region_idx, tag_j, 0, 0);
      return true;
    }
    if (k == m) {
      for (std::size_t t = 0; t < k; ++t) {
        record(region_idx, tags[t], region.value_begin + t, region.value_begin + t + 1);
      }
      return true;
    }
    if (k == 1) {
      record(region_idx, tags[0], region.value_begin, region.value_end);
      return true;
    }
    // Carve from the left with known bindings, then from the right.
    std::size_t lo = region.value_begin;
    std::size_t hi = region.value_end;
    std::size_t t_lo = 0;
    std::size_t t_hi = k;
    std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> carved;
    while (t_lo < t_hi) {
      const auto* want = binding_for(tags[t_lo]);
      if (want == nullptr || !run_matches(*want, lo) || lo + want->size() > hi) break;
      carved.push_back({tags[t_lo], {lo, lo + want->size()}});
      lo += want->size();
      ++t_lo;
    }
    while (t_hi > t_lo) {
      const auto* want = binding_for(tags[t_hi - 1]);
      if (want == nullptr || want->size() > hi - lo || !run_matches(*want, hi - want->size())) {
        break;
      }
      carved.push_back({tags[t_hi - 1], {hi - want->size(), hi}});
      hi -= want->size();
      --t_hi;
    }
    std::size_t remaining_tags = t_hi - t_lo;
    if (remaining_tags == 0 && lo == hi) {
      for (const auto& c : carved) record(region_idx, c.first, c.second.first, c.second.second);
      return true;
    }
    if (remaining_tags == 1) {
      for (const auto& c : carved) record(region_idx, c.first, c.second.first, c.second.second);
      record(region_idx, tags[t_lo], lo, hi);
      return true;
    }
    if (remaining_tags == hi - lo) {
      // exactly one token per remaining tag
      for (const auto& c : carved) record(region_idx, c.first, c.second.first, c.second.second);
      for (std::size_t t = t_lo; t < t_hi; ++t) {
        record(region_idx, tags[t], lo + (t - t_lo), lo + (t - t_lo) + 1);
      }
      return true;
    }
    return false;
  };

  // Regions whose split follows from counts resolve immediately; the rest may
  // become solvable as bindings accumulate, so sweep until a fixed point.
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (done[r]) continue;
      if (try_resolve(r)) {
        done[r] = true;
        progress = true;
      }
    }
  }

  // Positional fallback for anything still open: carve what evidence allows,
  // give pronoun tags one token, then split one-per-tag with the last tag
  // taking the remainder. These slots are flagged.
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (done[r]) continue;
    const Region& region = regions[r];
    const auto& tags = region.tag_indices;
    std::size_t lo = region.value_begin;
    std::size_t hi = region.value_end;
    std::size_t t_lo = 0;
    std::size_t t_hi = tags.size();
    while (t_lo < t_hi) {
      const auto* want = binding_for(tags[t_lo]);
      if (want == nullptr || !run_matches(*want, lo) || lo + want->size() > hi) break;
      record(r, tags[t_lo], lo, lo + want->size());
      lo += want->size();
      ++t_lo;
    }
    while (t_hi > t_lo) {
      const auto* want = binding_for(tags[t_hi - 1]);
      if (want == nullptr || want->size() > hi - lo || !run_matches(*want, hi - want->size())) {
        break;
      }
      record(r, tags[t_hi - 1], hi - want->size(), hi);
      hi -= want->size();
      --t_hi;
    }
    flagged[r] = true;
    const std::size_t n_tags = t_hi - t_lo;
    const std::size_t n_left = hi - lo;
    std::vector<std::size_t> take(n_tags, 0);
    for (std::size_t t = 0; t < n_tags && t < n_left; ++t) take[t] = 1;
    if (n_left > n_tags) {
      // Pronouns replace single tokens, so park the surplus on the last
      // non-pronoun tag when there is one.
      std::size_t target = n_tags - 1;
      for (std::size_t t = n_tags; t-- > 0;) {
        if (parsed[tags[t_lo + t]]->category != mask::TagCategory::pronoun) {
          target = t;
          break;
        }
      }
      take[target] += n_left - n_tags;
    }
    for (std::size_t t = 0; t < n_tags; ++t) {
      record(r, tags[t_lo + t], lo, lo + take[t]);
      lo += take[t];
    }
  }

  // Emit slots in tag order with the ambiguity flag of their region.
  for (std::size_t r = 0; r < regions.size(); ++r) {
    std::sort(resolved[r].begin(), resolved[r].end());
    for (const auto& [tag_j, range] : resolved[r]) {
      TagSlot slot;
      slot.tag_index = tag_j;
      slot.tag = parsed[tag_j]->category;
      slot.instance = parsed[tag_j]->instance;
      for (std::size_t i = range.first; i < range.second; ++i) {
        slot.value_tokens.push_back(value_tokens[i]);
      }
      slot.ambiguous = flagged[r];
      result.ambiguous = result.ambiguous || flagged[r];
      result.slots.push_back(std::move(slot));
    }
  }
  std::sort(result.slots.begin(), result.slots.end(),
            [](const TagSlot& a, const TagSlot& b) { return a.tag_index < b.tag_index; });
  return result;
}

AlignmentResult align_pair(const corpus::DocumentPair& pair) {
  AlignmentResult result;
  const auto value_tokens = tokenize(pair.original.text);
  const auto tagged_tokens = tokenize(pair.anonymised.text);
  TaggedAlignment aligned = align_tagged(value_tokens, tagged_tokens);
  result.unmapped = std::move(aligned.unmapped);
  result.ambiguous = aligned.ambiguous;
  for (auto& slot : aligned.slots) {
    if (slot.value_tokens.empty()) {
      result.unmapped.push_back(tagged_tokens[slot.tag_index].surface);
      continue;
    }
    AlignedRedaction red;
    red.original_tokens = std::move(slot.value_tokens);
    red.tag = slot.tag;
    red.instance = slot.instance;
    red.ambiguous = slot.ambiguous;
    result.redactions.push_back(std::move(red));
  }
  return result;
}

// ---------------------------------------------------------------------------
// excerpt matching / ablation

MatchResult match_excerpts(const corpus::Document& original,
                           const std::vector<std::string>& excerpts) {
  MatchResult result;
  result.matched.provenance = Provenance::gpt;

  std::set<std::string> original_surfaces;
  for (const auto& tok : tokenize(original.text)) {
    if (tok.kind == TokenKind::punctuation) continue;
    original_surfaces.insert(util::case_fold(tok.surface));
  }

  for (const auto& excerpt : excerpts) {
    bool any = false;
    for (const auto& tok : tokenize(excerpt)) {
      if (tok.kind == TokenKind::punctuation) continue;
      std::string folded = util::case_fold(tok.surface);
      if (original_surfaces.count(folded) > 0) {
        result.matched.items.insert(std::move(folded));
        any = true;
      }
    }
    if (!any) result.rejects.push_back(excerpt);
  }
  return result;
}

corpus::Document ablate_tokens(const corpus::Document& original, const TokenSet& sensitive) {
  corpus::Document out = original;
  out.variant = corpus::Variant::ablated;

  std::string text;
  for (const auto& tok : tokenize(original.text)) {
    if (tok.kind != TokenKind::punctuation &&
        sensitive.items.count(util::case_fold(tok.surface)) > 0) {
      continue;
    }
    if (text.empty()) {
      text += tok.surface;
    } else if (tok.kind == TokenKind::punctuation) {
      text += tok.surface;  // keep punctuation attached to its left neighbour
    } else {
      text += ' ';
      text += tok.surface;
    }
  }
  out.text = std::move(text);
  return out;
}

}  // namespace anonrisk::align
