#pragma once

// Deterministic comment normalization applied to every corpus before
// embedding: encoding repair, exclamation and hyperlink removal, emoji
// shortcodes, punctuation-run collapsing and spacing.

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hatebench/detail/emoji_table.hpp"
#include "hatebench/detail/mojibake_table.hpp"
#include "hatebench/error.hpp"

namespace hatebench {

// Runs of three or more identical punctuation marks shrink to this length.
inline constexpr std::size_t kPunctuationEmphasisCap = 2;

// Shortcode used for emoji missing from the bundled table.
inline constexpr std::string_view kUnknownEmojiShortcode = ":emoji:";

struct NormalizationCounts {
  std::size_t exclamations_removed = 0;
  std::size_t urls_removed = 0;
  std::size_t punctuation_runs_collapsed = 0;
  std::size_t emojis_replaced = 0;
  // Texts (not characters) that needed UTF-8 or mojibake repair.
  std::size_t encoding_fixes = 0;

  NormalizationCounts& operator+=(const NormalizationCounts& o) {
    exclamations_removed += o.exclamations_removed;
    urls_removed += o.urls_removed;
    punctuation_runs_collapsed += o.punctuation_runs_collapsed;
    emojis_replaced += o.emojis_replaced;
    encoding_fixes += o.encoding_fixes;
    return *this;
  }
  bool operator==(const NormalizationCounts&) const = default;
};

namespace detail {

// Noncharacter reserved for internal use; stands in for a shortcode token
// while the punctuation rules run so that they never rewrite shortcodes.
inline constexpr char32_t kPlaceholder = 0xFDD0;

inline std::u32string to_u32(std::string_view utf8) {
  const auto u16 = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  std::u32string out(static_cast<std::size_t>(u16.countChar32()), U'\0');
  UErrorCode status = U_ZERO_ERROR;
  u16.toUTF32(reinterpret_cast<UChar32*>(out.data()), static_cast<int32_t>(out.size()), status);
  return out;
}

inline std::string to_utf8(std::u32string_view text) {
  const auto u16 = icu::UnicodeString::fromUTF32(reinterpret_cast<const UChar32*>(text.data()),
                                                 static_cast<int32_t>(text.size()));
  std::string out;
  u16.toUTF8String(out);
  return out;
}

// Ill-formed sequences become U+FFFD.
inline std::string valid_utf8(std::string_view bytes) {
  std::string out;
  icu::UnicodeString::fromUTF8(icu::StringPiece(bytes.data(), static_cast<int32_t>(bytes.size())))
      .toUTF8String(out);
  return out;
}

inline std::string nfc(const std::string& utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const auto src = icu::UnicodeString::fromUTF8(utf8);
  if (norm->isNormalized(src, status) && U_SUCCESS(status)) return utf8;
  status = U_ZERO_ERROR;
  const icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

inline bool repair_mojibake(std::string& text) {
  bool changed = false;
  bool again = true;
  while (again) {
    again = false;
    for (const auto& entry : kMojibakeTable) {
      for (auto pos = text.find(entry.broken); pos != std::string::npos;
           pos = text.find(entry.broken, pos + entry.repaired.size())) {
        text.replace(pos, entry.broken.size(), entry.repaired);
        again = changed = true;
      }
    }
  }
  return changed;
}

struct EmojiIndex {
  std::unordered_map<std::u32string, std::string_view> by_sequence;
  std::unordered_set<std::u32string> shortcodes;
  std::unordered_set<char32_t> first_codepoints;

  static const EmojiIndex& instance() {
    static const EmojiIndex index = [] {
      EmojiIndex idx;
      idx.by_sequence.reserve(kEmojiTable.size());
      for (const auto& e : kEmojiTable) {
        auto seq = to_u32(e.sequence);
        idx.first_codepoints.insert(seq.front());
        idx.by_sequence.emplace(std::move(seq), e.shortcode);
        idx.shortcodes.insert(to_u32(e.shortcode));
      }
      idx.shortcodes.insert(to_u32(kUnknownEmojiShortcode));
      return idx;
    }();
    return index;
  }
};

inline bool is_emoji_codepoint(char32_t c) {
  if (c < 0x80) return false;
  const auto cp = static_cast<UChar32>(c);
  return u_hasBinaryProperty(cp, UCHAR_EMOJI) || u_hasBinaryProperty(cp, UCHAR_EXTENDED_PICTOGRAPHIC);
}

// Codepoints that continue an emoji sequence not found in the table.
inline bool is_emoji_continuation(char32_t c) {
  return c == 0xFE0F || c == 0xFE0E || c == 0x20E3 || (c >= 0x1F3FB && c <= 0x1F3FF) ||
         (c >= 0xE0020 && c <= 0xE007F);
}

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }
inline bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }
inline bool is_digit(char32_t c) { return u_isdigit(static_cast<UChar32>(c)); }
inline bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)); }

inline bool is_sentence_punct(char32_t c) {
  return c == U'.' || c == U',' || c == U';' || c == U'?' || c == U'…';
}

inline char32_t ascii_lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

inline bool starts_with_ci(std::u32string_view text, std::size_t pos, std::u32string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(text[pos + i]) != prefix[i]) return false;
  }
  return true;
}

// Length of the URL starting at pos, or 0. Schemes http/https/ftp match
// anywhere; "www." only at the start of a token.
inline std::size_t url_length_at(std::u32string_view text, std::size_t pos) {
  const bool token_start =
      pos == 0 || !(is_letter(text[pos - 1]) || is_digit(text[pos - 1]));
  const bool hit = starts_with_ci(text, pos, U"http://") || starts_with_ci(text, pos, U"https://") ||
                   starts_with_ci(text, pos, U"ftp://") ||
                   (token_start && starts_with_ci(text, pos, U"www."));
  if (!hit) return 0;
  std::size_t end = pos;
  while (end < text.size() && !is_space(text[end])) ++end;
  return end - pos;
}

inline bool contains_url(std::u32string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (url_length_at(text, i) > 0) return true;
  }
  return false;
}

struct Tokenized {
  std::u32string text;
  std::vector<std::u32string> shortcodes;
};

// Replaces emoji sequences and already-present shortcodes by placeholders.
inline Tokenized extract_shortcodes(std::u32string_view text, NormalizationCounts& counts) {
  const auto& index = EmojiIndex::instance();
  Tokenized out;
  out.text.reserve(text.size());
  auto emit = [&](std::u32string code) {
    out.text.push_back(U' ');
    out.text.push_back(kPlaceholder);
    out.text.push_back(U' ');
    out.shortcodes.push_back(std::move(code));
  };

  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    const std::size_t longest = index.first_codepoints.contains(text[i])
                                    ? std::min(kMaxEmojiCodepoints, text.size() - i)
                                    : 0;
    for (std::size_t len = longest; len >= 1 && !matched; --len) {
      const auto it = index.by_sequence.find(std::u32string(text.substr(i, len)));
      if (it != index.by_sequence.end()) {
        emit(to_u32(it->second));
        ++counts.emojis_replaced;
        i += len;
        matched = true;
      }
    }
    if (matched) continue;

    if (is_emoji_codepoint(text[i])) {
      std::size_t end = i + 1;
      while (end < text.size()) {
        if (is_emoji_continuation(text[end])) {
          ++end;
        } else if (text[end] == 0x200D && end + 1 < text.size() && is_emoji_codepoint(text[end + 1])) {
          end += 2;
        } else {
          break;
        }
      }
      emit(to_u32(kUnknownEmojiShortcode));
      ++counts.emojis_replaced;
      i = end;
      continue;
    }

    if (text[i] == U':') {
      const auto close = text.find(U':', i + 1);
      if (close != std::u32string_view::npos) {
        std::u32string candidate(text.substr(i, close - i + 1));
        if (index.shortcodes.contains(candidate)) {
          emit(std::move(candidate));
          i = close + 1;
          continue;
        }
      }
    }
    out.text.push_back(text[i]);
    ++i;
  }
  return out;
}

inline std::u32string collapse_whitespace(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// One sweep of the spacing and run-collapsing rules. Input has collapsed
// whitespace; output may need another sweep.
inline std::u32string punctuation_sweep(std::u32string_view text, NormalizationCounts& counts) {
  std::u32string out;
  out.reserve(text.size() + 8);
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t c = text[i];

    if (c == U' ') {
      // No space before sentence punctuation.
      if (i + 1 < text.size() && is_sentence_punct(text[i + 1])) {
        ++i;
        continue;
      }
      out.push_back(c);
      ++i;
      continue;
    }

    if (is_punct(c)) {
      std::size_t run = 1;
      while (i + run < text.size() && text[i + run] == c) ++run;
      if (run > kPunctuationEmphasisCap) ++counts.punctuation_runs_collapsed;
      out.append(std::min(run, kPunctuationEmphasisCap), c);
      i += run;
      if (is_sentence_punct(c) && i < text.size() && is_letter(text[i])) out.push_back(U' ');
      continue;
    }

    if (c == kPlaceholder) {
      if (!out.empty() && out.back() != U' ') out.push_back(U' ');
      out.push_back(c);
      ++i;
      if (i < text.size() && text[i] != U' ' && !is_sentence_punct(text[i])) out.push_back(U' ');
      continue;
    }

    out.push_back(c);
    ++i;
    if (i < text.size() && ((is_digit(c) && is_letter(text[i])) || (is_letter(c) && is_digit(text[i])))) {
      out.push_back(U' ');
    }
  }
  return out;
}

inline std::string normalize_once(std::string_view raw, NormalizationCounts& counts) {
  std::string repaired = valid_utf8(raw);
  bool fixed = repaired != raw;
  fixed = repair_mojibake(repaired) || fixed;
  if (fixed) ++counts.encoding_fixes;
  repaired = nfc(repaired);

  std::u32string text;
  {
    const std::u32string decoded = to_u32(repaired);
    text.reserve(decoded.size());
    for (char32_t c : decoded) {
      if (c == U'!') {
        ++counts.exclamations_removed;
      } else if (c != kPlaceholder) {
        text.push_back(c);
      }
    }
  }

  std::u32string no_urls;
  no_urls.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (const auto len = url_length_at(text, i); len > 0) {
      ++counts.urls_removed;
      no_urls.push_back(U' ');
      i += len;
    } else {
      no_urls.push_back(text[i++]);
    }
  }

  Tokenized tokens = extract_shortcodes(no_urls, counts);
  std::u32string current = collapse_whitespace(tokens.text);
  for (;;) {
    std::u32string next = collapse_whitespace(punctuation_sweep(current, counts));
    if (next == current) break;
    current = std::move(next);
  }

  std::u32string expanded;
  expanded.reserve(current.size() + 16 * tokens.shortcodes.size());
  std::size_t token = 0;
  for (char32_t c : current) {
    if (c == kPlaceholder) {
      expanded += tokens.shortcodes[token++];
    } else {
      expanded.push_back(c);
    }
  }
  // Removing characters can leave base + combining mark pairs uncomposed.
  return nfc(to_utf8(expanded));
}

}  // namespace detail

// Total, idempotent normalization of one comment. Accepts arbitrary bytes;
// output is NFC-normalized UTF-8 with single spaces and no leading/trailing
// whitespace. A single pass can expose new matches (for instance a removed
// space joining a mojibake digraph), so passes repeat until the text is stable.
inline std::string fix_punctuation(std::string_view text, NormalizationCounts* counts = nullptr) {
  NormalizationCounts local;
  std::string current = detail::normalize_once(text, local);
  for (int pass = 0; pass < 8; ++pass) {
    NormalizationCounts extra;
    std::string next = detail::normalize_once(current, extra);
    if (next == current) break;
    local += extra;
    current = std::move(next);
  }
  local.encoding_fixes = std::min<std::size_t>(local.encoding_fixes, 1);
  if (counts != nullptr) *counts += local;
  return current;
}

}  // namespace hatebench
