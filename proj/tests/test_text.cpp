#include <gtest/gtest.h>

#include <unicode/uchar.h>

#include <random>

#include "hatebench/rng.hpp"
#include "hatebench/text.hpp"

using hatebench::fix_punctuation;
using hatebench::NormalizationCounts;

namespace {

bool has_emoji_codepoint(const std::string& s) {
  for (char32_t cp : hatebench::detail::to_u32(s)) {
    if (cp >= 0x80 && u_hasBinaryProperty(static_cast<UChar32>(cp), UCHAR_EMOJI)) return true;
  }
  return false;
}

}  // namespace

TEST(FixPunctuation, CleanTextIsFixedPoint) { EXPECT_EQ(fix_punctuation("Labas pasauli"), "Labas pasauli"); }

TEST(FixPunctuation, CollapsesRunsAndDropsUrl) {
  NormalizationCounts c;
  EXPECT_EQ(fix_punctuation("ką???? čia http://a.example/x", &c), "ką?? čia");
  EXPECT_EQ(c.urls_removed, 1u);
  EXPECT_EQ(c.punctuation_runs_collapsed, 1u);
}

TEST(FixPunctuation, EmojiBecomesShortcode) {
  NormalizationCounts c;
  EXPECT_EQ(fix_punctuation("gerai 🙂", &c), "gerai :slightly_smiling_face:");
  EXPECT_EQ(c.emojis_replaced, 1u);
}

TEST(FixPunctuation, ExclamationsRemoved) {
  NormalizationCounts c;
  EXPECT_EQ(fix_punctuation("Ne!!!", &c), "Ne");
  EXPECT_EQ(c.exclamations_removed, 3u);
}

TEST(FixPunctuation, UrlAndExclamationCounts) {
  NormalizationCounts c;
  EXPECT_EQ(fix_punctuation("http://x !!", &c), "");
  EXPECT_EQ(c.urls_removed, 1u);
  EXPECT_EQ(c.exclamations_removed, 2u);
}

TEST(FixPunctuation, BareWwwOnlyAtTokenStart) {
  EXPECT_EQ(fix_punctuation("žr. www.delfi.lt dabar"), "žr. dabar");
  EXPECT_EQ(fix_punctuation("HTTPS://Example.com/a?b=c tekstas"), "tekstas");
  EXPECT_EQ(fix_punctuation("ftp://files.lt"), "");
}

TEST(FixPunctuation, WhitespaceCollapsed) { EXPECT_EQ(fix_punctuation("  a \t\n b   c  "), "a b c"); }

TEST(FixPunctuation, SpacingAroundSentencePunctuation) {
  EXPECT_EQ(fix_punctuation("taip , ne"), "taip, ne");
  EXPECT_EQ(fix_punctuation("taip,ne"), "taip, ne");
  EXPECT_EQ(fix_punctuation("Gerai.Tada"), "Gerai. Tada");
  // decimals and clock times keep their shape
  EXPECT_EQ(fix_punctuation("3.14 ir 12:30"), "3.14 ir 12:30");
}

TEST(FixPunctuation, NumbersAndWordsSeparated) {
  EXPECT_EQ(fix_punctuation("3val"), "3 val");
  EXPECT_EQ(fix_punctuation("iki2020"), "iki 2020");
}

TEST(FixPunctuation, RunsOfTwoAreKept) {
  NormalizationCounts c;
  EXPECT_EQ(fix_punctuation("ką?? gerai..", &c), "ką?? gerai..");
  EXPECT_EQ(c.punctuation_runs_collapsed, 0u);
  EXPECT_EQ(fix_punctuation("hm......"), "hm..");
}

TEST(FixPunctuation, MojibakeRepaired) {
  NormalizationCounts c;
  EXPECT_EQ(fix_punctuation("Å¾iÅ«rÄ—k", &c), "žiūrėk");
  EXPECT_EQ(c.encoding_fixes, 1u);
  NormalizationCounts clean;
  fix_punctuation("žiūrėk", &clean);
  EXPECT_EQ(clean.encoding_fixes, 0u);
}

TEST(FixPunctuation, InvalidUtf8Replaced) {
  const std::string out = fix_punctuation(std::string("a\xff" "b"));
  EXPECT_EQ(out, "a\xEF\xBF\xBD" "b");
}

TEST(FixPunctuation, ComposesToNfc) {
  // e + combining dot above -> U+0117
  EXPECT_EQ(fix_punctuation("e\xCC\x87"), "\xC4\x97");
}

TEST(FixPunctuation, EmojiSequencesAndUnknowns) {
  EXPECT_EQ(fix_punctuation("👍🏽"), ":thumbs_up_medium_skin_tone:");
  EXPECT_EQ(fix_punctuation("ok😀😀"), "ok :grinning_face: :grinning_face:");
  // existing shortcodes survive a second pass untouched
  EXPECT_EQ(fix_punctuation(":grinning_face: labas"), ":grinning_face: labas");
}

TEST(FixPunctuation, IdempotentOnHandPickedCases) {
  for (const char* s : {"ką???? čia http://a.example/x", "Ne!!!", "gerai 🙂", "a.b,c;d?e…f", "x . . . y",
                        "3val!!! 👍🏽👍🏽", "Å¾iÅ«rÄ—k", ":foo:bar", "\xEF\xB7\x90 stop"}) {
    const std::string once = fix_punctuation(s);
    EXPECT_EQ(fix_punctuation(once), once) << s;
  }
}

TEST(FixPunctuation, FuzzTotalIdempotentAndClean) {
  const std::vector<std::string> atoms = {
      "a", "Ž", "ė", " ", "  ", "\t", "\n", "!", "?", ".", ",", ";", ":", "…", "-", "1", "22", "http://x.lt/a",
      "www.", "www.lrt.lt", "HTTPS://", "ftp://q", "🙂", "👍🏽", "🇱🇹", "\xE2\x80\x8D", "\xEF\xB8\x8F", "©",
      "Å¾", "Ä—", "â€™", "\xff", "\xC3", "\xEF\xB7\x90", ":x:", ":smile", "e\xCC\x87", "#", "*", "5\xEF\xB8\x8F\xE2\x83\xA3"};
  std::mt19937_64 rng(20240611);
  for (int iter = 0; iter < 3000; ++iter) {
    std::string s;
    const auto len = hatebench::uniform_below(rng, 12);
    for (std::uint64_t i = 0; i < len; ++i) s += atoms[hatebench::uniform_below(rng, atoms.size())];
    std::string once;
    ASSERT_NO_THROW(once = fix_punctuation(s)) << s;
    EXPECT_EQ(fix_punctuation(once), once) << "input: " << s;
    EXPECT_EQ(once.find('!'), std::string::npos) << s;
    EXPECT_FALSE(hatebench::detail::contains_url(hatebench::detail::to_u32(once))) << s;
    EXPECT_FALSE(has_emoji_codepoint(once)) << s << " -> " << once;
    EXPECT_EQ(once, hatebench::detail::nfc(once));
    if (!once.empty()) {
      EXPECT_NE(once.front(), ' ');
      EXPECT_NE(once.back(), ' ');
    }
    EXPECT_EQ(once.find("  "), std::string::npos);
  }
}
