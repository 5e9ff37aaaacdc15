#!/usr/bin/env python3
"""Regenerates include/hatebench/detail/{emoji_table,mojibake_table}.hpp.

Requires the `emoji` package (CLDR-derived English shortcodes).
"""
import pathlib
import sys

import emoji

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "include" / "hatebench" / "detail"


def cpp_literal(s: str) -> str:
    out = []
    for b in s.encode("utf-8"):
        if 0x20 <= b < 0x7F and chr(b) not in '"\\?':
            out.append(chr(b))
        else:
            out.append("\\x%02x" % b)
    # Split after hex escapes so a following hex digit is not absorbed.
    text = "".join(out)
    parts = []
    i = 0
    while i < len(text):
        if text.startswith("\\x", i):
            parts.append(text[i:i + 4])
            i += 4
            if i < len(text) and text[i] in "0123456789abcdefABCDEF":
                parts.append('" "')
        else:
            parts.append(text[i])
            i += 1
    return '"' + "".join(parts) + '"'


def emoji_table() -> str:
    rows = []
    for seq, info in emoji.EMOJI_DATA.items():
        # Shortcodes must survive the exclamation-removal rule.
        name = info["en"].replace("!", "")
        rows.append((seq.encode("utf-8"), seq, name))
    rows.sort()
    lines = [
        "// Generated by scripts/gen_text_tables.py from the emoji package "
        f"{emoji.__version__}. Do not edit.",
        "#pragma once",
        "",
        "#include <array>",
        "#include <string_view>",
        "",
        "namespace hatebench::detail {",
        "",
        "struct EmojiEntry {",
        "  std::string_view sequence;",
        "  std::string_view shortcode;",
        "};",
        "",
        f"inline constexpr std::size_t kMaxEmojiCodepoints = {max(len(r[1]) for r in rows)};",
        "",
        f"inline constexpr std::array<EmojiEntry, {len(rows)}> kEmojiTable{{{{",
    ]
    for _, seq, name in rows:
        lines.append(f"    {{{cpp_literal(seq)}, {cpp_literal(name)}}},")
    lines += ["}};", "", "}  // namespace hatebench::detail", ""]
    return "\n".join(lines)


TARGETS = (
    "ąčęėįšųūžĄČĘĖĮŠŲŪŽ"
    "éèêëàáâäöüßñçóíú"
    "’‘“”–—…€"
)


def double_encoded(ch: str) -> str:
    out = []
    for b in ch.encode("utf-8"):
        try:
            out.append(bytes([b]).decode("cp1252"))
        except UnicodeDecodeError:
            out.append(bytes([b]).decode("latin-1"))
    return "".join(out)


def mojibake_table() -> str:
    rows = sorted(((double_encoded(c), c) for c in TARGETS), key=lambda r: (-len(r[0]), r[0]))
    lines = [
        "// Generated by scripts/gen_text_tables.py. Do not edit.",
        "// UTF-8 text that was decoded as Windows-1252 (Latin-1 for the five",
        "// bytes CP1252 leaves undefined) and re-encoded as UTF-8.",
        "#pragma once",
        "",
        "#include <array>",
        "#include <string_view>",
        "",
        "namespace hatebench::detail {",
        "",
        "struct MojibakeEntry {",
        "  std::string_view broken;",
        "  std::string_view repaired;",
        "};",
        "",
        f"inline constexpr std::array<MojibakeEntry, {len(rows)}> kMojibakeTable{{{{",
    ]
    for broken, fixed in rows:
        lines.append(f"    {{{cpp_literal(broken)}, {cpp_literal(fixed)}}},")
    lines += ["}};", "", "}  // namespace hatebench::detail", ""]
    return "\n".join(lines)


def main() -> int:
    (OUT / "emoji_table.hpp").write_text(emoji_table(), encoding="utf-8")
    (OUT / "mojibake_table.hpp").write_text(mojibake_table(), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
