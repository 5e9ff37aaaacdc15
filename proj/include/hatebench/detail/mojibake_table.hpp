// Generated by scripts/gen_text_tables.py. Do not edit.
// UTF-8 text that was decoded as Windows-1252 (Latin-1 for the five
// bytes CP1252 leaves undefined) and re-encoded as UTF-8.
#pragma once

#include <array>
#include <string_view>

namespace hatebench::detail {

struct MojibakeEntry {
  std::string_view broken;
  std::string_view repaired;
};

inline constexpr std::array<MojibakeEntry, 42> kMojibakeTable{{
    {"\xc3\xa2\xe2\x80\x9a\xc2\xac", "\xe2\x82\xac"},
    {"\xc3\xa2\xe2\x82\xac\xc2\x9d", "\xe2\x80\x9d"},
    {"\xc3\xa2\xe2\x82\xac\xc2\xa6", "\xe2\x80\xa6"},
    {"\xc3\xa2\xe2\x82\xac\xc5\x93", "\xe2\x80\x9c"},
    {"\xc3\xa2\xe2\x82\xac\xcb\x9c", "\xe2\x80\x98"},
    {"\xc3\xa2\xe2\x82\xac\xe2\x80\x9c", "\xe2\x80\x93"},
    {"\xc3\xa2\xe2\x82\xac\xe2\x80\x9d", "\xe2\x80\x94"},
    {"\xc3\xa2\xe2\x82\xac\xe2\x84\xa2", "\xe2\x80\x99"},
    {"\xc3\x83\xc2\xa0", "\xc3\xa0"},
    {"\xc3\x83\xc2\xa1", "\xc3\xa1"},
    {"\xc3\x83\xc2\xa2", "\xc3\xa2"},
    {"\xc3\x83\xc2\xa4", "\xc3\xa4"},
    {"\xc3\x83\xc2\xa7", "\xc3\xa7"},
    {"\xc3\x83\xc2\xa8", "\xc3\xa8"},
    {"\xc3\x83\xc2\xa9", "\xc3\xa9"},
    {"\xc3\x83\xc2\xaa", "\xc3\xaa"},
    {"\xc3\x83\xc2\xab", "\xc3\xab"},
    {"\xc3\x83\xc2\xad", "\xc3\xad"},
    {"\xc3\x83\xc2\xb1", "\xc3\xb1"},
    {"\xc3\x83\xc2\xb3", "\xc3\xb3"},
    {"\xc3\x83\xc2\xb6", "\xc3\xb6"},
    {"\xc3\x83\xc2\xba", "\xc3\xba"},
    {"\xc3\x83\xc2\xbc", "\xc3\xbc"},
    {"\xc3\x83\xc5\xb8", "\xc3\x9f"},
    {"\xc3\x84\xc2\x8d", "\xc4\x8d"},
    {"\xc3\x84\xc2\xae", "\xc4\xae"},
    {"\xc3\x84\xc2\xaf", "\xc4\xaf"},
    {"\xc3\x84\xc5\x92", "\xc4\x8c"},
    {"\xc3\x84\xcb\x9c", "\xc4\x98"},
    {"\xc3\x84\xe2\x80\x93", "\xc4\x96"},
    {"\xc3\x84\xe2\x80\x94", "\xc4\x97"},
    {"\xc3\x84\xe2\x80\x9e", "\xc4\x84"},
    {"\xc3\x84\xe2\x80\xa6", "\xc4\x85"},
    {"\xc3\x84\xe2\x84\xa2", "\xc4\x99"},
    {"\xc3\x85\xc2\xa0", "\xc5\xa0"},
    {"\xc3\x85\xc2\xa1", "\xc5\xa1"},
    {"\xc3\x85\xc2\xaa", "\xc5\xaa"},
    {"\xc3\x85\xc2\xab", "\xc5\xab"},
    {"\xc3\x85\xc2\xb2", "\xc5\xb2"},
    {"\xc3\x85\xc2\xb3", "\xc5\xb3"},
    {"\xc3\x85\xc2\xbd", "\xc5\xbd"},
    {"\xc3\x85\xc2\xbe", "\xc5\xbe"},
}};

}  // namespace hatebench::detail
