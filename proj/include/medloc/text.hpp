#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace medloc::text {

/// Simple (1:1) case folding over UTF-8. Covers ASCII, Latin-1, Latin
/// Extended-A, Greek and Cyrillic; other code points pass through unchanged.
/// Invalid UTF-8 bytes are copied as-is.
std::string casefold(std::string_view utf8);

bool starts_with_folded(std::string_view haystack, std::string_view prefix);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace medloc::text
