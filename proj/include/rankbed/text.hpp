#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rankbed {

/// Lowercased alphanumeric-run tokens, order preserving. ASCII-only
/// classification so results never depend on the process locale; bytes
/// outside [0-9A-Za-z] act as separators.
std::vector<std::string> tokenize(std::string_view text);

/// True iff the byte string is well-formed UTF-8 (rejects overlongs,
/// surrogates and out-of-range code points).
bool utf8_valid(std::string_view bytes);

struct Truncation {
    std::string text;
    bool truncated = false;
};

/// Marker appended to text cut by truncate_to_tokens.
inline constexpr std::string_view kTruncationMarker = "[truncated]";

/// Keeps the first `budget` whitespace-delimited tokens and appends the
/// truncation marker when anything was dropped. Budget <= 0 keeps nothing
/// but the marker.
Truncation truncate_to_tokens(std::string_view text, int budget);

/// Number of whitespace-delimited tokens. Used as the budget unit for
/// prompt rendering and mock generation limits.
std::size_t count_ws_tokens(std::string_view text);

/// Shortest decimal form that round-trips the exact double value.
std::string format_double(double value);

/// FNV-1a 64-bit. Stable across platforms and runs; used for seeded
/// decisions and provenance digests.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Maps a 64-bit hash onto [0,1).
double hash_to_unit(std::uint64_t h);

}  // namespace rankbed
