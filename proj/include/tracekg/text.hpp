#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tracekg::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Whitespace-separated tokens, verbatim.
std::vector<std::string> whitespace_tokens(std::string_view s);

// Lower-cased whitespace tokens with leading/trailing punctuation stripped;
// tokens that are pure punctuation are dropped. Used by every word-count metric.
std::vector<std::string> metric_words(std::string_view s);

// Lower-cased maximal alphanumeric runs.
std::vector<std::string> alnum_tokens(std::string_view s);

// Lower-cased alphanumerics only ("I.B.M." -> "ibm").
std::string alnum_key(std::string_view s);

// "works at" -> "works_at"
std::string snake_label(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool contains_ci(std::string_view haystack, std::string_view needle);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

// Zero-padded decimal, e.g. pad(7, 4) -> "0007".
std::string pad(std::size_t value, int width);

}  // namespace tracekg::text
