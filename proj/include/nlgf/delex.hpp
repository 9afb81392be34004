#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nlgf/corpus.hpp"

namespace nlgf {

// Words, punctuation marks and placeholders; never contains empty strings.
using TokenSequence = std::vector<std::string>;

inline constexpr std::string_view kLocationToken = "__location__";
inline constexpr std::string_view kDateToken = "__date__";
inline constexpr std::string_view kNumToken = "__num__";
inline constexpr std::string_view kNumVowelToken = "__num_vowel__";
inline constexpr std::string_view kNumOneToken = "__num_one__";

enum class DelexMode { Standard, Full };

// Whitespace split, then trailing . , ! ? peeled into their own tokens and a
// leading minus sign split from a numeral. Case and apostrophes are kept.
TokenSequence tokenize(std::string_view text);

std::string join_tokens(const TokenSequence& tokens);

// True when the English reading of the numeral starts with a vowel sound,
// i.e. its leading word is eight, eleven, eighteen or eighty. Leading zeros
// are ignored. Throws InvalidArgument for anything but ASCII digits.
bool vowel_onset(std::string_view digits);

// Leading word of the numeral's English reading ("eighty" for 85, "one" for
// 1200). Exposed for diagnostics and tests.
std::string leading_number_word(std::string_view digits);

// Scenario-driven placeholder substitution. Spans are matched
// case-insensitively, longest first, left to right, without overlap:
// the location argument, date expressions, then (full mode) every other
// argument value, then standalone numerals.
TokenSequence delexicalize(const TokenSequence& tokens, const Scenario& scenario,
                           DelexMode mode = DelexMode::Standard);

std::string delexicalize_text(std::string_view text, const Scenario& scenario,
                              DelexMode mode = DelexMode::Standard);

bool is_placeholder(std::string_view token);

// Argument names treated as the location and the date.
bool is_location_arg(std::string_view name);
bool is_date_arg(std::string_view name);

}  // namespace nlgf
