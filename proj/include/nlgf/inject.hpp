#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nlgf {

// Error taxonomy observed in model-generated weather responses.
enum class ErrorCategory : int {
  RepeatedFunctionWord = 0,
  ArticleAgreement,
  NumberAgreement,
  DanglingModifier,
  WrongWordChoice,
  MissingContextWord,
  BadLinkingPhrase,
  OrdinalError,
  OovCorruption,
};
inline constexpr std::size_t kNumErrorCategories = 9;
inline constexpr std::array<ErrorCategory, kNumErrorCategories> kAllErrorCategories = {
    ErrorCategory::RepeatedFunctionWord, ErrorCategory::ArticleAgreement,
    ErrorCategory::NumberAgreement,      ErrorCategory::DanglingModifier,
    ErrorCategory::WrongWordChoice,      ErrorCategory::MissingContextWord,
    ErrorCategory::BadLinkingPhrase,     ErrorCategory::OrdinalError,
    ErrorCategory::OovCorruption};

std::string_view to_string(ErrorCategory category);
ErrorCategory parse_error_category(std::string_view name);

// One-line description of the edit a category performs.
std::string_view describe(ErrorCategory category);

// The text has no site where the category's rule applies.
class NotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InjectionResult {
  std::string text;
  ErrorCategory category;
};

// Corrupts a grammatical response with one edit of the given category. The
// site (and, for OovCorruption, the stray token) is chosen by the seed.
// Tokens are rejoined with single spaces.
InjectionResult inject_error(std::string_view text, ErrorCategory category, std::uint64_t seed);

// True when `corrupted` differs from `original` by exactly the kind of edit
// `category` describes. Independent of inject_error's site search.
bool edit_matches_category(std::string_view original, std::string_view corrupted,
                           ErrorCategory category);

}  // namespace nlgf
