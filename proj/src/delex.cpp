#include "nlgf/delex.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "nlgf/error.hpp"

namespace nlgf {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

// Digits with optional thousands commas or a decimal part: "1,000", "2.5".
bool is_other_numeral(std::string_view s) {
  if (s.empty() || !is_digit(s.front()) || !is_digit(s.back())) return false;
  bool seen_point = false;
  for (char c : s) {
    if (is_digit(c) || c == ',') continue;
    if (c == '.' && !seen_point) {
      seen_point = true;
      continue;
    }
    return false;
  }
  return true;
}

bool is_terminal_punct(char c) { return c == '.' || c == ',' || c == '!' || c == '?'; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

constexpr std::array<std::string_view, 7> kWeekdays = {
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
constexpr std::array<std::string_view, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

bool is_weekday(std::string_view tok) {
  const std::string l = lower(tok);
  return std::find(kWeekdays.begin(), kWeekdays.end(), l) != kWeekdays.end();
}

bool is_month(std::string_view tok) {
  const std::string l = lower(tok);
  return std::find(kMonths.begin(), kMonths.end(), l) != kMonths.end();
}

// 1..31 without a leading zero, optionally with its correct ordinal suffix
// ("25th", "22nd"). Malformed days ("03th", "2th") are left alone so that an
// ordinal error survives delexicalization.
bool is_day_number(std::string_view tok) {
  std::size_t n = 0;
  while (n < tok.size() && is_digit(tok[n])) ++n;
  if (n == 0 || n > 2 || tok[0] == '0') return false;
  const int value = std::stoi(std::string(tok.substr(0, n)));
  if (value < 1 || value > 31) return false;
  const std::string_view suffix = tok.substr(n);
  if (suffix.empty()) return true;
  const char* expected = (value % 10 == 1 && value != 11)   ? "st"
                         : (value % 10 == 2 && value != 12) ? "nd"
                         : (value % 10 == 3 && value != 13) ? "rd"
                                                            : "th";
  return lower(suffix) == expected;
}

constexpr std::array<std::string_view, 20> kUnits = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};
constexpr std::array<std::string_view, 10> kTens = {
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

struct SpanMatch {
  std::size_t length = 0;
  std::string replacement;
};

bool match_at(const TokenSequence& tokens, std::size_t pos, const TokenSequence& pattern) {
  if (pattern.empty() || pos + pattern.size() > tokens.size()) return false;
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    if (!iequals(tokens[pos + k], pattern[k])) return false;
  }
  return true;
}

// Date surface patterns: weekday [,] month day, weekday [,] day month,
// month day, day month, weekday day. Returns the matched length or 0.
std::size_t match_date_pattern(const TokenSequence& t, std::size_t i) {
  auto at = [&](std::size_t k) -> std::string_view {
    return k < t.size() ? std::string_view(t[k]) : std::string_view();
  };
  auto month_day = [&](std::size_t k) -> std::size_t {
    if (is_month(at(k)) && is_day_number(at(k + 1))) return 2;
    if (is_day_number(at(k)) && is_month(at(k + 1))) return 2;
    return 0;
  };
  if (is_weekday(at(i))) {
    std::size_t k = i + 1;
    if (at(k) == ",") ++k;
    if (const std::size_t md = month_day(k)) return (k - i) + md;
    if (is_day_number(at(i + 1))) return 2;
    return 0;
  }
  return month_day(i);
}

struct ArgPattern {
  std::string name;
  TokenSequence tokens;
};

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    std::string_view chunk = text.substr(start, i - start);
    std::size_t end = chunk.size();
    while (end > 0 && is_terminal_punct(chunk[end - 1])) --end;
    std::string_view body = chunk.substr(0, end);
    if (body.size() > 1 && body.front() == '-' && is_digit(body[1])) {
      out.emplace_back("-");
      body.remove_prefix(1);
    }
    if (!body.empty()) out.emplace_back(body);
    for (std::size_t k = end; k < chunk.size(); ++k) out.emplace_back(1, chunk[k]);
  }
  return out;
}

std::string join_tokens(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string leading_number_word(std::string_view digits) {
  if (!all_digits(digits)) {
    throw InvalidArgument("not a nonnegative integer numeral: '" + std::string(digits) + "'");
  }
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  // The leading group of three digits carries the spoken leading word.
  const std::size_t head = digits.size() % 3 == 0 ? 3 : digits.size() % 3;
  const int group = std::stoi(std::string(digits.substr(0, head)));
  if (group >= 100) return std::string(kUnits[group / 100]);
  if (group < 20) return std::string(kUnits[group]);
  return std::string(kTens[group / 10]);
}

bool vowel_onset(std::string_view digits) {
  const std::string word = leading_number_word(digits);
  return word == "eight" || word == "eleven" || word == "eighteen" || word == "eighty";
}

bool is_placeholder(std::string_view token) {
  return token.size() > 4 && token.substr(0, 2) == "__" && token.substr(token.size() - 2) == "__";
}

bool is_location_arg(std::string_view name) {
  return name == "requested_location" || name == "location";
}

bool is_date_arg(std::string_view name) { return name == "date"; }

TokenSequence delexicalize(const TokenSequence& tokens, const Scenario& scenario,
                           DelexMode mode) {
  std::vector<ArgPattern> locations, dates, others;
  for (const auto& [name, value] : scenario.args) {
    TokenSequence pattern = tokenize(value);
    if (pattern.empty()) continue;
    if (is_location_arg(name)) {
      locations.push_back({name, std::move(pattern)});
    } else if (is_date_arg(name)) {
      dates.push_back({name, std::move(pattern)});
    } else if (mode == DelexMode::Full) {
      others.push_back({name, std::move(pattern)});
    }
  }

  TokenSequence out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    SpanMatch best;
    auto offer = [&](std::size_t length, std::string_view replacement) {
      if (length > best.length) best = {length, std::string(replacement)};
    };
    for (const auto& p : locations) {
      if (match_at(tokens, i, p.tokens)) offer(p.tokens.size(), kLocationToken);
    }
    for (const auto& p : dates) {
      if (match_at(tokens, i, p.tokens)) offer(p.tokens.size(), kDateToken);
    }
    offer(match_date_pattern(tokens, i), kDateToken);
    for (const auto& p : others) {
      if (match_at(tokens, i, p.tokens)) offer(p.tokens.size(), "__arg_" + p.name + "__");
    }
    const std::string& tok = tokens[i];
    if (all_digits(tok)) {
      offer(1, tok == "1" ? kNumOneToken : vowel_onset(tok) ? kNumVowelToken : kNumToken);
    } else if (is_other_numeral(tok)) {
      offer(1, kNumToken);
    }

    if (best.length == 0) {
      out.push_back(tok);
      ++i;
    } else {
      out.push_back(std::move(best.replacement));
      i += best.length;
    }
  }
  return out;
}

std::string delexicalize_text(std::string_view text, const Scenario& scenario, DelexMode mode) {
  return join_tokens(delexicalize(tokenize(text), scenario, mode));
}

}  // namespace nlgf
