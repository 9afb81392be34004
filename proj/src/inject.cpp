#include "nlgf/inject.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "nlgf/delex.hpp"
#include "nlgf/error.hpp"
#include "nlgf/rng.hpp"

namespace nlgf {

namespace {

struct Word {
  std::string core;
  std::string trail;  // trailing . , ! ?
};

std::vector<Word> split_words(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    std::string_view chunk = text.substr(start, i - start);
    std::size_t end = chunk.size();
    while (end > 0 && std::string_view(".,!?").find(chunk[end - 1]) != std::string_view::npos) {
      --end;
    }
    words.push_back({std::string(chunk.substr(0, end)), std::string(chunk.substr(end))});
  }
  return words;
}

std::string join_words(const std::vector<Word>& words) {
  std::string out;
  for (const auto& w : words) {
    if (w.core.empty() && w.trail.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += w.core;
    out += w.trail;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_one_of(std::string_view word, std::initializer_list<std::string_view> options) {
  const std::string l = lower(word);
  return std::find(options.begin(), options.end(), l) != options.end();
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_month_name(std::string_view w) {
  return is_one_of(w, {"january", "february", "march", "april", "may", "june", "july", "august",
                       "september", "october", "november", "december"});
}

// Keeps the capitalization of the first letter of `like`.
std::string match_case(std::string_view like, std::string replacement) {
  if (!like.empty() && !replacement.empty() &&
      std::isupper(static_cast<unsigned char>(like.front()))) {
    replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
  }
  return replacement;
}

bool starts_with_vowel_sound(std::string_view word) {
  if (word.empty()) return false;
  if (all_digits(word)) return vowel_onset(word);
  return std::string_view("aeiouAEIOU").find(word.front()) != std::string_view::npos;
}

const std::vector<std::string_view> kSingularUnits = {"degree", "inch", "mile", "hour",
                                                      "centimeter", "millimeter"};
const std::vector<std::string_view> kSkyNouns = {"skies", "conditions", "weather"};
const std::vector<std::string_view> kStrayTokens = {"x", "q", "z", "#", "~", "j"};

bool in(const std::vector<std::string_view>& list, std::string_view w) {
  const std::string l = lower(w);
  return std::find(list.begin(), list.end(), l) != list.end();
}

std::string ordinal_suffix(int day) {
  if (day % 100 >= 11 && day % 100 <= 13) return "th";
  switch (day % 10) {
    case 1: return "st";
    case 2: return "nd";
    case 3: return "rd";
    default: return "th";
  }
}

struct Sites {
  std::vector<std::size_t> primary;
  std::vector<std::size_t> secondary;
};

std::vector<Word> apply_at(std::vector<Word> w, ErrorCategory category, std::size_t j,
                           bool primary, Rng& rng) {
  switch (category) {
    case ErrorCategory::RepeatedFunctionWord:
      if (primary) {
        w[j].core = match_case(w[j].core, "with");
      } else {
        w.insert(w.begin() + static_cast<std::ptrdiff_t>(j), Word{w[j].core, ""});
      }
      break;
    case ErrorCategory::ArticleAgreement: {
      const bool vowel = starts_with_vowel_sound(w[j + 1].core);
      w[j].core = match_case(w[j].core, vowel ? "a" : "an");
      break;
    }
    case ErrorCategory::NumberAgreement:
      if (primary) {
        w[j + 1].core += "s";
      } else {
        w[j + 1].core.pop_back();
      }
      break;
    case ErrorCategory::DanglingModifier: {
      const std::string l = lower(w[j].core);
      if (l == "it'll") {
        w[j].core = match_case(w[j].core, "will");
      } else if (l == "it's" || l == "there's") {
        w[j].core = match_case(w[j].core, "is");
      } else {
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(j));
      }
      break;
    }
    case ErrorCategory::WrongWordChoice: {
      const std::string l = lower(w[j].core);
      if (l == "there's") {
        w[j].core = match_case(w[j].core, "it's");
      } else {
        const bool will = lower(w[j + 1].core) == "will";
        w[j].core = match_case(w[j].core, will ? "it'll" : "it's");
        w[j].trail = w[j + 1].trail;
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(j + 1));
      }
      break;
    }
    case ErrorCategory::MissingContextWord:
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(j));
      break;
    case ErrorCategory::BadLinkingPhrase:
      // Drop the noun after "with <adjective>"; its punctuation moves left.
      w[j + 1].trail += w[j + 2].trail;
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(j + 2));
      break;
    case ErrorCategory::OrdinalError: {
      const int day = std::stoi(w[j + 1].core);
      const std::string wrong = ordinal_suffix(day) == "th" ? "nd" : "th";
      std::string padded = w[j + 1].core.size() == 1 ? "0" + w[j + 1].core : w[j + 1].core;
      w[j + 1].core = padded + wrong;
      break;
    }
    case ErrorCategory::OovCorruption: {
      const std::string_view stray = kStrayTokens[rng.index(kStrayTokens.size())];
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(j), Word{std::string(stray), ""});
      break;
    }
  }
  return w;
}

Sites find_sites(const std::vector<Word>& w, ErrorCategory category) {
  Sites s;
  const std::size_t n = w.size();
  auto core = [&](std::size_t k) -> std::string_view {
    return k < n ? std::string_view(w[k].core) : std::string_view();
  };
  switch (category) {
    case ErrorCategory::RepeatedFunctionWord: {
      bool seen_with = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (seen_with && is_one_of(core(j), {"and"})) s.primary.push_back(j);
        if (is_one_of(core(j), {"with"})) seen_with = true;
        if (is_one_of(core(j), {"with", "and"})) s.secondary.push_back(j);
      }
      break;
    }
    case ErrorCategory::ArticleAgreement:
      for (std::size_t j = 0; j + 1 < n; ++j) {
        if (!is_one_of(core(j), {"a", "an"}) || !w[j].trail.empty() || core(j + 1).empty()) {
          continue;
        }
        const std::string wrong = starts_with_vowel_sound(core(j + 1)) ? "a" : "an";
        if (lower(core(j)) != wrong) s.primary.push_back(j);
      }
      break;
    case ErrorCategory::NumberAgreement:
      for (std::size_t j = 0; j + 1 < n; ++j) {
        if (!w[j].trail.empty()) continue;
        if (core(j) == "1" && in(kSingularUnits, core(j + 1))) s.primary.push_back(j);
        if (all_digits(core(j)) && core(j) != "1" && is_one_of(core(j + 1), {"degrees"})) {
          s.secondary.push_back(j);
        }
      }
      break;
    case ErrorCategory::DanglingModifier:
      for (std::size_t j = 0; j < n; ++j) {
        if (is_one_of(core(j), {"there", "it"}) && w[j].trail.empty() &&
            is_one_of(core(j + 1), {"will", "is"})) {
          s.primary.push_back(j);
        }
        if (is_one_of(core(j), {"it'll"}) && is_one_of(core(j + 1), {"be"})) s.primary.push_back(j);
        if (is_one_of(core(j), {"it's", "there's"})) s.primary.push_back(j);
      }
      break;
    case ErrorCategory::WrongWordChoice:
      for (std::size_t j = 0; j < n; ++j) {
        if (is_one_of(core(j), {"there"}) && w[j].trail.empty() &&
            is_one_of(core(j + 1), {"will", "is"})) {
          s.primary.push_back(j);
        }
        if (is_one_of(core(j), {"there's"})) s.primary.push_back(j);
      }
      break;
    case ErrorCategory::MissingContextWord:
      for (std::size_t j = 0; j + 1 < n; ++j) {
        if (is_one_of(core(j), {"degrees", "degree"}) && w[j].trail.empty() &&
            is_one_of(core(j + 1), {"celsius", "fahrenheit"})) {
          s.primary.push_back(j);
        }
      }
      break;
    case ErrorCategory::BadLinkingPhrase:
      for (std::size_t j = 0; j + 2 < n; ++j) {
        if (is_one_of(core(j), {"with"}) && w[j].trail.empty() && w[j + 1].trail.empty() &&
            !core(j + 1).empty() && in(kSkyNouns, core(j + 2))) {
          s.primary.push_back(j);
        }
      }
      break;
    case ErrorCategory::OrdinalError:
      for (std::size_t j = 0; j + 1 < n; ++j) {
        if (!is_month_name(core(j)) || !w[j].trail.empty()) continue;
        const std::string_view d = core(j + 1);
        if (all_digits(d) && d.size() <= 2) {
          const int day = std::stoi(std::string(d));
          if (day >= 1 && day <= 31) s.primary.push_back(j);
        }
      }
      break;
    case ErrorCategory::OovCorruption:
      for (std::size_t j = 0; j <= n; ++j) s.primary.push_back(j);
      break;
  }
  return s;
}

TokenSequence lower_tokens(std::string_view text) {
  TokenSequence t = tokenize(text);
  for (auto& tok : t) tok = lower(tok);
  return t;
}

}  // namespace

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::RepeatedFunctionWord: return "RepeatedFunctionWord";
    case ErrorCategory::ArticleAgreement: return "ArticleAgreement";
    case ErrorCategory::NumberAgreement: return "NumberAgreement";
    case ErrorCategory::DanglingModifier: return "DanglingModifier";
    case ErrorCategory::WrongWordChoice: return "WrongWordChoice";
    case ErrorCategory::MissingContextWord: return "MissingContextWord";
    case ErrorCategory::BadLinkingPhrase: return "BadLinkingPhrase";
    case ErrorCategory::OrdinalError: return "OrdinalError";
    case ErrorCategory::OovCorruption: return "OovCorruption";
  }
  return "?";
}

ErrorCategory parse_error_category(std::string_view name) {
  for (ErrorCategory c : kAllErrorCategories) {
    if (to_string(c) == name) return c;
  }
  throw DataError("unknown error category '" + std::string(name) + "'");
}

std::string_view describe(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::RepeatedFunctionWord:
      return "a clause-linking 'with'/'and' is repeated";
    case ErrorCategory::ArticleAgreement:
      return "'a'/'an' disagrees with the onset of the next word";
    case ErrorCategory::NumberAgreement:
      return "unit noun number disagrees with the preceding numeral";
    case ErrorCategory::DanglingModifier:
      return "the clause subject ('there'/'it') is dropped";
    case ErrorCategory::WrongWordChoice:
      return "'there will be'/'there is' replaced by 'it'll'/'it's'";
    case ErrorCategory::MissingContextWord:
      return "'degrees' dropped before a temperature scale";
    case ErrorCategory::BadLinkingPhrase:
      return "the noun after 'with <adjective>' is dropped";
    case ErrorCategory::OrdinalError:
      return "a day number gets a zero-padded, wrong ordinal suffix";
    case ErrorCategory::OovCorruption:
      return "a stray single-character token is inserted";
  }
  return "?";
}

InjectionResult inject_error(std::string_view text, ErrorCategory category, std::uint64_t seed) {
  const std::vector<Word> words = split_words(text);
  const Sites sites = find_sites(words, category);
  const bool primary = !sites.primary.empty();
  const auto& pool = primary ? sites.primary : sites.secondary;
  if (pool.empty()) {
    throw NotApplicable(std::string(to_string(category)) + " has no site in: " + std::string(text));
  }
  Rng rng(seed);
  const std::size_t site = pool[rng.index(pool.size())];
  std::string out = join_words(apply_at(words, category, site, primary, rng));
  if (out == join_words(words)) {
    throw NotApplicable(std::string(to_string(category)) + " edit left the text unchanged");
  }
  return {std::move(out), category};
}

bool edit_matches_category(std::string_view original, std::string_view corrupted,
                           ErrorCategory category) {
  const TokenSequence a = lower_tokens(original);
  const TokenSequence b = lower_tokens(corrupted);
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  const TokenSequence removed(a.begin() + static_cast<std::ptrdiff_t>(prefix),
                              a.end() - static_cast<std::ptrdiff_t>(suffix));
  const TokenSequence added(b.begin() + static_cast<std::ptrdiff_t>(prefix),
                            b.end() - static_cast<std::ptrdiff_t>(suffix));
  auto before = [&](const TokenSequence& t) -> std::string {
    return prefix > 0 ? t[prefix - 1] : std::string();
  };
  auto is = [](const TokenSequence& t, std::initializer_list<std::string_view> words) {
    if (t.size() != words.size()) return false;
    return std::equal(t.begin(), t.end(), words.begin());
  };
  const bool only_add = removed.empty() && added.size() == 1;
  const bool only_remove = added.empty() && removed.size() == 1;
  const bool swap_one = removed.size() == 1 && added.size() == 1;

  switch (category) {
    case ErrorCategory::RepeatedFunctionWord: {
      if (is(removed, {"and"}) && is(added, {"with"})) return true;
      if (!only_add || (added[0] != "with" && added[0] != "and")) return false;
      const std::string next = prefix + 1 < b.size() ? b[prefix + 1] : std::string();
      return before(b) == added[0] || next == added[0];
    }
    case ErrorCategory::ArticleAgreement:
      return (is(removed, {"a"}) && is(added, {"an"})) || (is(removed, {"an"}) && is(added, {"a"}));
    case ErrorCategory::NumberAgreement:
      return swap_one && all_digits(before(a)) &&
             (added[0] == removed[0] + "s" || removed[0] == added[0] + "s");
    case ErrorCategory::DanglingModifier:
      return (only_remove && (removed[0] == "there" || removed[0] == "it")) ||
             (is(removed, {"it'll"}) && is(added, {"will"})) ||
             ((is(removed, {"it's"}) || is(removed, {"there's"})) && is(added, {"is"}));
    case ErrorCategory::WrongWordChoice:
      return (is(removed, {"there", "will"}) && is(added, {"it'll"})) ||
             (is(removed, {"there", "is"}) && is(added, {"it's"})) ||
             (is(removed, {"there's"}) && is(added, {"it's"}));
    case ErrorCategory::MissingContextWord:
      return only_remove && (removed[0] == "degrees" || removed[0] == "degree");
    case ErrorCategory::BadLinkingPhrase:
      return only_remove && in(kSkyNouns, removed[0]);
    case ErrorCategory::OrdinalError: {
      if (!swap_one || !is_month_name(before(a)) || !all_digits(removed[0])) return false;
      const std::string& t = added[0];
      return t.size() > 2 && all_digits(t.substr(0, t.size() - 2)) &&
             std::stoi(t.substr(0, t.size() - 2)) == std::stoi(removed[0]);
    }
    case ErrorCategory::OovCorruption:
      return only_add && added[0].size() == 1 && in(kStrayTokens, added[0]);
  }
  return false;
}

}  // namespace nlgf
