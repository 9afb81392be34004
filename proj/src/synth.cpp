#include "nlgf/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "nlgf/delex.hpp"
#include "nlgf/error.hpp"
#include "nlgf/rng.hpp"

namespace nlgf {

namespace {

struct Slot {
  std::string kind;  // "", "art" or "deg"
  std::string name;
};

Slot parse_slot(const std::string& body) {
  const std::size_t colon = body.find(':');
  if (colon == std::string::npos) return {"", body};
  Slot s{body.substr(0, colon), body.substr(colon + 1)};
  if (s.kind != "art" && s.kind != "deg") {
    throw DataError("unknown template slot modifier '" + s.kind + "'");
  }
  return s;
}

// Calls on_text for literal runs and on_slot for each {...} slot.
template <typename OnText, typename OnSlot>
void walk_template(const std::string& tmpl, OnText on_text, OnSlot on_slot) {
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const std::size_t open = tmpl.find('{', i);
    if (open == std::string::npos) {
      on_text(tmpl.substr(i));
      return;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string::npos) throw DataError("unterminated slot in template: " + tmpl);
    on_text(tmpl.substr(i, open - i));
    const std::string body = tmpl.substr(open + 1, close - open - 1);
    if (body.empty()) throw DataError("empty slot in template: " + tmpl);
    on_slot(parse_slot(body));
    i = close + 1;
  }
}

bool vowel_sound(const std::string& value) {
  if (value.empty()) return false;
  std::size_t digits = 0;
  while (digits < value.size() && std::isdigit(static_cast<unsigned char>(value[digits]))) ++digits;
  if (digits > 0) return vowel_onset(value.substr(0, digits));
  return std::string("aeiouAEIOU").find(value.front()) != std::string::npos;
}

std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

std::vector<std::string> template_slots(const std::string& tmpl) {
  std::vector<std::string> names;
  walk_template(tmpl, [](const std::string&) {}, [&](const Slot& s) { names.push_back(s.name); });
  return names;
}

std::optional<std::string> realize_template(const std::string& tmpl, const Scenario& scenario) {
  std::string out;
  bool missing = false;
  walk_template(
      tmpl, [&](const std::string& text) { out += text; },
      [&](const Slot& slot) {
        auto it = scenario.args.find(slot.name);
        if (it == scenario.args.end()) {
          missing = true;
          return;
        }
        const std::string& v = it->second;
        if (slot.kind == "art") {
          out += (vowel_sound(v) ? "an " : "a ") + v;
        } else if (slot.kind == "deg") {
          out += v + (v == "1" ? " degree" : " degrees");
        } else {
          out += v;
        }
      });
  if (missing) return std::nullopt;
  return out;
}

void validate_profiles(const SourceProfiles& profiles) {
  for (std::size_t s = 0; s < kNumSources; ++s) {
    double total = 0.0;
    for (double w : profiles[s]) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvalidArgument("error profile weights must be finite and nonnegative");
      }
      total += w;
    }
    if (!(total > 0.0)) {
      throw InvalidArgument(std::string("error profile for ") +
                            std::string(to_string(kAllSources[s])) + " has no positive weight");
    }
  }
}

Corpus generate_synthetic_corpus(const std::vector<std::string>& templates,
                                 const std::vector<Scenario>& scenarios,
                                 const SynthOptions& options) {
  if (!(options.error_rate > 0.0 && options.error_rate < 1.0)) {
    throw InvalidArgument("error_rate must lie strictly between 0 and 1");
  }
  validate_profiles(options.profiles);
  for (const auto& t : templates) {
    for (const auto& name : template_slots(t)) {
      const bool anywhere = std::any_of(scenarios.begin(), scenarios.end(),
                                        [&](const Scenario& s) { return s.args.count(name) > 0; });
      if (!anywhere) {
        throw DataError("template argument '" + name + "' is missing from every scenario: " + t);
      }
    }
  }

  Rng rng(options.seed);

  // Scenario-level split assignment.
  std::vector<std::size_t> order(scenarios.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t n_train = rounded_count(options.split_fractions[0], scenarios.size());
  const std::size_t n_eval =
      std::min(scenarios.size() - n_train, rounded_count(options.split_fractions[1], scenarios.size()));
  std::vector<Split> scenario_split(scenarios.size(), Split::Test);
  for (std::size_t k = 0; k < order.size(); ++k) {
    scenario_split[order[k]] = k < n_train ? Split::Train : k < n_train + n_eval ? Split::Eval
                                                                                 : Split::Test;
  }

  std::vector<LabeledResponse> responses;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const Scenario& sc = scenarios[si];
    std::vector<std::string> realized;
    for (const auto& t : templates) {
      if (auto text = realize_template(t, sc)) realized.push_back(std::move(*text));
    }
    if (options.candidates_per_scenario > 0 && realized.size() > options.candidates_per_scenario) {
      std::vector<std::size_t> pick(realized.size());
      for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
      rng.shuffle(pick);
      pick.resize(options.candidates_per_scenario);
      std::sort(pick.begin(), pick.end());
      std::vector<std::string> chosen;
      for (std::size_t i : pick) chosen.push_back(std::move(realized[i]));
      realized = std::move(chosen);
    }
    for (std::size_t j = 0; j < realized.size(); ++j) {
      LabeledResponse r;
      r.scenario_id = sc.id;
      r.text = std::move(realized[j]);
      r.source = kAllSources[(si + j) % kNumSources];
      r.grammatical = true;
      r.split = scenario_split[si];
      responses.push_back(std::move(r));
    }
  }

  // Exactly round(error_rate * N) corruptions, visited in a seeded order.
  const std::size_t target = rounded_count(options.error_rate, responses.size());
  std::vector<std::size_t> visit(responses.size());
  for (std::size_t i = 0; i < visit.size(); ++i) visit[i] = i;
  rng.shuffle(visit);
  std::map<std::string, std::set<std::string>> texts_by_scenario;
  for (const auto& r : responses) texts_by_scenario[r.scenario_id].insert(r.text);
  std::size_t corrupted = 0;
  for (std::size_t idx : visit) {
    if (corrupted == target) break;
    LabeledResponse& r = responses[idx];
    ErrorProfile weights = options.profiles[source_index(r.source)];
    while (true) {
      const std::ptrdiff_t pick = rng.weighted(weights);
      if (pick < 0) break;
      const std::uint64_t site_seed = rng.next();
      try {
        InjectionResult res = inject_error(r.text, kAllErrorCategories[pick], site_seed);
        auto& texts = texts_by_scenario[r.scenario_id];
        if (texts.count(res.text)) throw NotApplicable("collides with another candidate");
        texts.insert(res.text);
        r.text = std::move(res.text);
        r.grammatical = false;
        ++corrupted;
        break;
      } catch (const NotApplicable&) {
        weights[static_cast<std::size_t>(pick)] = 0.0;
      }
    }
  }
  if (corrupted < target) {
    throw DataError("only " + std::to_string(corrupted) + " of " + std::to_string(target) +
                    " responses admit an error from their source profile");
  }

  return Corpus(scenarios, std::move(responses), Provenance::Synthetic);
}

Corpus realize_references(const std::vector<std::string>& templates,
                          const std::vector<Scenario>& scenarios) {
  std::vector<LabeledResponse> responses;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    std::size_t j = 0;
    for (const auto& t : templates) {
      auto text = realize_template(t, scenarios[si]);
      if (!text) continue;
      LabeledResponse r;
      r.scenario_id = scenarios[si].id;
      r.text = std::move(*text);
      r.source = kAllSources[(si + j++) % kNumSources];
      r.grammatical = true;
      r.split = Split::Train;
      responses.push_back(std::move(r));
    }
  }
  return Corpus(scenarios, std::move(responses), Provenance::HumanReference);
}

}  // namespace nlgf
