#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlgf/corpus.hpp"
#include "nlgf/inject.hpp"

namespace nlgf {

// Relative weights over ErrorCategory for one generator source.
using ErrorProfile = std::array<double, kNumErrorCategories>;
using SourceProfiles = std::array<ErrorProfile, kNumSources>;

struct SynthOptions {
  double error_rate = 0.4;
  SourceProfiles profiles{};
  std::uint64_t seed = 0;
  // 0 realizes every applicable template for every scenario; otherwise each
  // scenario gets this many distinct templates drawn with the seed.
  std::size_t candidates_per_scenario = 0;
  std::array<double, kNumSplits> split_fractions = {0.70, 0.15, 0.15};
};

// Template slots: {name} inserts an argument value, {art:name} inserts
// "a <value>" or "an <value>" agreeing with the value's onset, and
// {deg:name} inserts "<value> degree" for 1 and "<value> degrees" otherwise.
std::vector<std::string> template_slots(const std::string& tmpl);

// nullopt when the scenario lacks one of the template's arguments.
std::optional<std::string> realize_template(const std::string& tmpl, const Scenario& scenario);

// Realizes templates against scenarios, assigns sources round-robin within a
// scenario, corrupts exactly round(error_rate * N) responses with categories
// drawn from each source's profile, and assigns 70/15/15 splits by scenario.
// Identical inputs and seed give an identical corpus.
Corpus generate_synthetic_corpus(const std::vector<std::string>& templates,
                                 const std::vector<Scenario>& scenarios,
                                 const SynthOptions& options);

// Uncorrupted realizations of every applicable template, labeled grammatical
// with provenance human_reference. Plays the role of the human-written
// corpus the language model is trained on.
Corpus realize_references(const std::vector<std::string>& templates,
                          const std::vector<Scenario>& scenarios);

void validate_profiles(const SourceProfiles& profiles);

}  // namespace nlgf
