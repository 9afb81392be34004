#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlgf/corpus.hpp"
#include "nlgf/synth.hpp"

namespace nlgf::weather {

// Seeded weather scenarios alternating between the two goals. Current
// conditions carry requested_location, temp, temp_scale, sky and
// precip_summary; forecasts add date, temp_high, temp_low and precip_chance.
std::vector<Scenario> make_scenarios(std::size_t count, std::uint64_t seed,
                                     const std::string& id_prefix = "s");

// Grammatical templates the simulated generators draw candidates from.
const std::vector<std::string>& candidate_templates();

// Phrasings of the human-written reference corpus. Overlaps the candidate
// pool only partially, the way human references and generator output do.
const std::vector<std::string>& reference_templates();

// Per-source error weights: repeated function words dominate the LSTM
// generators and are absent from the retrieval generator.
SourceProfiles default_profiles();

}  // namespace nlgf::weather
