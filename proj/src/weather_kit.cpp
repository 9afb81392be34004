#include "nlgf/weather_kit.hpp"

#include <array>

#include "nlgf/rng.hpp"

namespace nlgf::weather {

namespace {

constexpr std::array kLocations = {
    "London",       "New York",         "Grand Prairie", "Branford",       "Tongan Qu",
    "Larne",        "Funabashi-shi",    "Caloocan City", "Maastricht",     "Westminster",
    "Ayacucho",     "Oak Hill",         "Ocean County",  "Bim Son",        "Paris",
    "Seattle",      "Nairobi",          "Lima",          "Osaka",          "Denver",
    "Cape Town",    "Buenos Aires",     "Santa Fe",      "Kansas City",    "Oslo",
    "Reykjavik",    "Perth",            "Hamilton",      "Porto Alegre",   "San Jose",
    "El Paso",      "Fort Worth",       "Ann Arbor",     "Salt Lake City", "Anchorage",
    "Eau Claire",   "Istanbul",         "Accra",         "Quito",          "Hanoi"};
constexpr std::array kScales = {"fahrenheit", "celsius"};
constexpr std::array kSkies = {"cloudy", "sunny", "partly cloudy", "mostly sunny",
                               "clear", "overcast", "mostly cloudy"};
constexpr std::array kPrecip = {"Light Fog",      "Heavy Blowing Snow", "snow showers",
                                "Light Drizzle",  "Patches of Fog",     "light rain",
                                "heavy rain",     "freezing rain",      "thunderstorms",
                                "Fog Patches",    "light snow",         "scattered showers"};
constexpr std::array kWeekdays = {"Monday", "Tuesday",  "Wednesday", "Thursday",
                                  "Friday", "Saturday", "Sunday"};
constexpr std::array kMonths = {"January", "February", "March",     "April",   "May",      "June",
                                "July",    "August",   "September", "October", "November",
                                "December"};

template <typename Array>
std::string pick(Rng& rng, const Array& options) {
  return options[rng.index(options.size())];
}

std::string temperature(Rng& rng, int lo, int hi) {
  // Exactly 1 is over-represented so singular/plural agreement is exercised.
  if (rng.bernoulli(0.04)) return "1";
  return std::to_string(lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1))));
}

}  // namespace

std::vector<Scenario> make_scenarios(std::size_t count, std::uint64_t seed,
                                     const std::string& id_prefix) {
  Rng rng(seed);
  std::vector<Scenario> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Scenario s;
    s.id = id_prefix + std::to_string(i);
    s.goal = i % 2 == 0 ? Goal::InformCurrentCondition : Goal::InformForecast;
    s.args["requested_location"] = pick(rng, kLocations);
    s.args["temp_scale"] = pick(rng, kScales);
    s.args["sky"] = pick(rng, kSkies);
    s.args["precip_summary"] = pick(rng, kPrecip);
    if (s.goal == Goal::InformCurrentCondition) {
      s.args["temp"] = temperature(rng, 2, 99);
    } else {
      const int low = 2 + static_cast<int>(rng.index(70));
      s.args["temp_low"] = std::to_string(low);
      s.args["temp_high"] = std::to_string(low + 3 + static_cast<int>(rng.index(25)));
      s.args["precip_chance"] = std::to_string(5 + 5 * static_cast<int>(rng.index(19)));
      s.args["date"] = pick(rng, kWeekdays) + ", " + pick(rng, kMonths) + " " +
                       std::to_string(1 + rng.index(28));
    }
    out.push_back(std::move(s));
  }
  return out;
}

const std::vector<std::string>& candidate_templates() {
  static const std::vector<std::string> templates = {
      // current conditions
      "In {requested_location}, it's {deg:temp} {temp_scale} with {sky} skies and {precip_summary}.",
      "Right now in {requested_location}, it's {deg:temp} {temp_scale} with {sky} skies.",
      "It's currently {deg:temp} {temp_scale} in {requested_location} with {precip_summary}.",
      "In {requested_location} there is {precip_summary} and it is {deg:temp} {temp_scale}.",
      "Currently in {requested_location}, expect a temperature of {deg:temp} {temp_scale} with {sky} skies and {precip_summary}.",
      "The current temperature in {requested_location} is {deg:temp} {temp_scale}, with {sky} skies.",
      "Right now it is {deg:temp} {temp_scale} in {requested_location} and there is {precip_summary}.",
      "There is {precip_summary} in {requested_location} right now, and it's {deg:temp} {temp_scale} with {sky} skies.",
      // forecasts
      "In {requested_location} on {date}, there will be {precip_summary} with a high of {deg:temp_high} {temp_scale} and a low of {deg:temp_low}.",
      "On {date} in {requested_location}, expect {sky} skies with {art:precip_chance} percent chance of {precip_summary}.",
      "{date} in {requested_location} will have {sky} skies with a high of {deg:temp_high} {temp_scale} and {art:precip_chance} percent chance of {precip_summary}.",
      "There will be {precip_summary} in {requested_location} on {date}, with a high of {temp_high} and a low of {deg:temp_low} {temp_scale}.",
      "The forecast for {requested_location} on {date} calls for {sky} skies and {precip_summary}, with a low of {deg:temp_low} {temp_scale}.",
      "On {date}, {requested_location} will see a high of {deg:temp_high} {temp_scale} with {sky} skies and {art:precip_chance} percent chance of {precip_summary}.",
      "In {requested_location} on {date}, it will be {sky} with {art:precip_chance} percent chance of {precip_summary} and a high of {deg:temp_high} {temp_scale}.",
      "Expect {sky} skies in {requested_location} on {date}, with a low of {deg:temp_low} {temp_scale} and {art:precip_chance} percent chance of {precip_summary}.",
  };
  return templates;
}

const std::vector<std::string>& reference_templates() {
  static const std::vector<std::string> templates = {
      // shared with the candidate pool
      "In {requested_location}, it's {deg:temp} {temp_scale} with {sky} skies and {precip_summary}.",
      "It's currently {deg:temp} {temp_scale} in {requested_location} with {precip_summary}.",
      "In {requested_location} on {date}, there will be {precip_summary} with a high of {deg:temp_high} {temp_scale} and a low of {deg:temp_low}.",
      "{date} in {requested_location} will have {sky} skies with a high of {deg:temp_high} {temp_scale} and {art:precip_chance} percent chance of {precip_summary}.",
      // reference-only phrasings
      "Right now in {requested_location} it is {sky} and {deg:temp} {temp_scale}.",
      "Currently it's {sky} in {requested_location} with {precip_summary} and a temperature of {deg:temp} {temp_scale}.",
      "In {requested_location} it's {deg:temp} {temp_scale} and {sky} with {precip_summary}.",
      "On {date} in {requested_location} there is {art:precip_chance} percent chance of {precip_summary} with a high of {deg:temp_high} {temp_scale}.",
      "{requested_location} will be {sky} on {date}, with a high of {deg:temp_high} and a low of {deg:temp_low} {temp_scale}.",
      "Expect {precip_summary} on {date} in {requested_location} with a low of {deg:temp_low} {temp_scale}.",
  };
  return templates;
}

SourceProfiles default_profiles() {
  // Order: RepeatedFunctionWord, ArticleAgreement, NumberAgreement,
  // DanglingModifier, WrongWordChoice, MissingContextWord, BadLinkingPhrase,
  // OrdinalError, OovCorruption.
  SourceProfiles p{};
  p[source_index(GeneratorSource::IR)] = {0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 2.0, 1.0, 1.0};
  p[source_index(GeneratorSource::GenLSTM)] = {4.0, 1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0};
  p[source_index(GeneratorSource::SCLSTMDelex)] = {3.0, 2.0, 2.0, 1.0, 1.0, 2.0, 1.0, 2.0, 1.0};
  p[source_index(GeneratorSource::SCLSTMLex)] = {3.0, 1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 1.0, 2.0};
  return p;
}

}  // namespace nlgf::weather
