#pragma once

// Synthetic assistance bookings, weather and rosters with retained
// ground-truth components.
//
//   eta(s,t)    = level + trend + daily + weekly + yearly + holidays + regressors
//   lambda(s,t) = softplus(eta)
//   y(s,t)      ~ Poisson(lambda)
//
// Each realised booking gets a lead time drawn from an exponential body plus
// a uniform final-week spike whose weight puts `final_week_mass` of all
// bookings inside the last seven days before travel.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "paxcast/panel.hpp"
#include "paxcast/time.hpp"
#include "paxcast/workforce.hpp"

namespace paxcast::synth {

struct StationProfile {
    std::string code;
    double level = 2.0;           // eta intercept
    double trend_per_year = 0.0;  // eta units per 365.25 days
    double daily_amplitude = 0.0;
    double weekly_amplitude = 0.0;
    double yearly_amplitude = 0.0;
    double holiday_uplift = 0.0;
    double rain_effect = 0.0;         // eta per mm of rain
    double temperature_effect = 0.0;  // eta per degree away from 10 C
    double tuag_rate = 0.2;           // expected TUAG per pre-booked event
};

struct LeadTimeMixture {
    double body_mean_days = 30.0;
    double spike_days = 7.0;
    double final_week_mass = 0.44;

    void validate() const;
    /// Weight of the uniform spike on [0, spike_days).
    double spike_weight() const;
    /// P(lead time <= d days).
    double cdf(double days) const;
};

struct RosterPolicy {
    int display_first = 6;
    int display_last = 21;
    double primary_cover = 0.85;  // fraction of expected demand covered by primary staff on average
    double jitter = 0.35;         // relative spread of the primary cover per hour
    int secondary_max = 2;
    int excluded_per_hour = 1;
};

struct SynthSpec {
    Timestamp start;
    Timestamp end;            // exclusive
    int future_days = 60;     // bookings, weather and roster beyond `end`
    std::uint64_t seed = 7;
    std::vector<StationProfile> stations;
    LeadTimeMixture lead_time;
    double weather_missing_rate = 0.01;
    bool emit_weather_noise = true;
    RosterPolicy roster;

    void validate() const;
};

/// KGX terminal, YRK hub and BWK sparse local station over 2023-2024.
SynthSpec default_spec();

SynthSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

struct TruthRow {
    std::string station;
    Timestamp hour;
    double trend = 0.0;
    double daily = 0.0;
    double weekly = 0.0;
    double yearly = 0.0;
    double holidays = 0.0;
    double regressors = 0.0;
    double lambda = 0.0;
};

/// Ground truth keyed by station, one row per hour in [start, end).
struct SynthTruth {
    std::vector<TruthRow> rows;

    std::vector<TruthRow> station(const std::string& code) const;
};

struct SynthOutput {
    std::vector<panel::AssistanceEvent> events;  // pre-booked and TUAG, sorted
    std::vector<panel::WeatherObservation> weather;
    workforce::Roster roster;
    SynthTruth truth;
};

/// Deterministic in `spec` (including the seed). Bookings for travel after
/// `end` are kept only if created before `end`.
SynthOutput generate(const SynthSpec& spec);

/// Files written by write_outputs, relative to the output directory.
inline constexpr const char* kEventsFile = "events.csv";
inline constexpr const char* kWeatherFile = "weather.csv";
inline constexpr const char* kRosterFile = "roster.csv";
inline constexpr const char* kTruthFile = "truth.csv";

void write_outputs(const std::filesystem::path& dir, const SynthOutput& out);
void write_truth_csv(const std::filesystem::path& path, const SynthTruth& truth);
SynthTruth read_truth_csv(const std::filesystem::path& path);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct ComponentSeries {
    std::string station;
    std::vector<Timestamp> hours;
    std::map<std::string, std::vector<double>> components;  // trend, daily, ...
};

struct CorrelationRow {
    std::string station;
    std::string component;
    std::optional<double> correlation;
    std::size_t n = 0;
};

/// Per-component correlation between fitted and true values on matching
/// (station, hour) keys. Throws when a fitted hour has no truth row.
std::vector<CorrelationRow> truth_report(const SynthTruth& truth, std::span<const ComponentSeries> fitted);

}  // namespace paxcast::synth
