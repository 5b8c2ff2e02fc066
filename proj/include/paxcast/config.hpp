#pragma once

// Application configuration loaded from a JSON file. Relative paths resolve
// against the directory containing the file.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "paxcast/evalx.hpp"
#include "paxcast/gam.hpp"
#include "paxcast/horizon.hpp"
#include "paxcast/panel.hpp"
#include "paxcast/synth.hpp"
#include "paxcast/workforce.hpp"

namespace paxcast::config {

struct GridConfig {
    std::vector<double> seasonality_scales{0.01, 0.1, 1.0, 10.0};
    std::vector<double> holiday_scales{0.01, 0.1, 1.0, 10.0};
    std::vector<gam::SeasonalityMode> modes{gam::SeasonalityMode::Additive, gam::SeasonalityMode::Multiplicative};
    double validation_fraction = 0.2;
};

struct AppConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path work_dir = "work";
    std::vector<std::string> stations;
    HourSpan span;  // panel span; bookings for travel after span.end feed inference only
    panel::AsOfFeatureSpec asof;
    horizon::BucketSet buckets = horizon::default_buckets();
    gam::ModelSpec model;              // base spec; holidays come from `holiday_calendar`
    std::string holiday_calendar = "england_wales";  // or "none"
    GridConfig grid;
    double train_fraction = 0.8;
    panel::ScaleMethod scale_method = panel::ScaleMethod::Standardise;
    panel::ImputePolicy impute_policy = panel::ImputePolicy::ForwardFillThenTrainMean;
    evalx::EvalConfig eval;       // tolerances may be left empty: derived from TRAIN demand
    double yoy_growth = 1.0;
    workforce::CapacityParams capacity;
    workforce::RoleTable roles = workforce::default_roles();
    int port = 8080;
    synth::SynthSpec synth = synth::default_spec();
    std::optional<Timestamp> planning_origin;  // defaults to span.end
    workforce::DisplayHours display;

    std::filesystem::path events_path() const { return data_dir / synth::kEventsFile; }
    std::filesystem::path weather_path() const { return data_dir / synth::kWeatherFile; }
    std::filesystem::path roster_path() const { return data_dir / synth::kRosterFile; }

    /// Model spec with the configured holiday calendar attached.
    gam::ModelSpec base_spec() const;
    std::vector<gam::ModelSpec> spec_grid() const;
    Timestamp origin() const { return planning_origin.value_or(span.end); }

    void validate() const;
};

/// Parses a config document; `base_dir` anchors relative paths.
AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
AppConfig load(const std::filesystem::path& path);
nlohmann::json to_json(const AppConfig& c);

/// Checks that the input files named by the config exist.
void require_inputs(const AppConfig& c);

}  // namespace paxcast::config
