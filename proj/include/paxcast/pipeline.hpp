#pragma once

// End-to-end data preparation: ingest -> panel -> as-of features -> weather
// -> split -> imputation -> scaling, the per-station sidecar that makes
// inference reproducible, and the training/evaluation drivers.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "paxcast/config.hpp"
#include "paxcast/evalx.hpp"
#include "paxcast/horizon.hpp"
#include "paxcast/panel.hpp"

namespace paxcast::pipeline {

/// Everything needed to rebuild inference features for one station exactly
/// as the training panel was built.
struct Sidecar {
    std::string station;
    HourSpan span;
    panel::AsOfFeatureSpec asof;
    double train_fraction = 0.8;
    Timestamp split_boundary;  // first TEST hour
    panel::ImputePolicy impute_policy = panel::ImputePolicy::ForwardFillThenTrainMean;
    panel::ImputeStats impute;
    panel::Scaler scaler;
    std::vector<std::string> regressor_columns;
    double mean_daily_demand = 0.0;  // TRAIN rows
    std::size_t weather_missing = 0;

    nlohmann::json to_json() const;
    static Sidecar from_json(const nlohmann::json& j);
};

struct PreparedPanel {
    panel::StationHourPanel panel;  // imputed and scaled
    std::map<std::string, Sidecar> sidecars;
};

/// `bookings` may include travel after span.end (forward bookings); only
/// in-span events are counted as demand.
PreparedPanel prepare_panel(std::span<const panel::AssistanceEvent> bookings,
                            std::span<const panel::WeatherObservation> weather, const config::AppConfig& cfg);

/// Features for hours [first_hour, last_hour] as known at `origin`, using
/// the stored imputation and scaling statistics. y is left at zero.
panel::StationSeries build_inference_features(const Sidecar& sidecar, Timestamp first_hour, Timestamp last_hour,
                                              std::span<const panel::AssistanceEvent> bookings,
                                              std::span<const panel::WeatherObservation> weather, Timestamp origin);

// Work-directory layout.
std::filesystem::path panel_csv_path(const std::filesystem::path& work, const std::string& station);
std::filesystem::path sidecar_path(const std::filesystem::path& work, const std::string& station);
std::filesystem::path bookings_path(const std::filesystem::path& work);
std::filesystem::path ingest_meta_path(const std::filesystem::path& work);
std::filesystem::path diagnostics_path(const std::filesystem::path& work);
std::filesystem::path evaluation_path(const std::filesystem::path& work);

void write_station_series(const std::filesystem::path& path, const panel::StationSeries& s);
panel::StationSeries read_station_series(const std::filesystem::path& path, const std::string& station);

struct IngestSummary {
    std::size_t records = 0;
    std::size_t prebooked = 0;
    std::size_t tuag = 0;
    std::size_t rejected = 0;
    std::string data_hash;
    std::map<std::string, std::map<unsigned, panel::TuagRate>> tuag_rates;  // station -> month -> rate
};

/// Reads the configured inputs, builds the panel and writes it with its
/// sidecars, the retained bookings and ingest diagnostics into the work dir.
IngestSummary run_ingest(const config::AppConfig& cfg);

struct LoadedPanel {
    std::map<std::string, panel::StationSeries> series;
    std::map<std::string, Sidecar> sidecars;
    std::string data_hash;
};

/// Throws NotReady when `ingest` has not been run.
LoadedPanel load_panel(const config::AppConfig& cfg);

struct TrainSummary {
    std::map<std::string, horizon::BucketTraining> stations;
};

/// Grid-searches and fits every station x bucket model and saves them.
TrainSummary run_train(const config::AppConfig& cfg);

/// Per-bucket predictions over the TEST rows of one station (features as in
/// the panel, which equal the as-of features at that bucket's shortest lead
/// time) plus the YoY baseline over the same hours.
std::vector<evalx::ForecastRow> holdout_forecasts(const panel::StationSeries& series, const Sidecar& sidecar,
                                                  const horizon::BucketModels& models,
                                                  const horizon::BucketSet& buckets, double yoy_growth);

/// Configured tolerance, else the default derived from TRAIN demand.
double station_tolerance(const config::AppConfig& cfg, const Sidecar& sidecar);

evalx::EvalReport run_evaluate(const config::AppConfig& cfg);

/// FNV-1a over the bytes of the given files, in order.
std::string hash_files(std::span<const std::filesystem::path> files);

}  // namespace paxcast::pipeline
