#pragma once

// Read-side service shared by the CLI and the HTTP API: forecasts, component
// breakdowns, RAG heatmaps, what-if evaluation and residual diagnostics over
// the trained model set. The model set is immutable and replaced atomically.

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "paxcast/config.hpp"
#include "paxcast/horizon.hpp"
#include "paxcast/pipeline.hpp"
#include "paxcast/store.hpp"
#include "paxcast/workforce.hpp"

namespace paxcast::service {

struct ModelSet {
    std::map<std::string, horizon::BucketModels> models;
    store::Manifest manifest;
};

struct WhatIfRequest {
    std::string station;
    int days = 0;  // 0 = service default
    std::vector<workforce::RosterDelta> deltas;
};

/// Parses `{station, days?, deltas:[{hour, role, change}]}`; malformed
/// bodies raise Unprocessable.
WhatIfRequest parse_whatif(const nlohmann::json& body);

class ForecastService {
public:
    /// Loads the panel, bookings, weather and roster. Models are loaded if
    /// present; otherwise model-backed calls raise NotReady until reload().
    explicit ForecastService(config::AppConfig cfg);

    const config::AppConfig& config() const { return cfg_; }

    /// Re-reads the model store and swaps it in. Throws (leaving the current
    /// set in place) when the store is absent or inconsistent.
    void reload_models();
    /// Installs an in-memory model set.
    void install_models(std::shared_ptr<const ModelSet> set);
    std::shared_ptr<const ModelSet> models() const;
    bool ready() const { return models() != nullptr; }

    std::vector<std::string> stations() const;

    std::vector<horizon::TrajectoryRow> forecast(const std::string& station, Timestamp origin, Timestamp from,
                                                 Timestamp to) const;
    nlohmann::json forecast_json(const std::string& station, Timestamp origin, Timestamp from, Timestamp to) const;

    /// Breakdown of one bucket model over [from, to]. With an origin the
    /// features are the as-of inference features (matching forecast());
    /// without one the hours must lie in the panel.
    gam::ComponentBreakdown components(const std::string& station, const std::string& bucket, Timestamp from,
                                       Timestamp to, std::optional<Timestamp> origin = std::nullopt) const;
    nlohmann::json components_json(const std::string& station, const std::string& bucket, Timestamp from,
                                   Timestamp to, std::optional<Timestamp> origin = std::nullopt) const;

    /// Heatmap for `days` days from the planning origin (`days` <= 0 uses 50).
    workforce::HeatmapInputs heatmap_inputs(const std::string& station, int days) const;
    workforce::RagHeatmap heatmap(const std::string& station, int days) const;
    nlohmann::json heatmap_json(const std::string& station, int days) const;

    workforce::WhatIfResult whatif(const WhatIfRequest& req) const;
    nlohmann::json whatif_json(const WhatIfRequest& req) const;

    gam::ResidualDiagnostics diagnostics(const std::string& station, const std::string& bucket) const;
    nlohmann::json diagnostics_json(const std::string& station, const std::string& bucket) const;

    double tuag_rate(const std::string& station, Timestamp hour) const;

    static constexpr int kDefaultDays = 50;

private:
    struct StationData {
        panel::StationSeries series;
        pipeline::Sidecar sidecar;
        std::vector<panel::AssistanceEvent> bookings;
        std::vector<panel::WeatherObservation> weather;
        std::map<unsigned, double> tuag_rates;
    };

    const StationData& station(const std::string& code) const;
    const horizon::BucketModels& station_models(const ModelSet& set, const std::string& code) const;
    nlohmann::json heatmap_to_json(const workforce::RagHeatmap& h) const;

    config::AppConfig cfg_;
    std::map<std::string, StationData> data_;
    workforce::Roster roster_;
    mutable std::shared_mutex mu_;
    std::shared_ptr<const ModelSet> models_;
};

}  // namespace paxcast::service
