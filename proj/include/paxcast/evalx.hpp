#pragma once

// Forecast accuracy metrics, the year-on-year baseline and per-bucket
// evaluation reports.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "paxcast/time.hpp"

namespace paxcast::evalx {

/// Mean absolute error.
double mae(std::span<const double> y, std::span<const double> yhat);

/// Root mean squared error with under-predictions (yhat < y) weighted by
/// `under_weight` inside the square root's mean.
double armse(std::span<const double> y, std::span<const double> yhat, double under_weight = 2.0);

/// Plain RMSE (aRMSE with weight 1).
double rmse(std::span<const double> y, std::span<const double> yhat);

/// Percentage of rows with |y - yhat| <= delta (inclusive).
double coverage(std::span<const double> y, std::span<const double> yhat, double delta);

/// Observed hourly history for one station.
struct HourlySeries {
    std::string station;
    std::map<Timestamp, double> y;
};

inline constexpr Days kYoyLag{364};

/// yhat(t) = y(t - 364 days) * growth_factor. Throws listing uncovered hours.
std::vector<double> yoy_baseline(const HourlySeries& history, std::span<const Timestamp> targets,
                                 double growth_factor = 1.0);

struct EvalConfig {
    std::map<std::string, double> tolerances;  // delta_s per station
    double under_prediction_weight = 2.0;

    void validate() const;
    double tolerance(const std::string& station) const;
};

/// 10% of mean daily demand, rounded up, at least 2.
double default_tolerance(double mean_daily_demand);

enum class Resolution { Hourly, Daily };
std::string to_string(Resolution r);

inline const std::string kBaselineHorizon = "baseline";

struct ForecastRow {
    std::string station;
    Timestamp hour;
    std::string horizon;  // bucket name or kBaselineHorizon
    double yhat = 0.0;
};

struct ReportRow {
    std::string station;
    std::string horizon;
    Resolution resolution = Resolution::Hourly;
    double mae = 0.0;
    double armse = 0.0;
    double coverage_pct = 0.0;
    std::size_t n = 0;
};

struct EvalReport {
    std::vector<ReportRow> rows;

    void write_csv(std::ostream& out) const;
    void write_csv(const std::filesystem::path& path) const;
};

/// Groups forecasts by (station, horizon) and scores them at hourly
/// resolution and on calendar-day sums. Rows are ordered per station, per
/// resolution, baseline first followed by `horizons` in order.
EvalReport evaluate_by_bucket(std::span<const ForecastRow> forecasts, std::span<const HourlySeries> observations,
                              std::span<const std::string> horizons, const EvalConfig& config);

}  // namespace paxcast::evalx
