#pragma once

// Additive decomposable demand model:
//
//   y(t) = g(t) + s_daily(t) + s_weekly(t) + s_yearly(t) + h(t) + x(t)^T beta + e(t)
//
// g is piecewise linear with hinge changepoints, seasonalities are Fourier
// series, h is a set of per-day holiday window indicators and x are external
// regressors. Parameters are the penalized least-squares (MAP) estimate with
// one ridge scale per column group.

#include <chrono>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "paxcast/holidays.hpp"
#include "paxcast/time.hpp"

namespace paxcast::gam {

enum class SeasonalityMode { Additive, Multiplicative };

std::string to_string(SeasonalityMode m);
SeasonalityMode mode_from_string(const std::string& s);

/// Fourier order per seasonality; 0 disables it.
struct FourierOrders {
    int daily = 4;
    int weekly = 3;
    int yearly = 10;
};

/// Prior-scale-like penalties: the ridge weight of a group is 1 / scale.
struct PenaltyScales {
    double trend = 0.05;  // changepoint adjustments
    double seasonality = 10.0;
    double holidays = 10.0;
    double regressors = 10.0;
};

struct ModelSpec {
    int n_changepoints = 25;
    double changepoint_range = 0.8;
    FourierOrders fourier;
    SeasonalityMode mode = SeasonalityMode::Additive;
    std::vector<HolidayWindow> holidays;
    std::vector<std::string> regressor_names;
    PenaltyScales penalties;
    bool clamp_nonnegative = true;

    void validate() const;
};

enum class ColumnGroup { TrendBase, Changepoint, Daily, Weekly, Yearly, Holiday, Regressor };

/// Rows to fit or predict: timestamps, target (may be empty for prediction)
/// and named regressor columns. `scaler_fingerprint` identifies the Scaler
/// the regressors were transformed with.
struct Frame {
    std::vector<Timestamp> ds;
    std::vector<double> y;
    std::map<std::string, std::vector<double>> regressors;
    std::string scaler_fingerprint;

    std::size_t size() const { return ds.size(); }
    Frame slice(std::size_t begin, std::size_t end) const;
};

/// Maps timestamps onto [0, 1] over the training history.
struct TimeScale {
    double origin_days = 0.0;
    double span_days = 1.0;

    double scaled(Timestamp t) const { return (epoch_days(t) - origin_days) / span_days; }
};

TimeScale make_time_scale(std::span<const Timestamp> train_ds);

/// Changepoint locations in scaled time: evenly spaced over the first
/// `changepoint_range` of the history, excluding t = 0.
std::vector<double> changepoint_locations(const ModelSpec& spec);

/// Column-major n x p design matrix.
struct DesignMatrix {
    std::size_t rows = 0;
    std::vector<std::string> labels;
    std::vector<ColumnGroup> groups;
    std::vector<double> data;

    std::size_t cols() const { return labels.size(); }
    std::span<const double> column(std::size_t j) const { return {data.data() + j * rows, rows}; }
};

/// Columns, in order: trend offset and slope, changepoint hinges, daily,
/// weekly and yearly sin/cos pairs, one indicator per (holiday, offset day),
/// regressors in spec order.
DesignMatrix build_design_matrix(std::span<const Timestamp> ds, const ModelSpec& spec,
                                 const std::map<std::string, std::vector<double>>& regressors,
                                 const TimeScale& scale);
/// Same, with the time scale derived from `ds` itself.
DesignMatrix build_design_matrix(std::span<const Timestamp> ds, const ModelSpec& spec,
                                 const std::map<std::string, std::vector<double>>& regressors);

struct ResidualSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
    double mae = 0.0;
};

struct FittedModel {
    ModelSpec spec;
    TimeScale time_scale;
    double y_scale = 1.0;
    std::vector<std::string> labels;
    std::vector<ColumnGroup> groups;
    std::vector<double> coefficients;  // in scaled-y units
    std::vector<double> changepoints;  // scaled time
    ResidualSummary train_residuals;
    std::string scaler_fingerprint;

    /// Slope of the first trend segment in y units per day.
    double base_slope_per_day() const;
    /// Slope of the final segment (used for extrapolation) in y units per day.
    double final_slope_per_day() const;
    std::vector<Timestamp> changepoint_times() const;
    std::vector<double> group_coefficients(ColumnGroup g) const;
};

FittedModel fit(const Frame& train, const ModelSpec& spec);

/// Per-row contributions. In ADDITIVE mode every component is in y units and
/// trend + daily + weekly + yearly + holidays + regressors == total. In
/// MULTIPLICATIVE mode the seasonal and holiday entries are fractions and
/// trend * (1 + daily + weekly + yearly + holidays) + regressors == total.
/// `yhat` is `total` clamped at 0 when `clamp_nonnegative` is set.
struct ComponentBreakdown {
    SeasonalityMode mode = SeasonalityMode::Additive;
    std::vector<Timestamp> ds;
    std::vector<double> trend, daily, weekly, yearly, holidays, regressors, total, yhat;
};

ComponentBreakdown predict(const FittedModel& model, const Frame& rows);

struct GridScore {
    std::size_t index = 0;
    ModelSpec spec;
    double armse = 0.0;
    double mae = 0.0;
};

struct GridResult {
    ModelSpec best;
    std::size_t best_index = 0;
    std::vector<GridScore> table;
};

/// Fits every spec on the earliest (1 - validation_fraction) of `train` and
/// scores the remainder. Lowest aRMSE wins; ties within 1e-12 go to lower MAE,
/// then to the earlier grid entry.
GridResult grid_search(const Frame& train, std::span<const ModelSpec> grid, double validation_fraction = 0.2);

/// `base` crossed with seasonality and holiday scales in {0.01, 0.1, 1, 10}
/// and both seasonality modes.
std::vector<ModelSpec> default_grid(const ModelSpec& base);
std::vector<ModelSpec> make_grid(const ModelSpec& base, std::span<const double> seasonality_scales,
                                 std::span<const double> holiday_scales, std::span<const SeasonalityMode> modes);

struct Histogram {
    std::vector<double> edges;  // counts.size() + 1
    std::vector<std::size_t> counts;
};

struct ResidualDiagnostics {
    std::vector<Timestamp> ds;
    std::vector<double> residuals;  // yhat - y
    Histogram histogram;
    std::vector<std::pair<double, double>> qq;  // (theoretical normal quantile, sorted residual)
    std::vector<std::size_t> outliers;          // indices into residuals
    double mean = 0.0;
    double std = 0.0;
    double median = 0.0;
    double mad = 0.0;
    double robust_std = 0.0;  // 1.4826 * MAD
    double threshold = 0.0;   // max(c * robust_std, 1e-9 * y_scale)
};

/// Outliers are residuals farther than c robust standard deviations from the
/// residual median.
ResidualDiagnostics residual_diagnostics(const FittedModel& model, const Frame& holdout, std::size_t bins = 30,
                                         double outlier_c = 4.0);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

}  // namespace paxcast::gam
