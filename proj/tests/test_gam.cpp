#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "paxcast/error.hpp"
#include "paxcast/gam.hpp"
#include "support.hpp"

using namespace paxcast;
using namespace paxcast::gam;
using testsupport::ts;

namespace {

constexpr double kPi = std::numbers::pi;

ModelSpec bare_spec() {
    ModelSpec s;
    s.n_changepoints = 0;
    s.fourier = {0, 0, 0};
    return s;
}

Frame hourly_frame(Timestamp start, std::size_t n) {
    Frame f;
    for (std::size_t i = 0; i < n; ++i) f.ds.push_back(start + Hours{static_cast<std::int64_t>(i)});
    return f;
}

double days_since(Timestamp t, Timestamp t0) { return epoch_days(t) - epoch_days(t0); }

Frame seasonal_frame(std::size_t n, std::uint64_t seed, double noise = 0.3) {
    const auto start = ts("2023-01-01T00:00:00Z");
    Frame f = hourly_frame(start, n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e(0.0, noise);
    auto& x = f.regressors["x"];
    for (std::size_t i = 0; i < n; ++i) {
        const double d = days_since(f.ds[i], start);
        const double xi = std::sin(0.37 * static_cast<double>(i)) + 0.5 * std::cos(0.11 * static_cast<double>(i));
        x.push_back(xi);
        f.y.push_back(20.0 + 0.01 * d + 3.0 * std::sin(2 * kPi * d) + 2.0 * std::cos(2 * kPi * d / 7.0) + 1.5 * xi +
                      e(rng));
    }
    return f;
}

}  // namespace

TEST(Design, WidthWeeklyOnly) {
    auto spec = bare_spec();
    spec.fourier.weekly = 3;
    const auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 48);
    const auto X = build_design_matrix(f.ds, spec, {});
    EXPECT_EQ(X.cols(), 8u);
    EXPECT_EQ(X.rows, 48u);
}

TEST(Design, FullWidthCount) {
    ModelSpec spec;  // 25 changepoints, orders 4/3/10
    spec.regressor_names = {"a", "b"};
    spec.holidays = {{"h", {std::chrono::sys_days{std::chrono::year{2024} / 3 / 1}}, -2, 3}};
    auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 10);
    f.regressors["a"].assign(10, 0.0);
    f.regressors["b"].assign(10, 0.0);
    const auto X = build_design_matrix(f.ds, spec, f.regressors);
    EXPECT_EQ(X.cols(), 2u + 25u + 2 * (4 + 3 + 10) + 6u + 2u);
    EXPECT_EQ(X.labels.back(), "regressor:b");
}

TEST(Design, FourierColumnsMatchDefinition) {
    auto spec = bare_spec();
    spec.fourier = {2, 3, 0};
    const auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 200);
    const auto X = build_design_matrix(f.ds, spec, {});
    std::size_t checked = 0;
    for (std::size_t j = 0; j < X.cols(); ++j) {
        const auto& label = X.labels[j];
        const bool daily = label.rfind("daily_", 0) == 0, weekly = label.rfind("weekly_", 0) == 0;
        if (!daily && !weekly) continue;
        const double period = daily ? 1.0 : 7.0;
        const int k = label.back() - '0';
        const bool is_sin = label.find("_sin_") != std::string::npos;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double arg = 2 * kPi * k * epoch_days(f.ds[i]) / period;
            ASSERT_NEAR(X.column(j)[i], is_sin ? std::sin(arg) : std::cos(arg), 1e-9) << label << " " << i;
        }
        ++checked;
    }
    EXPECT_EQ(checked, 2u * (2 + 3));
}

TEST(Design, HolidayAnchorActivatesOneIndicator) {
    auto spec = bare_spec();
    const auto anchor = std::chrono::sys_days{std::chrono::year{2024} / 5 / 6};
    spec.holidays = {{"bank", {anchor}, -1, 1}};
    std::vector<Timestamp> ds{Timestamp{anchor} + Hours{10}};
    const auto X = build_design_matrix(ds, spec, {});
    double active = 0;
    for (std::size_t j = 0; j < X.cols(); ++j) {
        if (X.groups[j] == ColumnGroup::Holiday) active += X.column(j)[0];
    }
    EXPECT_EQ(active, 1.0);
}

TEST(Design, DeterministicAndMissingRegressor) {
    ModelSpec spec;
    spec.regressor_names = {"x"};
    auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 100);
    f.regressors["x"].assign(100, 1.0);
    const auto a = build_design_matrix(f.ds, spec, f.regressors);
    const auto b = build_design_matrix(f.ds, spec, f.regressors);
    EXPECT_EQ(a.data, b.data);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_THROW(build_design_matrix(f.ds, spec, {}), Error);
}

TEST(Design, ChangepointsSpreadOverRange) {
    ModelSpec spec;
    const auto cps = changepoint_locations(spec);
    ASSERT_EQ(cps.size(), 25u);
    EXPECT_GT(cps.front(), 0.0);
    EXPECT_NEAR(cps.back(), 0.8, 1e-12);
    for (std::size_t i = 1; i < cps.size(); ++i) EXPECT_GT(cps[i], cps[i - 1]);
}

TEST(Fit, ConstantRecovery) {
    ModelSpec spec;
    spec.fourier = {0, 0, 0};
    auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 24 * 30);
    f.y.assign(f.size(), 5.0);
    const auto m = fit(f, spec);
    const auto p = predict(m, f);
    for (double v : p.yhat) EXPECT_NEAR(v, 5.0, 1e-6);
    const auto later = hourly_frame(ts("2024-03-01T00:00:00Z"), 48);
    for (double v : predict(m, later).yhat) EXPECT_NEAR(v, 5.0, 1e-6);
}

TEST(Fit, LinearSlopeAgainstOls) {
    const auto start = ts("2024-01-01T00:00:00Z");
    auto f = hourly_frame(start, 24 * 60);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> e(0.0, 0.01);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(f.size()), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = days_since(f.ds[i], start);
        f.y.push_back(0.1 * d + e(rng));
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        X(static_cast<Eigen::Index>(i), 1) = d;
        y(static_cast<Eigen::Index>(i)) = f.y.back();
    }
    const double ols = testsupport::oracle_lstsq(X, y)(1);

    const auto plain = fit(f, bare_spec());
    EXPECT_NEAR(plain.base_slope_per_day(), ols, 1e-6);
    EXPECT_NEAR(plain.base_slope_per_day(), 0.1, 0.005);

    ModelSpec with_cps;
    with_cps.fourier = {0, 0, 0};
    const auto m = fit(f, with_cps);
    EXPECT_NEAR(m.base_slope_per_day(), ols, 0.05 * ols);
    EXPECT_NEAR(m.final_slope_per_day(), 0.1, 0.005);
}

TEST(Fit, WeeklySineHeldOut) {
    const auto start = ts("2024-01-01T00:00:00Z");
    auto f = hourly_frame(start, 24 * 70);
    for (auto t : f.ds) f.y.push_back(3.0 + 2.0 * std::sin(2 * kPi * days_since(t, start) / 7.0));
    auto spec = bare_spec();
    spec.fourier.weekly = 1;
    const std::size_t cut = 24 * 56;
    const auto m = fit(f.slice(0, cut), spec);
    const auto hold = f.slice(cut, f.size());
    const auto p = predict(m, hold);

    // direct Fourier regression on the same rows
    Eigen::MatrixXd X(static_cast<Eigen::Index>(cut), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(cut));
    for (std::size_t i = 0; i < cut; ++i) {
        const double d = days_since(f.ds[i], start);
        X.row(static_cast<Eigen::Index>(i)) << 1.0, std::sin(2 * kPi * d / 7), std::cos(2 * kPi * d / 7);
        y(static_cast<Eigen::Index>(i)) = f.y[i];
    }
    const auto beta = testsupport::oracle_lstsq(X, y);
    double mae = 0, oracle_mae = 0;
    for (std::size_t i = 0; i < hold.size(); ++i) {
        const double d = days_since(hold.ds[i], start);
        const double o = beta(0) + beta(1) * std::sin(2 * kPi * d / 7) + beta(2) * std::cos(2 * kPi * d / 7);
        mae += std::fabs(p.yhat[i] - hold.y[i]);
        oracle_mae += std::fabs(o - hold.y[i]);
    }
    mae /= static_cast<double>(hold.size());
    oracle_mae /= static_cast<double>(hold.size());
    EXPECT_LT(mae, 0.05);
    EXPECT_LT(oracle_mae, 1e-9);
}

TEST(Fit, AdditiveBreakdownSums) {
    auto f = seasonal_frame(24 * 120, 3);
    ModelSpec spec;
    spec.regressor_names = {"x"};
    spec.fourier.yearly = 0;
    const auto m = fit(f, spec);
    EXPECT_EQ(m.coefficients.size(), m.labels.size());
    const auto p = predict(m, f);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double sum = p.trend[i] + p.daily[i] + p.weekly[i] + p.yearly[i] + p.holidays[i] + p.regressors[i];
        ASSERT_NEAR(sum, p.total[i], 1e-9);
        ASSERT_EQ(p.yhat[i], std::max(0.0, p.total[i]));
    }
    double mae = 0;
    for (std::size_t i = 0; i < f.size(); ++i) mae += std::fabs(p.yhat[i] - f.y[i]);
    EXPECT_LT(mae / static_cast<double>(f.size()), 0.4);
}

TEST(Fit, MultiplicativeIdentity) {
    auto f = seasonal_frame(24 * 120, 4);
    ModelSpec spec;
    spec.regressor_names = {"x"};
    spec.fourier.yearly = 0;
    spec.mode = SeasonalityMode::Multiplicative;
    const auto m = fit(f, spec);
    const auto p = predict(m, f);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double recon = p.trend[i] * (1.0 + p.daily[i] + p.weekly[i] + p.yearly[i] + p.holidays[i]) + p.regressors[i];
        ASSERT_NEAR(recon, p.total[i], 1e-9 * std::max(1.0, std::fabs(p.total[i])));
    }
}

TEST(Fit, ClampAtZero) {
    const auto start = ts("2024-01-01T00:00:00Z");
    auto f = hourly_frame(start, 24 * 30);
    for (auto t : f.ds) f.y.push_back(10.0 - 0.5 * days_since(t, start));
    const auto m = fit(f, bare_spec());
    const auto p = predict(m, f);
    bool saw_negative = false;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (p.total[i] < 0) {
            saw_negative = true;
            EXPECT_EQ(p.yhat[i], 0.0);
        }
    }
    EXPECT_TRUE(saw_negative);
    auto unclamped = bare_spec();
    unclamped.clamp_nonnegative = false;
    const auto p2 = predict(fit(f, unclamped), f);
    EXPECT_EQ(p2.yhat, p2.total);
}

TEST(Fit, RegressorLinearity) {
    auto f = seasonal_frame(24 * 90, 5);
    ModelSpec spec;
    spec.regressor_names = {"x"};
    spec.fourier.yearly = 0;
    const auto m = fit(f, spec);
    auto zero = f, twice = f;
    for (auto& v : zero.regressors["x"]) v = 0.0;
    for (auto& v : twice.regressors["x"]) v *= 2.0;
    const auto p = predict(m, f), pz = predict(m, zero), p2 = predict(m, twice);
    for (std::size_t i = 0; i < f.size(); ++i) {
        ASSERT_EQ(pz.regressors[i], 0.0);
        ASSERT_NEAR(p2.regressors[i], 2.0 * p.regressors[i], 1e-12);
        ASSERT_NEAR(p2.total[i] - pz.total[i], 2.0 * (p.total[i] - pz.total[i]), 1e-9);
    }
}

TEST(Fit, SeasonalPenaltyMonotone) {
    auto f = seasonal_frame(24 * 90, 6);
    ModelSpec spec;
    spec.fourier.yearly = 0;
    double prev = std::numeric_limits<double>::infinity();
    for (double scale : {10.0, 1.0, 0.1, 0.01, 0.001, 1e-4, 1e-5, 1e-6}) {
        spec.penalties.seasonality = scale;
        const auto m = fit(f, spec);
        double norm = 0;
        for (auto g : {ColumnGroup::Daily, ColumnGroup::Weekly, ColumnGroup::Yearly}) {
            for (double c : m.group_coefficients(g)) norm += c * c;
        }
        norm = std::sqrt(norm);
        EXPECT_LT(norm, prev) << scale;
        prev = norm;
    }
    EXPECT_LT(prev, 0.01);
}

TEST(Fit, Deterministic) {
    auto f = seasonal_frame(24 * 60, 7);
    ModelSpec spec;
    spec.regressor_names = {"x"};
    const auto a = fit(f, spec);
    const auto b = fit(f, spec);
    EXPECT_EQ(a.coefficients, b.coefficients);
    spec.mode = SeasonalityMode::Multiplicative;
    EXPECT_EQ(fit(f, spec).coefficients, fit(f, spec).coefficients);
}

TEST(Fit, Errors) {
    auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 10);
    f.y.assign(10, 1.0);
    EXPECT_THROW(fit(f, ModelSpec{}), Error);  // too few rows
    auto g = hourly_frame(ts("2024-01-01T00:00:00Z"), 100);
    g.y.assign(100, 1.0);
    g.y[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(fit(g, bare_spec()), Error);
    ModelSpec bad;
    bad.penalties.holidays = 0.0;
    EXPECT_THROW(bad.validate(), Error);
    HolidayWindow w{"x", {}, 1, 2};
    EXPECT_THROW(w.validate(), Error);
}

TEST(Predict, ScalerMismatchRejected) {
    auto f = seasonal_frame(24 * 30, 8);
    f.scaler_fingerprint = "aaaa";
    ModelSpec spec;
    spec.fourier.yearly = 0;
    spec.regressor_names = {"x"};
    const auto m = fit(f, spec);
    auto other = f;
    other.scaler_fingerprint = "bbbb";
    EXPECT_THROW(predict(m, other), Error);
}

TEST(Predict, JsonRoundTripBitIdentical) {
    auto f = seasonal_frame(24 * 60, 9);
    for (auto mode : {SeasonalityMode::Additive, SeasonalityMode::Multiplicative}) {
        ModelSpec spec;
        spec.mode = mode;
        spec.regressor_names = {"x"};
        spec.holidays = england_wales_holidays(2022, 2024);
        const auto m = fit(f, spec);
        const auto back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
        const auto a = predict(m, f), b = predict(back, f);
        EXPECT_EQ(a.total, b.total);
        EXPECT_EQ(a.yhat, b.yhat);
        EXPECT_EQ(back.labels, m.labels);
    }
}

TEST(Grid, DefaultGridShape) {
    const auto g = default_grid(ModelSpec{});
    ASSERT_EQ(g.size(), 32u);
    std::set<std::tuple<double, double, SeasonalityMode>> seen;
    for (const auto& s : g) {
        EXPECT_GE(s.penalties.seasonality, 0.01);
        EXPECT_LE(s.penalties.seasonality, 10.0);
        seen.insert({s.penalties.seasonality, s.penalties.holidays, s.mode});
    }
    EXPECT_EQ(seen.size(), 32u);
}

TEST(Grid, SingleSpecAndEmpty) {
    auto f = seasonal_frame(24 * 60, 10);
    ModelSpec spec;
    spec.fourier.yearly = 0;
    std::vector<ModelSpec> one{spec};
    const auto r = grid_search(f, one);
    EXPECT_EQ(r.best_index, 0u);
    EXPECT_EQ(r.table.size(), 1u);
    EXPECT_THROW(grid_search(f, std::vector<ModelSpec>{}), Error);
}

TEST(Grid, ScoresMatchDirectComputation) {
    auto f = seasonal_frame(24 * 60, 11);
    ModelSpec good;
    good.fourier.yearly = 0;
    good.regressor_names = {"x"};
    ModelSpec blind = good;  // no seasonality, no regressor
    blind.fourier = {0, 0, 0};
    blind.regressor_names.clear();
    std::vector<ModelSpec> grid{blind, good};
    const auto r = grid_search(f, grid, 0.2);
    ASSERT_EQ(r.table.size(), 2u);

    const auto cut = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(f.size())));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto m = fit(f.slice(0, cut), grid[k]);
        const auto hold = f.slice(cut, f.size());
        const auto p = predict(m, hold);
        EXPECT_NEAR(r.table[k].armse, testsupport::oracle_armse(hold.y, p.yhat, 2.0), 1e-9);
        EXPECT_NEAR(r.table[k].mae, testsupport::oracle_mae(hold.y, p.yhat), 1e-9);
    }
    EXPECT_EQ(r.best_index, 1u);
    EXPECT_LT(r.table[1].armse, r.table[0].armse);
}

TEST(Grid, TieGoesToEarlierEntry) {
    auto f = seasonal_frame(24 * 40, 12);
    ModelSpec spec;
    spec.fourier.yearly = 0;
    std::vector<ModelSpec> grid{spec, spec, spec};
    const auto r = grid_search(f, grid);
    EXPECT_EQ(r.best_index, 0u);
}

TEST(Diagnostics, SpikeFlagged) {
    auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 24 * 10);
    f.y.assign(f.size(), 5.0);
    ModelSpec spec;
    spec.fourier = {0, 0, 0};
    const auto m = fit(f, spec);
    auto hold = hourly_frame(ts("2024-01-11T00:00:00Z"), 5);
    hold.y = {5, 5, 5, 5, -95};
    const auto d = residual_diagnostics(m, hold);
    ASSERT_EQ(d.residuals.size(), 5u);
    EXPECT_NEAR(d.residuals[4], 100.0, 1e-6);
    ASSERT_EQ(d.outliers.size(), 1u);
    EXPECT_EQ(d.outliers[0], 4u);
    std::size_t total = 0;
    for (auto c : d.histogram.counts) total += c;
    EXPECT_EQ(total, 5u);
    EXPECT_EQ(d.histogram.edges.size(), d.histogram.counts.size() + 1);
    EXPECT_EQ(d.qq.size(), 5u);
}

TEST(Diagnostics, PerfectForecast) {
    auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 24 * 10);
    f.y.assign(f.size(), 5.0);
    ModelSpec spec;
    spec.fourier = {0, 0, 0};
    const auto m = fit(f, spec);
    auto hold = hourly_frame(ts("2024-01-11T00:00:00Z"), 24);
    hold.y.assign(24, 5.0);
    const auto d = residual_diagnostics(m, hold);
    for (double r : d.residuals) EXPECT_NEAR(r, 0.0, 1e-6);
    EXPECT_TRUE(d.outliers.empty());
    EXPECT_THROW(residual_diagnostics(m, hourly_frame(ts("2024-01-11T00:00:00Z"), 0)), Error);
}

TEST(Diagnostics, RobustScaleMatchesHandComputation) {
    auto f = hourly_frame(ts("2024-01-01T00:00:00Z"), 24 * 10);
    f.y.assign(f.size(), 0.0);
    ModelSpec spec;
    spec.fourier = {0, 0, 0};
    const auto m = fit(f, spec);
    auto hold = hourly_frame(ts("2024-01-11T00:00:00Z"), 7);
    hold.y = {-1, -2, -3, -4, -5, -6, -60};  // residuals 1..6, 60
    const auto d = residual_diagnostics(m, hold);
    // median 4, absolute deviations {3,2,1,0,1,2,56} -> MAD 2
    EXPECT_NEAR(d.median, 4.0, 1e-9);
    EXPECT_NEAR(d.mad, 2.0, 1e-9);
    EXPECT_NEAR(d.robust_std, 1.4826 * 2.0, 1e-9);
    ASSERT_EQ(d.outliers.size(), 1u);
    EXPECT_EQ(d.outliers[0], 6u);
}

TEST(Holidays, EasterAndChristmasWindow) {
    using namespace std::chrono;
    EXPECT_EQ(easter_sunday(2024), sys_days{year{2024} / 3 / 31});
    EXPECT_EQ(easter_sunday(2023), sys_days{year{2023} / 4 / 9});
    EXPECT_EQ(easter_sunday(2025), sys_days{year{2025} / 4 / 20});
    const auto hs = england_wales_holidays(2024, 2024);
    bool christmas = false;
    for (const auto& w : hs) {
        EXPECT_LE(w.lower_window, 0);
        EXPECT_GE(w.upper_window, 0);
        if (w.name == "christmas") {
            christmas = true;
            ASSERT_EQ(w.anchors.size(), 1u);
            EXPECT_EQ(w.anchors[0] + days{w.lower_window}, sys_days{year{2024} / 12 / 19});
            EXPECT_EQ(w.anchors[0] + days{w.upper_window}, sys_days{year{2025} / 1 / 2});
        } else {
            EXPECT_EQ(w.lower_window, -1);
            EXPECT_EQ(w.upper_window, 1);
        }
    }
    EXPECT_TRUE(christmas);
}
