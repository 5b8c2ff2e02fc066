#include "paxcast/gam.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "paxcast/error.hpp"
#include "paxcast/evalx.hpp"
#include "paxcast/kernels.hpp"

namespace paxcast::gam {

using nlohmann::json;

std::string to_string(SeasonalityMode m) { return m == SeasonalityMode::Additive ? "additive" : "multiplicative"; }

SeasonalityMode mode_from_string(const std::string& s) {
    if (s == "additive") return SeasonalityMode::Additive;
    if (s == "multiplicative") return SeasonalityMode::Multiplicative;
    fail("unknown seasonality mode '" + s + "'");
}

void ModelSpec::validate() const {
    if (n_changepoints < 0) fail("n_changepoints must be >= 0");
    if (!(changepoint_range > 0.0 && changepoint_range <= 1.0)) fail("changepoint_range must lie in (0, 1]");
    if (fourier.daily < 0 || fourier.weekly < 0 || fourier.yearly < 0) fail("Fourier orders must be >= 0");
    for (double l : {penalties.trend, penalties.seasonality, penalties.holidays, penalties.regressors}) {
        if (!(l > 0.0) || !std::isfinite(l)) fail("penalty scales must be positive and finite");
    }
    for (const auto& h : holidays) h.validate();
    for (std::size_t i = 0; i < regressor_names.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (regressor_names[i] == regressor_names[j]) fail("duplicate regressor '" + regressor_names[i] + "'");
        }
    }
}

Frame Frame::slice(std::size_t begin, std::size_t end) const {
    Frame out;
    out.scaler_fingerprint = scaler_fingerprint;
    out.ds.assign(ds.begin() + static_cast<std::ptrdiff_t>(begin), ds.begin() + static_cast<std::ptrdiff_t>(end));
    if (!y.empty()) out.y.assign(y.begin() + static_cast<std::ptrdiff_t>(begin), y.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& [name, col] : regressors) {
        out.regressors[name].assign(col.begin() + static_cast<std::ptrdiff_t>(begin),
                                    col.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

TimeScale make_time_scale(std::span<const Timestamp> train_ds) {
    if (train_ds.empty()) fail("cannot derive a time scale from no rows");
    const auto [lo, hi] = std::minmax_element(train_ds.begin(), train_ds.end());
    const double span = epoch_days(*hi) - epoch_days(*lo);
    return {epoch_days(*lo), span > 0.0 ? span : 1.0};
}

std::vector<double> changepoint_locations(const ModelSpec& spec) {
    std::vector<double> out;
    for (int i = 1; i <= spec.n_changepoints; ++i) {
        out.push_back(spec.changepoint_range * static_cast<double>(i) / static_cast<double>(spec.n_changepoints));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Design matrix

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Seasonality {
    const char* name;
    double period_days;
    int order;
    ColumnGroup group;
};

std::vector<Seasonality> seasonalities(const ModelSpec& spec) {
    return {{"daily", 1.0, spec.fourier.daily, ColumnGroup::Daily},
            {"weekly", 7.0, spec.fourier.weekly, ColumnGroup::Weekly},
            {"yearly", 365.25, spec.fourier.yearly, ColumnGroup::Yearly}};
}

}  // namespace

DesignMatrix build_design_matrix(std::span<const Timestamp> ds, const ModelSpec& spec,
                                 const std::map<std::string, std::vector<double>>& regressors,
                                 const TimeScale& scale) {
    spec.validate();
    const std::size_t n = ds.size();
    for (const auto& name : spec.regressor_names) {
        auto it = regressors.find(name);
        if (it == regressors.end()) fail("missing regressor column '" + name + "'");
        if (it->second.size() != n) fail("regressor column '" + name + "' has the wrong length");
    }

    DesignMatrix X;
    X.rows = n;
    auto add = [&](std::string label, ColumnGroup g) -> double* {
        X.labels.push_back(std::move(label));
        X.groups.push_back(g);
        X.data.resize(X.data.size() + n);
        return X.data.data() + X.data.size() - n;
    };

    std::vector<double> t(n), t_days(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = scale.scaled(ds[i]);
        t_days[i] = epoch_days(ds[i]);
    }

    std::fill_n(add("trend_offset", ColumnGroup::TrendBase), n, 1.0);
    std::copy(t.begin(), t.end(), add("trend_slope", ColumnGroup::TrendBase));
    const auto cps = changepoint_locations(spec);
    for (std::size_t c = 0; c < cps.size(); ++c) {
        double* col = add("changepoint_" + std::to_string(c), ColumnGroup::Changepoint);
        for (std::size_t i = 0; i < n; ++i) col[i] = std::max(0.0, t[i] - cps[c]);
    }

    for (const auto& s : seasonalities(spec)) {
        for (int k = 1; k <= s.order; ++k) {
            add(std::string(s.name) + "_sin_" + std::to_string(k), s.group);
            double* cc = add(std::string(s.name) + "_cos_" + std::to_string(k), s.group);
            double* sc = cc - n;
            for (std::size_t i = 0; i < n; ++i) {
                const double arg = kTwoPi * static_cast<double>(k) * std::fmod(t_days[i], s.period_days) / s.period_days;
                sc[i] = std::sin(arg);
                cc[i] = std::cos(arg);
            }
        }
    }

    for (const auto& h : spec.holidays) {
        std::vector<std::chrono::sys_days> anchors = h.anchors;
        std::sort(anchors.begin(), anchors.end());
        for (int off = h.lower_window; off <= h.upper_window; ++off) {
            double* col = add("holiday:" + h.name + ":" + std::to_string(off), ColumnGroup::Holiday);
            for (std::size_t i = 0; i < n; ++i) {
                const auto anchor = floor_day(ds[i]) - Days{off};
                col[i] = std::binary_search(anchors.begin(), anchors.end(), anchor) ? 1.0 : 0.0;
            }
        }
    }

    for (const auto& name : spec.regressor_names) {
        const auto& src = regressors.at(name);
        std::copy(src.begin(), src.end(), add("regressor:" + name, ColumnGroup::Regressor));
    }
    return X;
}

DesignMatrix build_design_matrix(std::span<const Timestamp> ds, const ModelSpec& spec,
                                 const std::map<std::string, std::vector<double>>& regressors) {
    return build_design_matrix(ds, spec, regressors, make_time_scale(ds));
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

double group_penalty(ColumnGroup g, const PenaltyScales& p) {
    switch (g) {
        case ColumnGroup::TrendBase: return 0.0;
        case ColumnGroup::Changepoint: return 1.0 / p.trend;
        case ColumnGroup::Daily:
        case ColumnGroup::Weekly:
        case ColumnGroup::Yearly: return 1.0 / p.seasonality;
        case ColumnGroup::Holiday: return 1.0 / p.holidays;
        case ColumnGroup::Regressor: return 1.0 / p.regressors;
    }
    return 0.0;
}

bool is_trend(ColumnGroup g) { return g == ColumnGroup::TrendBase || g == ColumnGroup::Changepoint; }
bool is_seasonal(ColumnGroup g) {
    return g == ColumnGroup::Daily || g == ColumnGroup::Weekly || g == ColumnGroup::Yearly ||
           g == ColumnGroup::Holiday;
}

// Solves (G + diag(pen)) theta = b.
std::vector<double> solve_ridge(const std::vector<double>& gram, const std::vector<double>& b,
                                const std::vector<double>& pen) {
    const auto p = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXd A = Eigen::Map<const Eigen::MatrixXd>(gram.data(), p, p);
    for (Eigen::Index j = 0; j < p; ++j) A(j, j) += pen[static_cast<std::size_t>(j)];
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), p);
    Eigen::VectorXd theta;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
        theta = llt.solve(rhs);
    } else {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Internal, "penalized normal equations are singular");
        theta = ldlt.solve(rhs);
    }
    if (!theta.allFinite()) throw Error(ErrorKind::Internal, "non-finite coefficients");
    return {theta.data(), theta.data() + p};
}

// Ridge solve over a subset of columns, given explicitly as a column-major block.
std::vector<double> ridge_block(const kernels::KernelTable& k, const std::vector<double>& cols, std::size_t n,
                                std::size_t p, const std::vector<double>& target, const std::vector<double>& pen) {
    std::vector<double> g(p * p), b(p);
    kernels::gram(k, cols.data(), n, p, g.data());
    kernels::xty(k, cols.data(), n, p, target.data(), b.data());
    return solve_ridge(g, b, pen);
}

// Training data prepared once per design (shared across a penalty/mode grid).
struct Prepared {
    TimeScale scale;
    double y_scale = 1.0;
    DesignMatrix X;
    std::vector<double> y_s;
    std::vector<double> gram;  // lazily filled for the additive solve
    std::vector<double> xty;
};

std::shared_ptr<Prepared> prepare(const Frame& train, const ModelSpec& spec) {
    spec.validate();
    if (train.y.size() != train.size()) fail("training frame needs one target per row");
    auto P = std::make_shared<Prepared>();
    P->scale = make_time_scale(train.ds);
    P->X = build_design_matrix(train.ds, spec, train.regressors, P->scale);
    const std::size_t n = train.size();
    if (n < 2 * P->X.cols()) {
        fail("need at least " + std::to_string(2 * P->X.cols()) + " training rows for a design of width " +
             std::to_string(P->X.cols()) + ", got " + std::to_string(n));
    }
    for (double v : P->X.data) {
        if (!std::isfinite(v)) fail("non-finite value in design matrix");
    }
    double ymax = 0.0;
    for (double v : train.y) {
        if (!std::isfinite(v)) fail("non-finite value in target");
        ymax = std::max(ymax, std::fabs(v));
    }
    P->y_scale = ymax > 0.0 ? ymax : 1.0;
    P->y_s.resize(n);
    for (std::size_t i = 0; i < n; ++i) P->y_s[i] = train.y[i] / P->y_scale;
    return P;
}

std::vector<double> penalties_for(const DesignMatrix& X, const PenaltyScales& p) {
    std::vector<double> pen(X.cols());
    for (std::size_t j = 0; j < X.cols(); ++j) pen[j] = group_penalty(X.groups[j], p);
    return pen;
}

std::vector<double> fit_additive(Prepared& P, const PenaltyScales& penalties) {
    const auto& k = kernels::active();
    const std::size_t n = P.X.rows, p = P.X.cols();
    if (P.gram.empty()) {
        P.gram.resize(p * p);
        P.xty.resize(p);
        kernels::gram(k, P.X.data.data(), n, p, P.gram.data());
        kernels::xty(k, P.X.data.data(), n, p, P.y_s.data(), P.xty.data());
    }
    return solve_ridge(P.gram, P.xty, penalties_for(P.X, penalties));
}

// Alternating least squares on y = g(t) * (1 + S theta_s) + R beta, where
// g = T theta_t. Each half-step is an exact ridge solve so the penalized
// objective is non-increasing.
std::vector<double> fit_multiplicative(const Prepared& P, const PenaltyScales& penalties) {
    const auto& k = kernels::active();
    const DesignMatrix& X = P.X;
    const std::size_t n = X.rows, p = X.cols();
    const auto pen = penalties_for(X, penalties);

    std::vector<std::size_t> T, S, R;
    for (std::size_t j = 0; j < p; ++j) {
        if (is_trend(X.groups[j])) T.push_back(j);
        else if (is_seasonal(X.groups[j])) S.push_back(j);
        else R.push_back(j);
    }
    auto gather = [&](const std::vector<std::size_t>& idx) {
        std::vector<double> out(idx.size() * n);
        for (std::size_t c = 0; c < idx.size(); ++c) {
            std::copy_n(X.data.data() + idx[c] * n, n, out.data() + c * n);
        }
        return out;
    };
    auto sub_pen = [&](const std::vector<std::size_t>& idx) {
        std::vector<double> out;
        for (auto j : idx) out.push_back(pen[j]);
        return out;
    };
    std::vector<double> theta(p, 0.0);

    // Start from the additive fit of trend + regressors.
    {
        std::vector<std::size_t> TR = T;
        TR.insert(TR.end(), R.begin(), R.end());
        const auto sol = ridge_block(k, gather(TR), n, TR.size(), P.y_s, sub_pen(TR));
        for (std::size_t c = 0; c < TR.size(); ++c) theta[TR[c]] = sol[c];
    }

    const auto Tcols = gather(T);
    const auto Scols = gather(S);
    const auto Rcols = gather(R);
    std::vector<double> g(n), m(n), r(n), target(n);
    auto eval_block = [&](const std::vector<double>& cols, const std::vector<std::size_t>& idx, std::vector<double>& out) {
        std::vector<double> beta;
        for (auto j : idx) beta.push_back(theta[j]);
        kernels::gemv(k, cols.data(), n, idx.size(), beta.data(), out.data());
    };
    auto objective = [&]() {
        eval_block(Tcols, T, g);
        eval_block(Scols, S, m);
        eval_block(Rcols, R, r);
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = P.y_s[i] - g[i] * (1.0 + m[i]) - r[i];
            obj += e * e;
        }
        for (std::size_t j = 0; j < p; ++j) obj += pen[j] * theta[j] * theta[j];
        return obj;
    };

    double prev = objective();
    for (int iter = 0; iter < 50; ++iter) {
        // Seasonal + regressor block with g fixed.
        std::vector<std::size_t> SR = S;
        SR.insert(SR.end(), R.begin(), R.end());
        std::vector<double> cols(SR.size() * n);
        for (std::size_t c = 0; c < S.size(); ++c) {
            for (std::size_t i = 0; i < n; ++i) cols[c * n + i] = g[i] * Scols[c * n + i];
        }
        std::copy(Rcols.begin(), Rcols.end(), cols.begin() + static_cast<std::ptrdiff_t>(S.size() * n));
        for (std::size_t i = 0; i < n; ++i) target[i] = P.y_s[i] - g[i];
        auto sol = ridge_block(k, cols, n, SR.size(), target, sub_pen(SR));
        for (std::size_t c = 0; c < SR.size(); ++c) theta[SR[c]] = sol[c];
        eval_block(Scols, S, m);
        eval_block(Rcols, R, r);

        // Trend block with the seasonal multiplier fixed.
        std::vector<double> tcols(T.size() * n);
        for (std::size_t c = 0; c < T.size(); ++c) {
            for (std::size_t i = 0; i < n; ++i) tcols[c * n + i] = (1.0 + m[i]) * Tcols[c * n + i];
        }
        for (std::size_t i = 0; i < n; ++i) target[i] = P.y_s[i] - r[i];
        sol = ridge_block(k, tcols, n, T.size(), target, sub_pen(T));
        for (std::size_t c = 0; c < T.size(); ++c) theta[T[c]] = sol[c];

        const double obj = objective();
        if (prev - obj <= 1e-12 * std::max(1.0, prev)) break;
        prev = obj;
    }
    return theta;
}

FittedModel finish(const Prepared& P, const ModelSpec& spec, std::vector<double> theta, const Frame& train) {
    FittedModel m;
    m.spec = spec;
    m.time_scale = P.scale;
    m.y_scale = P.y_scale;
    m.labels = P.X.labels;
    m.groups = P.X.groups;
    m.coefficients = std::move(theta);
    m.changepoints = changepoint_locations(spec);
    m.scaler_fingerprint = train.scaler_fingerprint;
    const auto pred = predict(m, train);
    ResidualSummary rs;
    rs.n = train.size();
    double sum = 0.0, sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < rs.n; ++i) {
        const double e = pred.total[i] - train.y[i];
        sum += e;
        sq += e * e;
        ab += std::fabs(e);
    }
    rs.mean = sum / static_cast<double>(rs.n);
    rs.std = std::sqrt(std::max(0.0, sq / static_cast<double>(rs.n) - rs.mean * rs.mean));
    rs.mae = ab / static_cast<double>(rs.n);
    m.train_residuals = rs;
    return m;
}

FittedModel fit_prepared(Prepared& P, const ModelSpec& spec, const Frame& train) {
    auto theta = spec.mode == SeasonalityMode::Additive ? fit_additive(P, spec.penalties)
                                                        : fit_multiplicative(P, spec.penalties);
    return finish(P, spec, std::move(theta), train);
}

}  // namespace

FittedModel fit(const Frame& train, const ModelSpec& spec) {
    auto P = prepare(train, spec);
    return fit_prepared(*P, spec, train);
}

double FittedModel::base_slope_per_day() const {
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == "trend_slope") return coefficients[j] * y_scale / time_scale.span_days;
    }
    return 0.0;
}

double FittedModel::final_slope_per_day() const {
    double k = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == "trend_slope" || groups[j] == ColumnGroup::Changepoint) k += coefficients[j];
    }
    return k * y_scale / time_scale.span_days;
}

std::vector<Timestamp> FittedModel::changepoint_times() const {
    std::vector<Timestamp> out;
    for (double c : changepoints) {
        const double d = time_scale.origin_days + c * time_scale.span_days;
        out.push_back(from_epoch_seconds(static_cast<std::int64_t>(std::llround(d * 86400.0))));
    }
    return out;
}

std::vector<double> FittedModel::group_coefficients(ColumnGroup g) const {
    std::vector<double> out;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        if (groups[j] == g) out.push_back(coefficients[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Prediction

ComponentBreakdown predict(const FittedModel& model, const Frame& rows) {
    if (!model.scaler_fingerprint.empty() && rows.scaler_fingerprint != model.scaler_fingerprint) {
        fail("regressors were not scaled with the model's training scaler");
    }
    const DesignMatrix X = build_design_matrix(rows.ds, model.spec, rows.regressors, model.time_scale);
    if (X.labels != model.labels) throw Error(ErrorKind::Internal, "design columns do not match the fitted model");
    const auto& k = kernels::active();
    const std::size_t n = X.rows;

    auto group_sum = [&](auto pred) {
        std::vector<double> out(n, 0.0);
        for (std::size_t j = 0; j < X.cols(); ++j) {
            if (pred(X.groups[j])) k.axpy(model.coefficients[j], X.data.data() + j * n, out.data(), n);
        }
        return out;
    };
    auto only = [](ColumnGroup g) { return [g](ColumnGroup x) { return x == g; }; };

    ComponentBreakdown b;
    b.mode = model.spec.mode;
    b.ds = rows.ds;
    b.trend = group_sum(is_trend);
    b.daily = group_sum(only(ColumnGroup::Daily));
    b.weekly = group_sum(only(ColumnGroup::Weekly));
    b.yearly = group_sum(only(ColumnGroup::Yearly));
    b.holidays = group_sum(only(ColumnGroup::Holiday));
    b.regressors = group_sum(only(ColumnGroup::Regressor));

    const double ys = model.y_scale;
    auto rescale = [ys](std::vector<double>& v) {
        for (double& x : v) x *= ys;
    };
    rescale(b.trend);
    rescale(b.regressors);
    b.total.resize(n);
    if (b.mode == SeasonalityMode::Additive) {
        rescale(b.daily);
        rescale(b.weekly);
        rescale(b.yearly);
        rescale(b.holidays);
        for (std::size_t i = 0; i < n; ++i) {
            b.total[i] = b.trend[i] + b.daily[i] + b.weekly[i] + b.yearly[i] + b.holidays[i] + b.regressors[i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            b.total[i] = b.trend[i] * (1.0 + b.daily[i] + b.weekly[i] + b.yearly[i] + b.holidays[i]) + b.regressors[i];
        }
    }
    b.yhat = b.total;
    if (model.spec.clamp_nonnegative) {
        for (double& v : b.yhat) v = std::max(0.0, v);
    }
    return b;
}

// ---------------------------------------------------------------------------
// Grid search

std::vector<ModelSpec> make_grid(const ModelSpec& base, std::span<const double> seasonality_scales,
                                 std::span<const double> holiday_scales, std::span<const SeasonalityMode> modes) {
    std::vector<ModelSpec> out;
    for (auto mode : modes) {
        for (double s : seasonality_scales) {
            for (double h : holiday_scales) {
                ModelSpec spec = base;
                spec.mode = mode;
                spec.penalties.seasonality = s;
                spec.penalties.holidays = h;
                out.push_back(std::move(spec));
            }
        }
    }
    return out;
}

std::vector<ModelSpec> default_grid(const ModelSpec& base) {
    static constexpr double scales[] = {0.01, 0.1, 1.0, 10.0};
    static constexpr SeasonalityMode modes[] = {SeasonalityMode::Additive, SeasonalityMode::Multiplicative};
    return make_grid(base, scales, scales, modes);
}

GridResult grid_search(const Frame& train, std::span<const ModelSpec> grid, double validation_fraction) {
    if (grid.empty()) fail("grid search over an empty grid");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) fail("validation fraction must lie in (0, 1)");
    const std::size_t n = train.size();
    const auto n_fit = static_cast<std::size_t>(std::floor((1.0 - validation_fraction) * static_cast<double>(n)));
    if (n_fit == 0 || n_fit >= n) fail("validation split leaves an empty side");
    const Frame fit_part = train.slice(0, n_fit);
    const Frame val_part = train.slice(n_fit, n);

    // Specs that differ only in penalties or mode share one design and Gram matrix.
    std::map<std::string, std::shared_ptr<Prepared>> cache;
    auto design_key = [](ModelSpec s) {
        s.penalties = {};
        s.mode = SeasonalityMode::Additive;
        return to_json(s).dump();
    };

    GridResult result;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ModelSpec& spec = grid[i];
        auto& P = cache[design_key(spec)];
        if (!P) P = prepare(fit_part, spec);
        const FittedModel m = fit_prepared(*P, spec, fit_part);
        const auto pred = predict(m, val_part);
        result.table.push_back({i, spec, evalx::armse(val_part.y, pred.yhat), evalx::mae(val_part.y, pred.yhat)});
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.table.size(); ++i) {
        const auto& c = result.table[i];
        const auto& b = result.table[best];
        if (c.armse < b.armse - 1e-12 || (std::fabs(c.armse - b.armse) <= 1e-12 && c.mae < b.mae - 1e-12)) best = i;
    }
    result.best_index = best;
    result.best = grid[best];
    return result;
}

// ---------------------------------------------------------------------------
// Diagnostics

ResidualDiagnostics residual_diagnostics(const FittedModel& model, const Frame& holdout, std::size_t bins,
                                         double outlier_c) {
    if (holdout.size() == 0) fail("residual diagnostics need a non-empty holdout");
    if (holdout.y.size() != holdout.size()) fail("holdout rows need observed y");
    if (bins == 0) fail("histogram needs at least one bin");
    const auto pred = predict(model, holdout);
    ResidualDiagnostics d;
    d.ds = holdout.ds;
    const std::size_t n = holdout.size();
    d.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.residuals[i] = pred.yhat[i] - holdout.y[i];

    const double nn = static_cast<double>(n);
    d.mean = std::accumulate(d.residuals.begin(), d.residuals.end(), 0.0) / nn;
    double ss = 0.0;
    for (double e : d.residuals) ss += (e - d.mean) * (e - d.mean);
    d.std = std::sqrt(ss / nn);

    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    d.median = median_of(d.residuals);
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = std::fabs(d.residuals[i] - d.median);
    d.mad = median_of(dev);
    d.robust_std = 1.4826 * d.mad;
    // floor keeps round-off from being flagged when the MAD collapses to zero
    d.threshold = std::max(outlier_c * d.robust_std, 1e-9 * model.y_scale);
    for (std::size_t i = 0; i < n; ++i) {
        if (dev[i] > d.threshold) d.outliers.push_back(i);
    }

    const auto [lo_it, hi_it] = std::minmax_element(d.residuals.begin(), d.residuals.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    d.histogram.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) d.histogram.edges[b] = lo + width * static_cast<double>(b);
    d.histogram.counts.assign(bins, 0);
    for (double e : d.residuals) {
        auto b = static_cast<std::size_t>((e - lo) / width);
        d.histogram.counts[std::min(b, bins - 1)] += 1;
    }

    std::vector<double> sorted = d.residuals;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double prob = (static_cast<double>(i) + 0.5) / nn;
        double q = d.mean;
        if (d.std > 0.0) q = boost::math::quantile(boost::math::normal(d.mean, d.std), prob);
        d.qq.emplace_back(q, sorted[i]);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

std::string group_name(ColumnGroup g) {
    switch (g) {
        case ColumnGroup::TrendBase: return "trend";
        case ColumnGroup::Changepoint: return "changepoint";
        case ColumnGroup::Daily: return "daily";
        case ColumnGroup::Weekly: return "weekly";
        case ColumnGroup::Yearly: return "yearly";
        case ColumnGroup::Holiday: return "holiday";
        case ColumnGroup::Regressor: return "regressor";
    }
    return "?";
}

ColumnGroup group_from_name(const std::string& s) {
    for (auto g : {ColumnGroup::TrendBase, ColumnGroup::Changepoint, ColumnGroup::Daily, ColumnGroup::Weekly,
                   ColumnGroup::Yearly, ColumnGroup::Holiday, ColumnGroup::Regressor}) {
        if (group_name(g) == s) return g;
    }
    fail("unknown column group '" + s + "'");
}

}  // namespace

json to_json(const ModelSpec& spec) {
    json holidays = json::array();
    for (const auto& h : spec.holidays) {
        json anchors = json::array();
        for (auto d : h.anchors) anchors.push_back(format_date(d));
        holidays.push_back({{"name", h.name},
                            {"anchors", anchors},
                            {"lower_window", h.lower_window},
                            {"upper_window", h.upper_window}});
    }
    return {{"n_changepoints", spec.n_changepoints},
            {"changepoint_range", spec.changepoint_range},
            {"fourier_orders",
             {{"daily", spec.fourier.daily}, {"weekly", spec.fourier.weekly}, {"yearly", spec.fourier.yearly}}},
            {"seasonality_mode", to_string(spec.mode)},
            {"holiday_windows", holidays},
            {"regressor_names", spec.regressor_names},
            {"penalty_scales",
             {{"trend", spec.penalties.trend},
              {"seasonality", spec.penalties.seasonality},
              {"holidays", spec.penalties.holidays},
              {"regressors", spec.penalties.regressors}}},
            {"clamp_nonnegative", spec.clamp_nonnegative}};
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.n_changepoints = j.value("n_changepoints", s.n_changepoints);
    s.changepoint_range = j.value("changepoint_range", s.changepoint_range);
    if (j.contains("fourier_orders")) {
        const auto& f = j.at("fourier_orders");
        s.fourier.daily = f.value("daily", s.fourier.daily);
        s.fourier.weekly = f.value("weekly", s.fourier.weekly);
        s.fourier.yearly = f.value("yearly", s.fourier.yearly);
    }
    if (j.contains("seasonality_mode")) s.mode = mode_from_string(j.at("seasonality_mode").get<std::string>());
    if (j.contains("holiday_windows")) {
        for (const auto& h : j.at("holiday_windows")) {
            HolidayWindow w;
            w.name = h.at("name").get<std::string>();
            w.lower_window = h.value("lower_window", 0);
            w.upper_window = h.value("upper_window", 0);
            for (const auto& a : h.at("anchors")) w.anchors.push_back(floor_day(parse_time(a.get<std::string>())));
            s.holidays.push_back(std::move(w));
        }
    }
    if (j.contains("regressor_names")) s.regressor_names = j.at("regressor_names").get<std::vector<std::string>>();
    if (j.contains("penalty_scales")) {
        const auto& p = j.at("penalty_scales");
        s.penalties.trend = p.value("trend", s.penalties.trend);
        s.penalties.seasonality = p.value("seasonality", s.penalties.seasonality);
        s.penalties.holidays = p.value("holidays", s.penalties.holidays);
        s.penalties.regressors = p.value("regressors", s.penalties.regressors);
    }
    s.clamp_nonnegative = j.value("clamp_nonnegative", s.clamp_nonnegative);
    s.validate();
    return s;
}

json to_json(const FittedModel& m) {
    json groups = json::array();
    for (auto g : m.groups) groups.push_back(group_name(g));
    json cp_times = json::array();
    for (auto t : m.changepoint_times()) cp_times.push_back(format_time(t));
    return {{"spec", to_json(m.spec)},
            {"time_scale", {{"origin_days", m.time_scale.origin_days}, {"span_days", m.time_scale.span_days}}},
            {"y_scale", m.y_scale},
            {"column_labels", m.labels},
            {"column_groups", groups},
            {"coefficients", m.coefficients},
            {"changepoints", m.changepoints},
            {"changepoint_times", cp_times},
            {"train_residuals",
             {{"n", m.train_residuals.n},
              {"mean", m.train_residuals.mean},
              {"std", m.train_residuals.std},
              {"mae", m.train_residuals.mae}}},
            {"scaler_fingerprint", m.scaler_fingerprint}};
}

FittedModel model_from_json(const json& j) {
    FittedModel m;
    m.spec = spec_from_json(j.at("spec"));
    m.time_scale = {j.at("time_scale").at("origin_days").get<double>(), j.at("time_scale").at("span_days").get<double>()};
    m.y_scale = j.at("y_scale").get<double>();
    m.labels = j.at("column_labels").get<std::vector<std::string>>();
    for (const auto& g : j.at("column_groups")) m.groups.push_back(group_from_name(g.get<std::string>()));
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.changepoints = j.at("changepoints").get<std::vector<double>>();
    const auto& r = j.at("train_residuals");
    m.train_residuals = {r.at("n").get<std::size_t>(), r.at("mean").get<double>(), r.at("std").get<double>(),
                         r.at("mae").get<double>()};
    m.scaler_fingerprint = j.value("scaler_fingerprint", std::string{});
    if (m.labels.size() != m.coefficients.size() || m.groups.size() != m.labels.size()) {
        fail("fitted model has inconsistent coefficient and label counts");
    }
    return m;
}

}  // namespace paxcast::gam
