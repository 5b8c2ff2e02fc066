#include "paxcast/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "paxcast/csv.hpp"
#include "paxcast/error.hpp"
#include "paxcast/kernels.hpp"

namespace paxcast::evalx {

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) {
        fail("length mismatch: " + std::to_string(y.size()) + " observations vs " + std::to_string(yhat.size()) +
             " forecasts");
    }
    if (y.empty()) fail("metric over an empty series");
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat);
    return kernels::active().sum_abs_diff(y.data(), yhat.data(), y.size()) / static_cast<double>(y.size());
}

double armse(std::span<const double> y, std::span<const double> yhat, double under_weight) {
    check_pair(y, yhat);
    const double s = kernels::active().asym_sq_sum(y.data(), yhat.data(), y.size(), under_weight);
    return std::sqrt(s / static_cast<double>(y.size()));
}

double rmse(std::span<const double> y, std::span<const double> yhat) { return armse(y, yhat, 1.0); }

double coverage(std::span<const double> y, std::span<const double> yhat, double delta) {
    if (!(delta >= 0.0)) fail("coverage tolerance must be non-negative");
    check_pair(y, yhat);
    const auto hits = kernels::active().count_within(y.data(), yhat.data(), y.size(), delta);
    return 100.0 * static_cast<double>(hits) / static_cast<double>(y.size());
}

std::vector<double> yoy_baseline(const HourlySeries& history, std::span<const Timestamp> targets,
                                 double growth_factor) {
    std::vector<double> out;
    out.reserve(targets.size());
    std::vector<std::string> missing;
    for (auto t : targets) {
        auto it = history.y.find(t - kYoyLag);
        if (it == history.y.end()) {
            missing.push_back(format_time(t));
            out.push_back(0.0);
        } else {
            out.push_back(it->second * growth_factor);
        }
    }
    if (!missing.empty()) {
        std::string msg = "YoY baseline for " + history.station + " lacks lagged observations for " +
                          std::to_string(missing.size()) + " hour(s):";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
        if (missing.size() > 10) msg += " ...";
        fail(msg);
    }
    return out;
}

void EvalConfig::validate() const {
    if (!(under_prediction_weight >= 1.0)) fail("under-prediction weight must be >= 1");
    for (const auto& [station, d] : tolerances) {
        if (!(d >= 0.0)) fail("tolerance for " + station + " must be non-negative");
    }
}

double EvalConfig::tolerance(const std::string& station) const {
    auto it = tolerances.find(station);
    if (it == tolerances.end()) throw Error(ErrorKind::NotFound, "no tolerance configured for station " + station);
    return it->second;
}

double default_tolerance(double mean_daily_demand) { return std::max(2.0, std::ceil(0.1 * mean_daily_demand)); }

std::string to_string(Resolution r) { return r == Resolution::Hourly ? "hourly" : "daily"; }

void EvalReport::write_csv(std::ostream& out) const {
    out << "station,horizon,mae,armse,coverage_pct,resolution,n\n";
    for (const auto& r : rows) {
        csv::write_row(out, {r.station, r.horizon, csv::format_double(r.mae), csv::format_double(r.armse),
                             csv::format_double(r.coverage_pct), to_string(r.resolution), std::to_string(r.n)});
    }
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path.string() + "'");
    write_csv(out);
}

EvalReport evaluate_by_bucket(std::span<const ForecastRow> forecasts, std::span<const HourlySeries> observations,
                              std::span<const std::string> horizons, const EvalConfig& config) {
    config.validate();
    std::map<std::string, const HourlySeries*> obs;
    for (const auto& o : observations) obs[o.station] = &o;

    // (station, horizon) -> hour -> (y, yhat)
    std::map<std::pair<std::string, std::string>, std::map<Timestamp, std::pair<double, double>>> groups;
    for (const auto& f : forecasts) {
        auto oit = obs.find(f.station);
        if (oit == obs.end()) fail("forecast for station " + f.station + " has no observations");
        auto yit = oit->second->y.find(f.hour);
        if (yit == oit->second->y.end()) {
            fail("forecast " + f.station + " " + format_time(f.hour) + " has no matching observation");
        }
        if (f.horizon != kBaselineHorizon && std::find(horizons.begin(), horizons.end(), f.horizon) == horizons.end()) {
            fail("forecast row tagged with unknown horizon '" + f.horizon + "'");
        }
        auto [it, inserted] = groups[{f.station, f.horizon}].emplace(f.hour, std::make_pair(yit->second, f.yhat));
        if (!inserted) fail("duplicate forecast " + f.station + " " + f.horizon + " " + format_time(f.hour));
    }

    std::vector<std::string> order{kBaselineHorizon};
    order.insert(order.end(), horizons.begin(), horizons.end());

    std::vector<std::string> stations;
    for (const auto& [key, rows] : groups) {
        if (std::find(stations.begin(), stations.end(), key.first) == stations.end()) stations.push_back(key.first);
    }

    EvalReport report;
    for (const auto& station : stations) {
        const double delta = config.tolerance(station);
        for (auto res : {Resolution::Hourly, Resolution::Daily}) {
            for (const auto& h : order) {
                auto git = groups.find({station, h});
                if (git == groups.end()) fail("no forecasts for " + station + " horizon " + h);
                std::vector<double> y, yhat;
                if (res == Resolution::Hourly) {
                    for (const auto& [t, v] : git->second) {
                        y.push_back(v.first);
                        yhat.push_back(v.second);
                    }
                } else {
                    std::map<std::chrono::sys_days, std::pair<double, double>> days;
                    for (const auto& [t, v] : git->second) {
                        auto& d = days[floor_day(t)];
                        d.first += v.first;
                        d.second += v.second;
                    }
                    for (const auto& [d, v] : days) {
                        y.push_back(v.first);
                        yhat.push_back(v.second);
                    }
                }
                report.rows.push_back({station, h, res, mae(y, yhat), armse(y, yhat, config.under_prediction_weight),
                                       coverage(y, yhat, delta), y.size()});
            }
        }
    }
    return report;
}

}  // namespace paxcast::evalx
