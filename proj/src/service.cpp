#include "paxcast/service.hpp"

#include <fstream>
#include <mutex>

#include "paxcast/error.hpp"

namespace paxcast::service {

using nlohmann::json;

namespace {

Error unprocessable(const std::string& msg) { return Error(ErrorKind::Unprocessable, msg); }

}  // namespace

WhatIfRequest parse_whatif(const json& body) {
    if (!body.is_object()) throw unprocessable("what-if body must be a JSON object");
    WhatIfRequest req;
    if (!body.contains("station") || !body.at("station").is_string()) {
        throw unprocessable("what-if body needs a string 'station'");
    }
    req.station = body.at("station").get<std::string>();
    if (body.contains("days")) {
        if (!body.at("days").is_number_integer()) throw unprocessable("'days' must be an integer");
        req.days = body.at("days").get<int>();
    }
    if (!body.contains("deltas") || !body.at("deltas").is_array()) throw unprocessable("what-if body needs a 'deltas' array");
    std::size_t i = 0;
    for (const auto& d : body.at("deltas")) {
        const std::string where = "deltas[" + std::to_string(i++) + "]";
        if (!d.is_object()) throw unprocessable(where + " must be an object");
        if (!d.contains("hour") || !d.at("hour").is_string()) throw unprocessable(where + ".hour must be a timestamp string");
        if (!d.contains("role") || !d.at("role").is_string()) throw unprocessable(where + ".role must be a string");
        if (!d.contains("change") || !d.at("change").is_number_integer()) {
            throw unprocessable(where + ".change must be an integer");
        }
        const auto hour = try_parse_time(d.at("hour").get<std::string>());
        if (!hour) throw unprocessable(where + ".hour is not an ISO-8601 timestamp");
        if (floor_hour(*hour) != *hour) throw unprocessable(where + ".hour must be a whole hour");
        req.deltas.push_back({req.station, *hour, d.at("role").get<std::string>(), d.at("change").get<int>()});
    }
    return req;
}

ForecastService::ForecastService(config::AppConfig cfg) : cfg_(std::move(cfg)) {
    const auto loaded = pipeline::load_panel(cfg_);
    const auto bookings = panel::read_events_csv(pipeline::bookings_path(cfg_.work_dir));
    const auto events = panel::ingest_events(bookings, cfg_.stations);
    const auto weather = std::filesystem::exists(cfg_.weather_path()) ? panel::read_weather_csv(cfg_.weather_path())
                                                                      : std::vector<panel::WeatherObservation>{};
    json meta;
    {
        std::ifstream in(pipeline::ingest_meta_path(cfg_.work_dir));
        meta = json::parse(in);
    }
    for (const auto& st : cfg_.stations) {
        StationData d{loaded.series.at(st), loaded.sidecars.at(st), {}, {}, {}};
        if (meta.contains("tuag_rates") && meta.at("tuag_rates").contains(st)) {
            for (const auto& [m, r] : meta.at("tuag_rates").at(st).items()) {
                d.tuag_rates[static_cast<unsigned>(std::stoi(m))] = r.at("rate").get<double>();
            }
        }
        data_.emplace(st, std::move(d));
    }
    for (const auto& e : events.prebooked) data_.at(e.station).bookings.push_back(e);
    for (const auto& w : weather) {
        if (auto it = data_.find(w.station); it != data_.end()) it->second.weather.push_back(w);
    }
    if (std::filesystem::exists(cfg_.roster_path())) roster_ = workforce::read_roster_csv(cfg_.roster_path());
    if (std::filesystem::exists(store::manifest_path(cfg_.work_dir))) reload_models();
}

void ForecastService::reload_models() {
    auto set = std::make_shared<ModelSet>();
    set->models = store::load_all(cfg_.work_dir, &set->manifest);
    for (const auto& [st, d] : data_) {
        auto it = set->manifest.stations.find(st);
        if (it != set->manifest.stations.end() && it->second.scaler_fingerprint != d.sidecar.scaler.fingerprint()) {
            throw Error(ErrorKind::NotReady, "models for " + st + " were trained on a different panel: retrain");
        }
    }
    install_models(std::move(set));
}

void ForecastService::install_models(std::shared_ptr<const ModelSet> set) {
    std::unique_lock lock(mu_);
    models_ = std::move(set);
}

std::shared_ptr<const ModelSet> ForecastService::models() const {
    std::shared_lock lock(mu_);
    return models_;
}

std::vector<std::string> ForecastService::stations() const { return cfg_.stations; }

const ForecastService::StationData& ForecastService::station(const std::string& code) const {
    auto it = data_.find(code);
    if (it == data_.end()) throw Error(ErrorKind::NotFound, "unknown station '" + code + "'");
    return it->second;
}

const horizon::BucketModels& ForecastService::station_models(const ModelSet& set, const std::string& code) const {
    auto it = set.models.find(code);
    if (it == set.models.end()) throw Error(ErrorKind::NotReady, "no trained models for station " + code);
    return it->second;
}

double ForecastService::tuag_rate(const std::string& code, Timestamp hour) const {
    const auto& d = station(code);
    const unsigned m = static_cast<unsigned>(std::chrono::year_month_day{floor_day(hour)}.month());
    auto it = d.tuag_rates.find(m);
    return it == d.tuag_rates.end() ? 0.0 : it->second;
}

std::vector<horizon::TrajectoryRow> ForecastService::forecast(const std::string& code, Timestamp origin,
                                                              Timestamp from, Timestamp to) const {
    const auto& d = station(code);
    const auto set = models();
    if (!set) throw Error(ErrorKind::NotReady, "no trained models: run `train` first");
    const auto& models = station_models(*set, code);
    if (to < from) fail("forecast range end precedes its start");
    if (from <= origin) fail("forecast range must start after the origin " + format_time(origin));
    if (to - from > Days{400}) fail("forecast range longer than 400 days");
    const auto future = pipeline::build_inference_features(d.sidecar, from, to, d.bookings, d.weather, origin);
    return horizon::forecast_trajectory(models, cfg_.buckets, origin, from, to, future, d.sidecar.scaler.fingerprint());
}

json ForecastService::forecast_json(const std::string& code, Timestamp origin, Timestamp from, Timestamp to) const {
    const auto rows = forecast(code, origin, from, to);
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"hour", format_time(r.hour)},
                       {"horizon_days", r.horizon_days},
                       {"bucket", r.bucket},
                       {"yhat", r.yhat},
                       {"tuag_indicative", r.yhat * tuag_rate(code, r.hour)}});
    }
    return {{"station", code}, {"origin", format_time(origin)}, {"rows", out}};
}

gam::ComponentBreakdown ForecastService::components(const std::string& code, const std::string& bucket_name,
                                                   Timestamp from, Timestamp to,
                                                   std::optional<Timestamp> origin) const {
    const auto& d = station(code);
    const auto& bucket = cfg_.buckets.by_name(bucket_name);
    const auto set = models();
    if (!set) throw Error(ErrorKind::NotReady, "no trained models: run `train` first");
    const auto& models = station_models(*set, code);
    auto mit = models.find(bucket.name);
    if (mit == models.end()) throw Error(ErrorKind::NotReady, "no trained model for " + code + " bucket " + bucket.name);
    if (to < from) fail("component range end precedes its start");
    if (floor_hour(from) != from || floor_hour(to) != to) fail("component range must start and end on whole hours");
    if (to - from > Days{400}) fail("component range longer than 400 days");

    panel::StationSeries rows;
    if (origin) {
        rows = pipeline::build_inference_features(d.sidecar, from, to, d.bookings, d.weather, *origin);
    } else {
        const auto i0 = d.series.index_of(from), i1 = d.series.index_of(to);
        if (!i0 || !i1) {
            fail("component range lies outside the panel span; pass an origin to use as-of features");
        }
        rows.station = code;
        rows.start = from;
        rows.y.assign(d.series.y.begin() + static_cast<std::ptrdiff_t>(*i0),
                      d.series.y.begin() + static_cast<std::ptrdiff_t>(*i1) + 1);
        rows.split.assign(d.series.split.begin() + static_cast<std::ptrdiff_t>(*i0),
                          d.series.split.begin() + static_cast<std::ptrdiff_t>(*i1) + 1);
        for (const auto& [name, col] : d.series.columns) {
            rows.columns[name].assign(col.begin() + static_cast<std::ptrdiff_t>(*i0),
                                      col.begin() + static_cast<std::ptrdiff_t>(*i1) + 1);
        }
    }
    auto frame = horizon::frame_from_series(rows, bucket.regressors, std::nullopt, d.sidecar.scaler.fingerprint());
    frame.y.clear();
    return gam::predict(mit->second, frame);
}

json ForecastService::components_json(const std::string& code, const std::string& bucket, Timestamp from,
                                      Timestamp to, std::optional<Timestamp> origin) const {
    const auto b = components(code, bucket, from, to, origin);
    json rows = json::array();
    for (std::size_t i = 0; i < b.ds.size(); ++i) {
        rows.push_back({{"hour", format_time(b.ds[i])},
                        {"trend", b.trend[i]},
                        {"daily", b.daily[i]},
                        {"weekly", b.weekly[i]},
                        {"yearly", b.yearly[i]},
                        {"holidays", b.holidays[i]},
                        {"regressors", b.regressors[i]},
                        {"total", b.total[i]},
                        {"yhat", b.yhat[i]}});
    }
    return {{"station", code}, {"bucket", bucket}, {"mode", gam::to_string(b.mode)}, {"rows", rows}};
}

workforce::HeatmapInputs ForecastService::heatmap_inputs(const std::string& code, int days) const {
    station(code);
    if (days <= 0) days = kDefaultDays;
    if (days > 366) fail("heatmap limited to 366 days");
    const Timestamp origin = cfg_.origin();
    auto first_day = floor_day(origin);
    if (Timestamp{first_day} + Hours{cfg_.display.first} <= origin) first_day += Days{1};
    const Timestamp from = Timestamp{first_day} + Hours{cfg_.display.first};
    const Timestamp to = Timestamp{first_day + Days{days - 1}} + Hours{cfg_.display.last};

    workforce::HeatmapInputs in;
    in.station = code;
    for (const auto& r : forecast(code, origin, from, to)) in.forecast.emplace(r.hour, r.yhat);
    in.roster = roster_;
    in.roles = cfg_.roles;
    in.params = cfg_.capacity;
    in.first_day = first_day;
    in.days = days;
    in.display = cfg_.display;
    return in;
}

json ForecastService::heatmap_to_json(const workforce::RagHeatmap& h) const {
    json j = workforce::to_json(h);
    j["origin"] = format_time(cfg_.origin());
    for (auto& c : j.at("cells")) {
        const auto hour = parse_time(c.at("hour").get<std::string>());
        c["tuag_indicative"] = c.at("yhat").get<double>() * tuag_rate(h.station, hour);
    }
    return j;
}

workforce::RagHeatmap ForecastService::heatmap(const std::string& code, int days) const {
    return workforce::build_heatmap(heatmap_inputs(code, days));
}

json ForecastService::heatmap_json(const std::string& code, int days) const { return heatmap_to_json(heatmap(code, days)); }

workforce::WhatIfResult ForecastService::whatif(const WhatIfRequest& req) const {
    const auto in = heatmap_inputs(req.station, req.days);
    const auto baseline = workforce::build_heatmap(in);
    for (const auto& d : req.deltas) {
        const auto h = hour_of_day(d.hour);
        const auto day = floor_day(d.hour);
        if (day < in.first_day || day >= in.first_day + Days{in.days} || h < in.display.first || h > in.display.last) {
            throw unprocessable("delta hour " + format_time(d.hour) + " lies outside the heatmap window");
        }
    }
    return workforce::whatif(in, baseline, req.deltas);
}

json ForecastService::whatif_json(const WhatIfRequest& req) const {
    const auto r = whatif(req);
    json changes = json::array();
    for (const auto& c : r.changes) {
        changes.push_back({{"hour", format_time(c.hour)},
                           {"before", workforce::to_string(c.before)},
                           {"after", workforce::to_string(c.after)}});
    }
    return {{"heatmap", heatmap_to_json(r.heatmap)}, {"changes", changes}};
}

gam::ResidualDiagnostics ForecastService::diagnostics(const std::string& code, const std::string& bucket_name) const {
    const auto& d = station(code);
    const auto& bucket = cfg_.buckets.by_name(bucket_name);
    const auto set = models();
    if (!set) throw Error(ErrorKind::NotReady, "no trained models: run `train` first");
    const auto& models = station_models(*set, code);
    auto mit = models.find(bucket.name);
    if (mit == models.end()) throw Error(ErrorKind::NotReady, "no trained model for " + code + " bucket " + bucket.name);
    const auto holdout =
        horizon::frame_from_series(d.series, bucket.regressors, panel::SplitTag::Test, d.sidecar.scaler.fingerprint());
    return gam::residual_diagnostics(mit->second, holdout);
}

json ForecastService::diagnostics_json(const std::string& code, const std::string& bucket) const {
    const auto r = diagnostics(code, bucket);
    json residuals = json::array();
    for (std::size_t i = 0; i < r.ds.size(); ++i) {
        residuals.push_back({{"hour", format_time(r.ds[i])}, {"residual", r.residuals[i]}});
    }
    json qq = json::array();
    for (const auto& [t, e] : r.qq) qq.push_back({t, e});
    json outliers = json::array();
    for (auto i : r.outliers) outliers.push_back({{"hour", format_time(r.ds[i])}, {"residual", r.residuals[i]}});
    return {{"station", code},
            {"bucket", bucket},
            {"n", r.residuals.size()},
            {"mean", r.mean},
            {"std", r.std},
            {"median", r.median},
            {"mad", r.mad},
            {"robust_std", r.robust_std},
            {"outlier_threshold", r.threshold},
            {"histogram", {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}}},
            {"qq", qq},
            {"outliers", outliers},
            {"residuals", residuals}};
}

}  // namespace paxcast::service
