#include "paxcast/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "paxcast/error.hpp"
#include "paxcast/holidays.hpp"

namespace paxcast::config {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

panel::ImputePolicy impute_from_string(const std::string& s) {
    if (s == "ffill_then_train_mean") return panel::ImputePolicy::ForwardFillThenTrainMean;
    if (s == "train_mean") return panel::ImputePolicy::TrainMean;
    fail("unknown imputation policy '" + s + "'");
}

std::string to_string(panel::ImputePolicy p) {
    return p == panel::ImputePolicy::TrainMean ? "train_mean" : "ffill_then_train_mean";
}

}  // namespace

gam::ModelSpec AppConfig::base_spec() const {
    gam::ModelSpec s = model;
    if (holiday_calendar == "england_wales") {
        const Timestamp last = std::max(span.end, origin()) + Days{400};
        s.holidays = gam::england_wales_holidays(
            static_cast<int>(std::chrono::year_month_day{floor_day(span.start)}.year()) - 1,
            static_cast<int>(std::chrono::year_month_day{floor_day(last)}.year()));
    } else {
        s.holidays.clear();
    }
    return s;
}

std::vector<gam::ModelSpec> AppConfig::spec_grid() const {
    return gam::make_grid(base_spec(), grid.seasonality_scales, grid.holiday_scales, grid.modes);
}

void AppConfig::validate() const {
    if (stations.empty()) fail("config lists no stations");
    for (std::size_t i = 0; i < stations.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (stations[i] == stations[j]) fail("station " + stations[i] + " listed twice");
        }
    }
    if (span.end <= span.start) fail("config span is empty");
    if (floor_hour(span.start) != span.start || floor_hour(span.end) != span.end) {
        fail("config span must start and end on whole hours");
    }
    asof.validate();
    model.validate();
    if (holiday_calendar != "england_wales" && holiday_calendar != "none") {
        fail("unknown holiday calendar '" + holiday_calendar + "'");
    }
    if (grid.seasonality_scales.empty() || grid.holiday_scales.empty() || grid.modes.empty()) {
        fail("model grid is empty");
    }
    for (double v : grid.seasonality_scales) {
        if (!(v > 0.0)) fail("grid penalty scales must be positive");
    }
    for (double v : grid.holiday_scales) {
        if (!(v > 0.0)) fail("grid penalty scales must be positive");
    }
    if (!(grid.validation_fraction > 0.0 && grid.validation_fraction < 1.0)) {
        fail("validation fraction must lie in (0, 1)");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train fraction must lie in (0, 1)");
    eval.validate();
    if (!(yoy_growth > 0.0)) fail("YoY growth factor must be positive");
    capacity.validate();
    for (const auto& [code, r] : roles) r.validate();
    if (port < 0 || port > 65535) fail("service port out of range");
    if (display.first < 0 || display.last > 23 || display.first > display.last) {
        fail("display hours must satisfy 0 <= first <= last <= 23");
    }
    if (planning_origin && *planning_origin > span.end) {
        fail("planning origin " + format_time(*planning_origin) + " lies after the data span end " +
             format_time(span.end));
    }
}

AppConfig from_json(const json& j, const std::filesystem::path& base_dir) {
    AppConfig c;
    c.data_dir = resolve(base_dir, j.value("data_dir", std::string("data")));
    c.work_dir = resolve(base_dir, j.value("work_dir", std::string("work")));
    if (j.contains("synth")) c.synth = synth::spec_from_json(j.at("synth"));
    if (j.contains("stations")) {
        c.stations = j.at("stations").get<std::vector<std::string>>();
    } else {
        for (const auto& s : c.synth.stations) c.stations.push_back(s.code);
    }
    c.span = {c.synth.start, c.synth.end};
    if (j.contains("span")) {
        c.span.start = parse_time(j.at("span").at("start").get<std::string>());
        c.span.end = parse_time(j.at("span").at("end").get<std::string>());
    }
    if (j.contains("asof")) {
        const auto& a = j.at("asof");
        if (a.contains("thresholds_hours")) {
            c.asof.thresholds.clear();
            for (const auto& h : a.at("thresholds_hours")) c.asof.thresholds.push_back(Hours{h.get<int>()});
        } else if (a.contains("thresholds_days")) {
            c.asof.thresholds.clear();
            for (const auto& d : a.at("thresholds_days")) c.asof.thresholds.push_back(Hours{24 * d.get<int>()});
        }
        c.asof.include_adjacent_diffs = a.value("include_adjacent_diffs", true);
    }
    if (j.contains("buckets")) c.buckets = horizon::buckets_from_json(j.at("buckets"));
    if (j.contains("model")) c.model = gam::spec_from_json(j.at("model"));
    c.holiday_calendar = j.value("holiday_calendar", c.holiday_calendar);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.grid.seasonality_scales = g.value("seasonality_scales", c.grid.seasonality_scales);
        c.grid.holiday_scales = g.value("holiday_scales", c.grid.holiday_scales);
        if (g.contains("modes")) {
            c.grid.modes.clear();
            for (const auto& m : g.at("modes")) c.grid.modes.push_back(gam::mode_from_string(m.get<std::string>()));
        }
        c.grid.validation_fraction = g.value("validation_fraction", c.grid.validation_fraction);
    }
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    if (j.contains("scaler")) c.scale_method = panel::scale_method_from_string(j.at("scaler").get<std::string>());
    if (j.contains("impute")) c.impute_policy = impute_from_string(j.at("impute").get<std::string>());
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        if (e.contains("tolerances")) c.eval.tolerances = e.at("tolerances").get<std::map<std::string, double>>();
        c.eval.under_prediction_weight = e.value("under_prediction_weight", c.eval.under_prediction_weight);
        c.yoy_growth = e.value("yoy_growth", c.yoy_growth);
    }
    if (j.contains("capacity")) {
        const auto& cp = j.at("capacity");
        c.capacity.assists_per_hour = cp.value("assists_per_hour", c.capacity.assists_per_hour);
        c.capacity.margin = cp.value("margin", c.capacity.margin);
    }
    if (j.contains("roles_file")) {
        const auto path = resolve(base_dir, j.at("roles_file").get<std::string>());
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::NotFound, "roles file '" + path.string() + "' not found");
        c.roles = workforce::roles_from_json(json::parse(in));
    } else if (j.contains("roles")) {
        c.roles = workforce::roles_from_json(j.at("roles"));
    }
    if (j.contains("service")) c.port = j.at("service").value("port", c.port);
    if (j.contains("planning")) {
        const auto& p = j.at("planning");
        if (p.contains("origin") && !p.at("origin").is_null()) {
            c.planning_origin = parse_time(p.at("origin").get<std::string>());
        }
        c.display.first = p.value("display_first", c.display.first);
        c.display.last = p.value("display_last", c.display.last);
    }
    c.validate();
    return c;
}

AppConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "config file '" + path.string() + "' not found");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        return from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    } catch (const json::exception& e) {
        fail("invalid config: " + std::string(e.what()));
    }
}

json to_json(const AppConfig& c) {
    json taus = json::array();
    for (auto t : c.asof.thresholds) taus.push_back(t.count());
    json modes = json::array();
    for (auto m : c.grid.modes) modes.push_back(gam::to_string(m));
    json out = {{"data_dir", c.data_dir.string()},
                {"work_dir", c.work_dir.string()},
                {"stations", c.stations},
                {"span", {{"start", format_time(c.span.start)}, {"end", format_time(c.span.end)}}},
                {"asof", {{"thresholds_hours", taus}, {"include_adjacent_diffs", c.asof.include_adjacent_diffs}}},
                {"buckets", horizon::to_json(c.buckets)},
                {"model", gam::to_json(c.model)},
                {"holiday_calendar", c.holiday_calendar},
                {"grid",
                 {{"seasonality_scales", c.grid.seasonality_scales},
                  {"holiday_scales", c.grid.holiday_scales},
                  {"modes", modes},
                  {"validation_fraction", c.grid.validation_fraction}}},
                {"train_fraction", c.train_fraction},
                {"scaler", panel::to_string(c.scale_method)},
                {"impute", to_string(c.impute_policy)},
                {"eval",
                 {{"tolerances", c.eval.tolerances},
                  {"under_prediction_weight", c.eval.under_prediction_weight},
                  {"yoy_growth", c.yoy_growth}}},
                {"capacity", {{"assists_per_hour", c.capacity.assists_per_hour}, {"margin", c.capacity.margin}}},
                {"roles", workforce::to_json(c.roles)},
                {"service", {{"port", c.port}}},
                {"synth", synth::to_json(c.synth)},
                {"planning",
                 {{"origin", c.planning_origin ? json(format_time(*c.planning_origin)) : json(nullptr)},
                  {"display_first", c.display.first},
                  {"display_last", c.display.last}}}};
    return out;
}

void require_inputs(const AppConfig& c) {
    for (const auto& p : {c.events_path(), c.weather_path()}) {
        if (!std::filesystem::exists(p)) throw Error(ErrorKind::NotFound, "input file '" + p.string() + "' not found");
    }
}

}  // namespace paxcast::config
