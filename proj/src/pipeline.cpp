#include "paxcast/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "paxcast/csv.hpp"
#include "paxcast/error.hpp"
#include "paxcast/hash.hpp"
#include "paxcast/store.hpp"

namespace paxcast::pipeline {

using nlohmann::json;
using panel::AssistanceEvent;
using panel::SplitTag;
using panel::StationSeries;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string policy_name(panel::ImputePolicy p) {
    return p == panel::ImputePolicy::TrainMean ? "train_mean" : "ffill_then_train_mean";
}

panel::ImputePolicy policy_from(const std::string& s) {
    if (s == "train_mean") return panel::ImputePolicy::TrainMean;
    if (s == "ffill_then_train_mean") return panel::ImputePolicy::ForwardFillThenTrainMean;
    fail("unknown imputation policy '" + s + "'");
}

SplitTag split_from(const std::string& s) {
    if (s == "TRAIN") return SplitTag::Train;
    if (s == "TEST") return SplitTag::Test;
    if (s == "FUTURE") return SplitTag::Future;
    fail("unknown split tag '" + s + "'");
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "cannot read '" + path.string() + "'");
    return json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path.string() + "'");
    out << j.dump(1) << '\n';
}

std::vector<std::string> regressor_columns(const panel::AsOfFeatureSpec& asof) {
    auto cols = panel::asof_columns(asof);
    for (const auto& w : panel::weather_columns()) cols.push_back(w);
    return cols;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sidecar

json Sidecar::to_json() const {
    json taus = json::array();
    for (auto t : asof.thresholds) taus.push_back(t.count());
    return {{"station", station},
            {"span", {{"start", format_time(span.start)}, {"end", format_time(span.end)}}},
            {"asof", {{"thresholds_hours", taus}, {"include_adjacent_diffs", asof.include_adjacent_diffs}}},
            {"train_fraction", train_fraction},
            {"split_boundary", format_time(split_boundary)},
            {"impute", {{"policy", policy_name(impute_policy)}, {"train_means", impute}}},
            {"scaler", scaler.to_json()},
            {"scaler_fingerprint", scaler.fingerprint()},
            {"regressor_columns", regressor_columns},
            {"mean_daily_demand", mean_daily_demand},
            {"weather_missing_cells", weather_missing}};
}

Sidecar Sidecar::from_json(const json& j) {
    Sidecar s;
    s.station = j.at("station").get<std::string>();
    s.span = {parse_time(j.at("span").at("start").get<std::string>()),
              parse_time(j.at("span").at("end").get<std::string>())};
    s.asof.thresholds.clear();
    for (const auto& h : j.at("asof").at("thresholds_hours")) s.asof.thresholds.push_back(Hours{h.get<int>()});
    s.asof.include_adjacent_diffs = j.at("asof").at("include_adjacent_diffs").get<bool>();
    s.asof.validate();
    s.train_fraction = j.at("train_fraction").get<double>();
    s.split_boundary = parse_time(j.at("split_boundary").get<std::string>());
    s.impute_policy = policy_from(j.at("impute").at("policy").get<std::string>());
    s.impute = j.at("impute").at("train_means").get<panel::ImputeStats>();
    s.scaler = panel::Scaler::from_json(j.at("scaler"));
    s.regressor_columns = j.at("regressor_columns").get<std::vector<std::string>>();
    s.mean_daily_demand = j.at("mean_daily_demand").get<double>();
    s.weather_missing = j.value("weather_missing_cells", std::size_t{0});
    if (j.contains("scaler_fingerprint") && j.at("scaler_fingerprint").get<std::string>() != s.scaler.fingerprint()) {
        fail("sidecar for " + s.station + " has a scaler fingerprint that does not match its statistics");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Panel preparation

PreparedPanel prepare_panel(std::span<const AssistanceEvent> bookings,
                            std::span<const panel::WeatherObservation> weather, const config::AppConfig& cfg) {
    std::vector<AssistanceEvent> demand;
    for (const auto& b : bookings) {
        if (b.channel == panel::Channel::Prebooked && cfg.span.contains(b.scheduled_time)) demand.push_back(b);
    }
    PreparedPanel out;
    out.panel = panel::build_panel(demand, cfg.stations, cfg.span);
    panel::compute_asof_features(out.panel, bookings, cfg.asof);
    panel::join_weather(out.panel, weather);
    panel::split_time_ordered(out.panel, cfg.train_fraction);

    const auto cols = regressor_columns(cfg.asof);
    for (auto& s : out.panel.series) {
        Sidecar sc;
        sc.station = s.station;
        sc.span = cfg.span;
        sc.asof = cfg.asof;
        sc.train_fraction = cfg.train_fraction;
        sc.impute_policy = cfg.impute_policy;
        sc.regressor_columns = cols;
        for (const auto& w : panel::weather_columns()) {
            for (double v : s.column(w)) sc.weather_missing += std::isnan(v) ? 1 : 0;
        }
        sc.impute = panel::impute_missing(s, cfg.impute_policy, panel::weather_columns());
        sc.scaler = panel::fit_scaler(s, cfg.scale_method, cols);
        sc.scaler.apply(s);

        double train_y = 0.0;
        std::size_t n_train = 0;
        sc.split_boundary = s.hour(s.size() - 1) + Hours{1};
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.split[i] == SplitTag::Train) {
                train_y += s.y[i];
                ++n_train;
            } else if (sc.split_boundary > s.hour(i)) {
                sc.split_boundary = s.hour(i);
            }
        }
        sc.mean_daily_demand = n_train ? train_y / (static_cast<double>(n_train) / 24.0) : 0.0;
        out.sidecars.emplace(s.station, std::move(sc));
    }
    return out;
}

StationSeries build_inference_features(const Sidecar& sidecar, Timestamp first_hour, Timestamp last_hour,
                                       std::span<const AssistanceEvent> bookings,
                                       std::span<const panel::WeatherObservation> weather, Timestamp origin) {
    if (floor_hour(first_hour) != first_hour || floor_hour(last_hour) != last_hour) {
        fail("feature range must start and end on whole hours");
    }
    if (last_hour < first_hour) fail("feature range is empty");
    if (origin < sidecar.span.start) {
        fail("forecast origin " + format_time(origin) + " precedes the data span start " +
             format_time(sidecar.span.start));
    }
    if (origin > sidecar.span.end) {
        fail("forecast origin " + format_time(origin) + " lies after the data span end " +
             format_time(sidecar.span.end) + "; no bookings are known beyond it");
    }
    StationSeries s;
    s.station = sidecar.station;
    s.start = first_hour;
    const auto n = static_cast<std::size_t>((last_hour - first_hour) / Hours{1}) + 1;
    s.y.assign(n, 0.0);
    s.split.assign(n, SplitTag::Future);
    panel::compute_asof_features(s, bookings, sidecar.asof, origin);
    panel::join_weather(s, weather);
    panel::apply_imputation(s, sidecar.impute, sidecar.impute_policy);
    sidecar.scaler.apply(s);
    return s;
}

// ---------------------------------------------------------------------------
// Persistence

std::filesystem::path panel_csv_path(const std::filesystem::path& work, const std::string& station) {
    return work / "panel" / (station + ".csv");
}
std::filesystem::path sidecar_path(const std::filesystem::path& work, const std::string& station) {
    return work / "panel" / (station + ".json");
}
std::filesystem::path bookings_path(const std::filesystem::path& work) { return work / "bookings.csv"; }
std::filesystem::path ingest_meta_path(const std::filesystem::path& work) { return work / "ingest.json"; }
std::filesystem::path diagnostics_path(const std::filesystem::path& work) { return work / "ingest_diagnostics.csv"; }
std::filesystem::path evaluation_path(const std::filesystem::path& work) { return work / "evaluation.csv"; }

void write_station_series(const std::filesystem::path& path, const StationSeries& s) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path.string() + "'");
    std::vector<std::string> header{"hour_start", "y", "split"};
    for (const auto& [name, col] : s.columns) header.push_back(name);
    csv::write_row(out, header);
    std::vector<std::string> row;
    for (std::size_t i = 0; i < s.size(); ++i) {
        row.clear();
        row.push_back(format_time(s.hour(i)));
        row.push_back(csv::format_double(s.y[i]));
        row.push_back(panel::to_string(s.split[i]));
        for (const auto& [name, col] : s.columns) row.push_back(std::isnan(col[i]) ? "" : csv::format_double(col[i]));
        csv::write_row(out, row);
    }
}

StationSeries read_station_series(const std::filesystem::path& path, const std::string& station) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::NotReady, "panel for " + station + " not built: run `ingest`");
    const auto t = csv::read_file(path);
    const auto c_hour = t.column("hour_start"), c_y = t.column("y"), c_split = t.column("split");
    StationSeries s;
    s.station = station;
    if (t.rows.empty()) fail("panel for " + station + " is empty");
    s.start = parse_time(t.rows.front()[c_hour]);
    std::vector<std::pair<std::string, std::size_t>> cols;
    for (std::size_t k = 0; k < t.header.size(); ++k) {
        if (k != c_hour && k != c_y && k != c_split) cols.emplace_back(t.header[k], k);
    }
    for (const auto& [name, k] : cols) s.columns[name].reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        if (parse_time(r[c_hour]) != s.hour(i)) fail("panel for " + station + " is not gap-free at row " + std::to_string(i + 1));
        s.y.push_back(std::stod(r[c_y]));
        s.split.push_back(split_from(r[c_split]));
        for (const auto& [name, k] : cols) s.columns[name].push_back(r[k].empty() ? kNaN : std::stod(r[k]));
    }
    return s;
}

std::string hash_files(std::span<const std::filesystem::path> files) {
    std::string all;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw Error(ErrorKind::NotFound, "cannot read '" + f.string() + "'");
        all.append(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        all.push_back('\0');
    }
    return hex64(fnv1a64(all));
}

// ---------------------------------------------------------------------------
// Commands

IngestSummary run_ingest(const config::AppConfig& cfg) {
    config::require_inputs(cfg);
    const auto records = panel::read_events_csv(cfg.events_path());
    const auto ingested = panel::ingest_events(records, cfg.stations);
    const auto weather = panel::read_weather_csv(cfg.weather_path());

    IngestSummary sum;
    sum.records = records.size();
    sum.prebooked = ingested.prebooked.size();
    sum.tuag = ingested.tuag.size();
    sum.rejected = ingested.diagnostics.size();
    const std::filesystem::path inputs[] = {cfg.events_path(), cfg.weather_path()};
    sum.data_hash = hash_files(inputs);

    std::vector<AssistanceEvent> bookings;
    std::vector<panel::Diagnostic> diagnostics = ingested.diagnostics;
    for (const auto& e : ingested.prebooked) {
        if (e.scheduled_time < cfg.span.start) {
            diagnostics.push_back({0, "event " + e.journey_id + " precedes the configured span and is ignored"});
            continue;
        }
        bookings.push_back(e);
    }
    const auto prepared = prepare_panel(bookings, weather, cfg);

    std::filesystem::create_directories(cfg.work_dir);
    for (const auto& s : prepared.panel.series) {
        write_station_series(panel_csv_path(cfg.work_dir, s.station), s);
        write_json_file(sidecar_path(cfg.work_dir, s.station), prepared.sidecars.at(s.station).to_json());
    }
    panel::write_events_csv(bookings_path(cfg.work_dir), bookings);
    {
        std::ofstream out(diagnostics_path(cfg.work_dir));
        out << "row,message\n";
        for (const auto& d : diagnostics) csv::write_row(out, {std::to_string(d.row), d.message});
    }

    std::vector<AssistanceEvent> all;
    for (const auto& e : bookings) {
        if (cfg.span.contains(e.scheduled_time)) all.push_back(e);
    }
    for (const auto& e : ingested.tuag) {
        if (cfg.span.contains(e.scheduled_time)) all.push_back(e);
    }
    json rates = json::object();
    for (const auto& st : cfg.stations) {
        for (unsigned m = 1; m <= 12; ++m) {
            const auto r = panel::estimate_tuag_rate(all, st, m);
            sum.tuag_rates[st][m] = r;
            rates[st][std::to_string(m)] = {{"rate", r.value}, {"fallback", r.fallback}};
        }
    }
    write_json_file(ingest_meta_path(cfg.work_dir), {{"data_hash", sum.data_hash},
                                                     {"records", sum.records},
                                                     {"prebooked", sum.prebooked},
                                                     {"tuag", sum.tuag},
                                                     {"rejected", sum.rejected},
                                                     {"stations", cfg.stations},
                                                     {"tuag_rates", rates}});
    return sum;
}

LoadedPanel load_panel(const config::AppConfig& cfg) {
    if (!std::filesystem::exists(ingest_meta_path(cfg.work_dir))) {
        throw Error(ErrorKind::NotReady, "no panel in '" + cfg.work_dir.string() + "': run `ingest` first");
    }
    LoadedPanel out;
    out.data_hash = read_json_file(ingest_meta_path(cfg.work_dir)).at("data_hash").get<std::string>();
    for (const auto& st : cfg.stations) {
        out.series.emplace(st, read_station_series(panel_csv_path(cfg.work_dir, st), st));
        out.sidecars.emplace(st, Sidecar::from_json(read_json_file(sidecar_path(cfg.work_dir, st))));
    }
    return out;
}

TrainSummary run_train(const config::AppConfig& cfg) {
    const auto loaded = load_panel(cfg);
    const auto grid = cfg.spec_grid();
    TrainSummary sum;
    store::Manifest manifest;
    manifest.data_hash = loaded.data_hash;
    manifest.trained_at = format_time(std::chrono::floor<Seconds>(std::chrono::system_clock::now()));
    for (const auto& st : cfg.stations) {
        const auto& sc = loaded.sidecars.at(st);
        const auto fp = sc.scaler.fingerprint();
        auto training = horizon::train_bucketed(loaded.series.at(st), cfg.buckets, grid, fp, cfg.grid.validation_fraction);
        manifest.stations[st] = store::save_station(cfg.work_dir, st, training, fp);
        sum.stations.emplace(st, std::move(training));
    }
    store::write_manifest(cfg.work_dir, manifest);
    return sum;
}

std::vector<evalx::ForecastRow> holdout_forecasts(const StationSeries& series, const Sidecar& sidecar,
                                                  const horizon::BucketModels& models,
                                                  const horizon::BucketSet& buckets, double yoy_growth) {
    const auto fp = sidecar.scaler.fingerprint();
    std::vector<evalx::ForecastRow> out;
    std::vector<Timestamp> test_hours;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series.split[i] == SplitTag::Test) test_hours.push_back(series.hour(i));
    }
    if (test_hours.empty()) fail("station " + series.station + " has no TEST rows");

    evalx::HourlySeries history{series.station, {}};
    for (std::size_t i = 0; i < series.size(); ++i) history.y.emplace_hint(history.y.end(), series.hour(i), series.y[i]);
    const auto base = evalx::yoy_baseline(history, test_hours, yoy_growth);
    for (std::size_t k = 0; k < test_hours.size(); ++k) {
        out.push_back({series.station, test_hours[k], evalx::kBaselineHorizon, base[k]});
    }
    for (const auto& b : buckets.buckets()) {
        auto mit = models.find(b.name);
        if (mit == models.end()) {
            throw Error(ErrorKind::NotReady, "no trained model for " + series.station + " bucket " + b.name);
        }
        const auto frame = horizon::frame_from_series(series, b.regressors, SplitTag::Test, fp);
        const auto pred = gam::predict(mit->second, frame);
        for (std::size_t k = 0; k < frame.size(); ++k) out.push_back({series.station, frame.ds[k], b.name, pred.yhat[k]});
    }
    return out;
}

double station_tolerance(const config::AppConfig& cfg, const Sidecar& sidecar) {
    auto it = cfg.eval.tolerances.find(sidecar.station);
    return it != cfg.eval.tolerances.end() ? it->second : evalx::default_tolerance(sidecar.mean_daily_demand);
}

evalx::EvalReport run_evaluate(const config::AppConfig& cfg) {
    const auto loaded = load_panel(cfg);
    const auto models = store::load_all(cfg.work_dir);
    evalx::EvalConfig ec = cfg.eval;
    std::vector<evalx::ForecastRow> rows;
    std::vector<evalx::HourlySeries> obs;
    for (const auto& st : cfg.stations) {
        auto mit = models.find(st);
        if (mit == models.end()) throw Error(ErrorKind::NotReady, "no trained models for station " + st);
        const auto& series = loaded.series.at(st);
        const auto& sc = loaded.sidecars.at(st);
        ec.tolerances[st] = station_tolerance(cfg, sc);
        auto f = holdout_forecasts(series, sc, mit->second, cfg.buckets, cfg.yoy_growth);
        rows.insert(rows.end(), f.begin(), f.end());
        evalx::HourlySeries h{st, {}};
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (series.split[i] == SplitTag::Test) h.y.emplace(series.hour(i), series.y[i]);
        }
        obs.push_back(std::move(h));
    }
    const auto names = cfg.buckets.names();
    auto report = evalx::evaluate_by_bucket(rows, obs, names, ec);
    std::filesystem::create_directories(cfg.work_dir);
    report.write_csv(evaluation_path(cfg.work_dir));
    return report;
}

}  // namespace paxcast::pipeline
