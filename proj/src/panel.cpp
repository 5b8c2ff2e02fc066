#include "paxcast/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "paxcast/csv.hpp"
#include "paxcast/error.hpp"
#include "paxcast/hash.hpp"

namespace paxcast::panel {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(EventKind k) { return k == EventKind::Dep ? "DEP" : "ARR"; }
std::string to_string(Channel c) { return c == Channel::Prebooked ? "PREBOOKED" : "TUAG"; }
std::string to_string(SplitTag s) {
    switch (s) {
        case SplitTag::Train: return "TRAIN";
        case SplitTag::Test: return "TEST";
        case SplitTag::Future: return "FUTURE";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Ingestion

IngestResult ingest_events(std::span<const RawRecord> records, std::span<const std::string> stations) {
    const std::set<std::string> in_scope(stations.begin(), stations.end());
    IngestResult out;
    using Key = std::tuple<std::string, EventKind, std::int64_t, std::int64_t, std::string>;
    std::set<Key> seen;

    for (const auto& r : records) {
        auto reject = [&](std::string msg) { out.diagnostics.push_back({r.row, std::move(msg)}); };
        if (!in_scope.contains(r.station)) {
            reject("unknown station code '" + r.station + "'");
            continue;
        }
        if (r.scheduled_time.empty() || r.booking_created.empty()) {
            reject("missing timestamp");
            continue;
        }
        const auto scheduled = try_parse_time(r.scheduled_time);
        const auto created = try_parse_time(r.booking_created);
        if (!scheduled || !created) {
            reject("unparseable timestamp");
            continue;
        }
        AssistanceEvent ev;
        ev.station = r.station;
        ev.journey_id = r.journey_id;
        ev.scheduled_time = *scheduled;
        ev.booking_created = *created;
        if (r.event_kind == "DEP") ev.kind = EventKind::Dep;
        else if (r.event_kind == "ARR") ev.kind = EventKind::Arr;
        else {
            reject("unknown event_kind '" + r.event_kind + "'");
            continue;
        }
        if (r.channel == "PREBOOKED") ev.channel = Channel::Prebooked;
        else if (r.channel == "TUAG") ev.channel = Channel::Tuag;
        else {
            reject("unknown channel '" + r.channel + "'");
            continue;
        }
        if (ev.channel == Channel::Prebooked && ev.booking_created > ev.scheduled_time) {
            reject("pre-booked event created after its scheduled time");
            continue;
        }
        Key key{ev.station, ev.kind, epoch_seconds(ev.scheduled_time), epoch_seconds(ev.booking_created),
                ev.journey_id};
        if (!seen.insert(std::move(key)).second) continue;
        (ev.channel == Channel::Prebooked ? out.prebooked : out.tuag).push_back(std::move(ev));
    }
    auto by_time = [](const AssistanceEvent& a, const AssistanceEvent& b) {
        return std::tie(a.scheduled_time, a.station, a.journey_id, a.kind, a.booking_created) <
               std::tie(b.scheduled_time, b.station, b.journey_id, b.kind, b.booking_created);
    };
    std::sort(out.prebooked.begin(), out.prebooked.end(), by_time);
    std::sort(out.tuag.begin(), out.tuag.end(), by_time);
    return out;
}

std::vector<RawRecord> read_events_csv(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    const auto c_journey = table.column("journey_id");
    const auto c_station = table.column("station");
    const auto c_kind = table.column("event_kind");
    const auto c_sched = table.column("scheduled_time");
    const auto c_created = table.column("booking_created");
    const auto c_channel = table.column("channel");
    std::vector<RawRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        out.push_back({i + 1, row[c_journey], row[c_station], row[c_kind], row[c_sched], row[c_created],
                       row[c_channel]});
    }
    return out;
}

void write_events_csv(const std::filesystem::path& path, std::span<const AssistanceEvent> events) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path.string() + "'");
    out << "journey_id,station,event_kind,scheduled_time,booking_created,channel\n";
    for (const auto& e : events) {
        csv::write_row(out, {e.journey_id, e.station, to_string(e.kind), format_time(e.scheduled_time),
                             format_time(e.booking_created), to_string(e.channel)});
    }
}

std::vector<AssistanceEvent> decompose_journey(const Journey& journey) {
    if (journey.legs.empty()) fail("journey '" + journey.journey_id + "' has no legs");
    if (!journey.origin.empty() && journey.origin != journey.legs.front().origin) {
        fail("journey '" + journey.journey_id + "' origin does not match its first leg");
    }
    if (!journey.destination.empty() && journey.destination != journey.legs.back().destination) {
        fail("journey '" + journey.journey_id + "' destination does not match its last leg");
    }
    std::vector<AssistanceEvent> out;
    out.reserve(2 * journey.legs.size());
    for (std::size_t i = 0; i < journey.legs.size(); ++i) {
        const auto& leg = journey.legs[i];
        if (leg.arrival < leg.departure) {
            fail("journey '" + journey.journey_id + "' leg " + std::to_string(i) + " arrives before it departs");
        }
        out.push_back({leg.origin, EventKind::Dep, leg.departure, journey.booking_created, journey.channel,
                       journey.journey_id});
        out.push_back({leg.destination, EventKind::Arr, leg.arrival, journey.booking_created, journey.channel,
                       journey.journey_id});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Panel

std::optional<std::size_t> StationSeries::index_of(Timestamp hour_start) const {
    if (hour_start < start) return std::nullopt;
    const auto d = hour_start - start;
    if (d % Hours{1} != Seconds{0}) return std::nullopt;
    const auto i = static_cast<std::size_t>(d / Hours{1});
    if (i >= y.size()) return std::nullopt;
    return i;
}

std::vector<Timestamp> StationSeries::hours() const {
    std::vector<Timestamp> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = hour(i);
    return out;
}

const std::vector<double>& StationSeries::column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) fail("station " + station + ": missing column '" + name + "'");
    return it->second;
}

const StationSeries& StationHourPanel::station(const std::string& code) const {
    for (const auto& s : series) {
        if (s.station == code) return s;
    }
    throw Error(ErrorKind::NotFound, "unknown station '" + code + "'");
}

StationSeries& StationHourPanel::station(const std::string& code) {
    return const_cast<StationSeries&>(std::as_const(*this).station(code));
}

bool StationHourPanel::has_station(const std::string& code) const {
    return std::any_of(series.begin(), series.end(), [&](const auto& s) { return s.station == code; });
}

StationHourPanel build_panel(std::span<const AssistanceEvent> events, std::span<const std::string> stations,
                             HourSpan span) {
    if (floor_hour(span.start) != span.start || floor_hour(span.end) != span.end) {
        fail("panel span must start and end on whole hours");
    }
    if (span.end <= span.start) fail("panel span is empty");
    StationHourPanel panel;
    std::map<std::string, std::size_t> index;
    for (const auto& code : stations) {
        if (index.contains(code)) fail("duplicate station '" + code + "'");
        index[code] = panel.series.size();
        StationSeries s;
        s.station = code;
        s.start = span.start;
        s.y.assign(span.hours(), 0.0);
        s.split.assign(span.hours(), SplitTag::Train);
        panel.series.push_back(std::move(s));
    }
    for (const auto& e : events) {
        if (e.channel != Channel::Prebooked) continue;
        auto it = index.find(e.station);
        if (it == index.end()) continue;
        if (!span.contains(e.scheduled_time)) {
            fail("event " + e.journey_id + " at " + e.station + " (" + format_time(e.scheduled_time) +
                 ") lies outside the panel span");
        }
        auto& s = panel.series[it->second];
        s.y[*s.index_of(floor_hour(e.scheduled_time))] += 1.0;
    }
    return panel;
}

// ---------------------------------------------------------------------------
// As-of booking features

void AsOfFeatureSpec::validate() const {
    if (thresholds.empty()) fail("as-of spec needs at least one threshold");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] <= Hours{0}) fail("as-of thresholds must be positive");
        if (i > 0 && thresholds[i] <= thresholds[i - 1]) fail("as-of thresholds must be strictly increasing");
    }
}

std::string threshold_label(Hours tau) {
    const auto h = tau.count();
    return h % 24 == 0 ? std::to_string(h / 24) + "d" : std::to_string(h) + "h";
}

std::string cum_column(Hours tau) { return "cum_" + threshold_label(tau); }

std::string diff_column(Hours larger, Hours smaller) {
    return "diff_" + threshold_label(larger) + "_" + threshold_label(smaller);
}

std::vector<std::string> asof_columns(const AsOfFeatureSpec& spec) {
    std::vector<std::string> out;
    for (auto tau : spec.thresholds) out.push_back(cum_column(tau));
    if (spec.include_adjacent_diffs) {
        for (std::size_t i = 1; i < spec.thresholds.size(); ++i) {
            out.push_back(diff_column(spec.thresholds[i], spec.thresholds[i - 1]));
        }
    }
    return out;
}

void compute_asof_features(StationSeries& series, std::span<const AssistanceEvent> bookings,
                           const AsOfFeatureSpec& spec, std::optional<Timestamp> as_of_origin) {
    spec.validate();
    const std::size_t n = series.size();
    std::vector<std::vector<std::int64_t>> created(n);
    for (const auto& b : bookings) {
        if (b.channel != Channel::Prebooked || b.station != series.station) continue;
        if (auto i = series.index_of(floor_hour(b.scheduled_time))) {
            created[*i].push_back(epoch_seconds(b.booking_created));
        }
    }
    for (auto& c : created) std::sort(c.begin(), c.end());

    const auto& taus = spec.thresholds;
    std::vector<std::vector<double>> cum(taus.size(), std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = created[i];
        if (c.empty()) continue;
        const std::int64_t t = epoch_seconds(series.hour(i));
        for (std::size_t k = 0; k < taus.size(); ++k) {
            std::int64_t ref = t - std::chrono::duration_cast<Seconds>(taus[k]).count();
            if (as_of_origin) ref = std::min(ref, epoch_seconds(*as_of_origin));
            cum[k][i] = static_cast<double>(std::upper_bound(c.begin(), c.end(), ref) - c.begin());
        }
    }
    for (std::size_t k = 1; k < taus.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (cum[k][i] > cum[k - 1][i]) {
                throw Error(ErrorKind::Internal, "non-monotone cumulative booking counts at " + series.station + " " +
                                                     format_time(series.hour(i)));
            }
        }
    }
    if (spec.include_adjacent_diffs) {
        for (std::size_t k = 1; k < taus.size(); ++k) {
            std::vector<double> d(n);
            for (std::size_t i = 0; i < n; ++i) d[i] = cum[k - 1][i] - cum[k][i];
            series.columns[diff_column(taus[k], taus[k - 1])] = std::move(d);
        }
    }
    for (std::size_t k = 0; k < taus.size(); ++k) series.columns[cum_column(taus[k])] = std::move(cum[k]);
}

void compute_asof_features(StationHourPanel& panel, std::span<const AssistanceEvent> bookings,
                           const AsOfFeatureSpec& spec, std::optional<Timestamp> as_of_origin) {
    std::map<std::string, std::vector<AssistanceEvent>> by_station;
    for (const auto& b : bookings) by_station[b.station].push_back(b);
    for (auto& s : panel.series) compute_asof_features(s, by_station[s.station], spec, as_of_origin);
}

// ---------------------------------------------------------------------------
// Weather

std::vector<WeatherObservation> read_weather_csv(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    const auto c_station = table.column("station");
    const auto c_hour = table.column("hour_start");
    const auto c_temp = table.column("temperature_c");
    const auto c_rain = table.column("rainfall_mm");
    const auto c_hum = table.column("humidity_pct");
    std::vector<WeatherObservation> out;
    out.reserve(table.rows.size());
    auto num = [](const std::string& s) { return s.empty() ? kNaN : std::stod(s); };
    for (const auto& row : table.rows) {
        out.push_back({row[c_station], parse_time(row[c_hour]), num(row[c_temp]), num(row[c_rain]), num(row[c_hum])});
    }
    return out;
}

void write_weather_csv(const std::filesystem::path& path, std::span<const WeatherObservation> obs) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path.string() + "'");
    out << "station,hour_start,temperature_c,rainfall_mm,humidity_pct\n";
    for (const auto& o : obs) {
        csv::write_row(out, {o.station, format_time(o.hour_start), csv::format_double(o.temperature_c),
                             csv::format_double(o.rainfall_mm), csv::format_double(o.humidity_pct)});
    }
}

void join_weather(StationSeries& series, std::span<const WeatherObservation> observations) {
    const std::size_t n = series.size();
    std::vector<double> temp(n, kNaN), rain(n, kNaN), hum(n, kNaN);
    std::vector<char> filled(n, 0);
    for (const auto& o : observations) {
        if (o.station != series.station) continue;
        auto i = series.index_of(o.hour_start);
        if (!i) continue;
        if (filled[*i]) {
            fail("duplicate weather observation for " + o.station + " at " + format_time(o.hour_start));
        }
        filled[*i] = 1;
        temp[*i] = o.temperature_c;
        rain[*i] = o.rainfall_mm;
        hum[*i] = o.humidity_pct;
    }
    series.columns["temperature_c"] = std::move(temp);
    series.columns["rainfall_mm"] = std::move(rain);
    series.columns["humidity_pct"] = std::move(hum);
}

void join_weather(StationHourPanel& panel, std::span<const WeatherObservation> observations) {
    for (auto& s : panel.series) join_weather(s, observations);
}

// ---------------------------------------------------------------------------
// Imputation

ImputeStats fit_imputation(const StationSeries& series, std::span<const std::string> columns) {
    ImputeStats stats;
    for (const auto& name : columns) {
        const auto& col = series.column(name);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (series.split[i] == SplitTag::Train && !std::isnan(col[i])) {
                sum += col[i];
                ++count;
            }
        }
        if (count == 0) fail("station " + series.station + ": column '" + name + "' is entirely missing in TRAIN");
        stats[name] = sum / static_cast<double>(count);
    }
    return stats;
}

void apply_imputation(StationSeries& series, const ImputeStats& stats, ImputePolicy policy) {
    for (const auto& [name, mean] : stats) {
        auto it = series.columns.find(name);
        if (it == series.columns.end()) continue;
        auto& col = it->second;
        std::optional<double> last;
        for (double& v : col) {
            if (std::isnan(v)) {
                v = (policy == ImputePolicy::ForwardFillThenTrainMean && last) ? *last : mean;
            } else {
                last = v;
            }
        }
    }
}

ImputeStats impute_missing(StationSeries& series, ImputePolicy policy, std::span<const std::string> columns) {
    auto stats = fit_imputation(series, columns);
    apply_imputation(series, stats, policy);
    return stats;
}

// ---------------------------------------------------------------------------
// Scaling

std::string to_string(ScaleMethod m) {
    switch (m) {
        case ScaleMethod::Standardise: return "standardise";
        case ScaleMethod::MinMax: return "minmax";
        case ScaleMethod::None: return "none";
    }
    return "?";
}

ScaleMethod scale_method_from_string(const std::string& s) {
    if (s == "standardise" || s == "standardize") return ScaleMethod::Standardise;
    if (s == "minmax") return ScaleMethod::MinMax;
    if (s == "none") return ScaleMethod::None;
    fail("unknown scaling method '" + s + "'");
}

Scaler::Scaler(ScaleMethod method, std::map<std::string, ColumnStats> stats)
    : method_(method), stats_(std::move(stats)), fitted_(true) {}

double Scaler::transform(const std::string& column, double value) const {
    if (!fitted_) throw Error(ErrorKind::InvalidInput, "scaler applied before fit");
    auto it = stats_.find(column);
    if (it == stats_.end()) fail("scaler has no statistics for column '" + column + "'");
    if (method_ == ScaleMethod::None || it->second.spread <= 0.0) return value;
    return (value - it->second.center) / it->second.spread;
}

std::vector<double> Scaler::transform(const std::string& column, std::span<const double> values) const {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = transform(column, values[i]);
    return out;
}

void Scaler::apply(StationSeries& series) const {
    if (!fitted_) throw Error(ErrorKind::InvalidInput, "scaler applied before fit");
    for (const auto& [name, st] : stats_) {
        auto it = series.columns.find(name);
        if (it == series.columns.end()) fail("station " + series.station + ": missing column '" + name + "'");
        for (double& v : it->second) v = transform(name, v);
    }
}

nlohmann::json Scaler::to_json() const {
    nlohmann::json cols = nlohmann::json::object();
    for (const auto& [name, st] : stats_) cols[name] = {{"center", st.center}, {"spread", st.spread}};
    return {{"method", to_string(method_)}, {"fitted", fitted_}, {"columns", cols}};
}

Scaler Scaler::from_json(const nlohmann::json& j) {
    if (!j.value("fitted", false)) return Scaler{};
    std::map<std::string, ColumnStats> stats;
    for (const auto& [name, st] : j.at("columns").items()) {
        stats[name] = {st.at("center").get<double>(), st.at("spread").get<double>()};
    }
    return Scaler(scale_method_from_string(j.at("method").get<std::string>()), std::move(stats));
}

std::string Scaler::fingerprint() const { return hex64(fnv1a64(to_json().dump())); }

Scaler fit_scaler(const std::map<std::string, std::vector<double>>& train_columns, ScaleMethod method) {
    std::map<std::string, ColumnStats> stats;
    for (const auto& [name, values] : train_columns) {
        if (values.empty()) fail("cannot fit scaler on empty column '" + name + "'");
        ColumnStats st;
        if (method == ScaleMethod::Standardise) {
            const double n = static_cast<double>(values.size());
            const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            st = {mean, std::sqrt(ss / n)};
        } else if (method == ScaleMethod::MinMax) {
            const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
            st = {*lo, *hi - *lo};
        }
        if (!(st.spread > 1e-12 * std::max(1.0, std::fabs(st.center)))) st.spread = 0.0;
        stats[name] = st;
    }
    return Scaler(method, std::move(stats));
}

Scaler fit_scaler(const StationSeries& series, ScaleMethod method, std::span<const std::string> columns) {
    std::map<std::string, std::vector<double>> train;
    for (const auto& name : columns) {
        const auto& col = series.column(name);
        auto& dst = train[name];
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (series.split[i] != SplitTag::Train) continue;
            if (std::isnan(col[i])) fail("scaler input column '" + name + "' still has missing TRAIN values");
            dst.push_back(col[i]);
        }
    }
    return fit_scaler(train, method);
}

// ---------------------------------------------------------------------------
// Split

std::size_t split_index(std::size_t n, double train_fraction) {
    if (n < 5) fail("time split needs at least 5 rows, got " + std::to_string(n));
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train fraction must lie in (0, 1)");
    return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
}

Timestamp split_boundary(std::vector<Timestamp> hours, double train_fraction) {
    std::sort(hours.begin(), hours.end());
    return hours[split_index(hours.size(), train_fraction)];
}

void split_time_ordered(StationHourPanel& panel, double train_fraction) {
    for (auto& s : panel.series) {
        const auto k = split_index(s.size(), train_fraction);
        s.split.assign(s.size(), SplitTag::Test);
        std::fill(s.split.begin(), s.split.begin() + static_cast<std::ptrdiff_t>(k), SplitTag::Train);
    }
}

// ---------------------------------------------------------------------------
// TUAG

TuagRate estimate_tuag_rate(std::span<const AssistanceEvent> events, const std::string& station, unsigned month) {
    if (month < 1 || month > 12) fail("month must be 1-12");
    double pre_cell = 0, tuag_cell = 0, pre_all = 0, tuag_all = 0;
    for (const auto& e : events) {
        if (e.station != station) continue;
        const std::chrono::year_month_day ymd{floor_day(e.scheduled_time)};
        const bool in_cell = static_cast<unsigned>(ymd.month()) == month;
        if (e.channel == Channel::Prebooked) {
            pre_all += 1;
            if (in_cell) pre_cell += 1;
        } else {
            tuag_all += 1;
            if (in_cell) tuag_cell += 1;
        }
    }
    if (pre_cell > 0) return {tuag_cell / pre_cell, false};
    return {pre_all > 0 ? tuag_all / pre_all : 0.0, true};
}

}  // namespace paxcast::panel
