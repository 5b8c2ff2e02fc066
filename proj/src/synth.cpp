#include "paxcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "paxcast/csv.hpp"
#include "paxcast/error.hpp"
#include "paxcast/hash.hpp"
#include "paxcast/holidays.hpp"

namespace paxcast::synth {

using nlohmann::json;
using panel::AssistanceEvent;
using panel::Channel;
using panel::EventKind;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double softplus(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Day-offset shapes of the holiday effect, scaled by the station uplift.
double christmas_shape(int offset) {
    static constexpr double shape[] = {0.3, 0.5, 0.7, 0.9, 1.0, 0.6, -2.0, -1.5, 0.3, 0.4, 0.3, 0.2, 0.2, 0.4, 0.3};
    return shape[offset + 6];
}

double bank_holiday_shape(int offset) {
    static constexpr double shape[] = {0.4, -0.6, 0.5};
    return shape[offset + 1];
}

struct Calendar {
    std::map<std::chrono::sys_days, double> effect;  // summed shape per day, before uplift

    explicit Calendar(Timestamp start, Timestamp end) {
        const int y0 = static_cast<int>(std::chrono::year_month_day{floor_day(start)}.year()) - 1;
        const int y1 = static_cast<int>(std::chrono::year_month_day{floor_day(end)}.year()) + 1;
        for (const auto& w : gam::england_wales_holidays(y0, y1)) {
            for (auto a : w.anchors) {
                for (int o = w.lower_window; o <= w.upper_window; ++o) {
                    effect[a + Days{o}] += w.name == "christmas" ? christmas_shape(o) : bank_holiday_shape(o);
                }
            }
        }
    }

    double at(Timestamp t) const {
        auto it = effect.find(floor_day(t));
        return it == effect.end() ? 0.0 : it->second;
    }
};

double daily_shape(Timestamp t) {
    const double h = hour_of_day(t);
    return 0.7 * std::cos(kTwoPi * (h - 13.0) / 24.0) + 0.3 * std::cos(2.0 * kTwoPi * (h - 8.5) / 24.0);
}

double weekly_shape(Timestamp t) {
    const double d = epoch_days(t);  // day 0 is a Thursday
    return std::cos(kTwoPi * (d - 1.5) / 7.0) + 0.35 * std::sin(2.0 * kTwoPi * d / 7.0);
}

double yearly_shape(Timestamp t) { return std::cos(kTwoPi * (epoch_days(t) / 365.25 - 0.55)); }

std::mt19937_64 stream(std::uint64_t seed, const std::string& station, std::uint64_t salt) {
    const auto h = fnv1a64(station);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
}

struct WeatherState {
    double temp_noise = 0.0;
    bool wet = false;
};

panel::WeatherObservation draw_weather(const std::string& station, Timestamp t, WeatherState& st,
                                       std::mt19937_64& rng, bool noisy) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (noisy) st.temp_noise = 0.95 * st.temp_noise + 0.6 * n01(rng);
    const double temp = 10.0 + 7.0 * std::cos(kTwoPi * (epoch_days(t) / 365.25 - 0.55)) +
                        4.0 * std::cos(kTwoPi * (hour_of_day(t) - 15.0) / 24.0) + st.temp_noise;
    st.wet = st.wet ? u01(rng) < 0.8 : u01(rng) < 0.06;
    double rain = 0.0;
    if (st.wet) rain = std::exponential_distribution<double>(1.0 / 1.2)(rng);
    const double hum = std::clamp(75.0 - 1.2 * (temp - 10.0) + (st.wet ? 8.0 : 0.0) + (noisy ? 3.0 * n01(rng) : 0.0),
                                  30.0, 100.0);
    auto r2 = [](double v) { return std::round(v * 100.0) / 100.0; };
    return {station, t, r2(temp), r2(rain), r2(hum)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

void LeadTimeMixture::validate() const {
    if (!(body_mean_days > 0.0)) fail("lead-time body mean must be positive");
    if (!(spike_days > 0.0)) fail("lead-time spike width must be positive");
    const double body7 = 1.0 - std::exp(-7.0 / body_mean_days);
    if (!(final_week_mass >= body7 && final_week_mass <= 1.0)) {
        fail("final-week booking mass must lie in [" + std::to_string(body7) + ", 1] for this body mean");
    }
    if (spike_days > 7.0) fail("lead-time spike must lie inside the final week");
}

double LeadTimeMixture::spike_weight() const {
    const double body7 = 1.0 - std::exp(-7.0 / body_mean_days);
    return (final_week_mass - body7) / (1.0 - body7);
}

double LeadTimeMixture::cdf(double days) const {
    if (days <= 0.0) return 0.0;
    const double p = spike_weight();
    const double spike = std::min(1.0, days / spike_days);
    return p * spike + (1.0 - p) * (1.0 - std::exp(-days / body_mean_days));
}

void SynthSpec::validate() const {
    if (end <= start) fail("synthetic span must be positive");
    if (floor_hour(start) != start || floor_hour(end) != end) fail("synthetic span must start and end on whole hours");
    if (future_days < 0) fail("future_days must be non-negative");
    if (stations.empty()) fail("synthetic spec needs at least one station");
    for (const auto& s : stations) {
        if (s.code.empty()) fail("station profile without a code");
        if (s.daily_amplitude < 0 || s.weekly_amplitude < 0 || s.yearly_amplitude < 0 || s.holiday_uplift < 0) {
            fail("seasonal amplitudes of " + s.code + " must be non-negative");
        }
        if (s.tuag_rate < 0) fail("TUAG rate of " + s.code + " must be non-negative");
    }
    lead_time.validate();
    if (!(weather_missing_rate >= 0.0 && weather_missing_rate < 1.0)) fail("weather missing rate must lie in [0, 1)");
    if (roster.display_first < 0 || roster.display_last > 23 || roster.display_first > roster.display_last) {
        fail("roster display hours must satisfy 0 <= first <= last <= 23");
    }
}

SynthSpec default_spec() {
    SynthSpec s;
    s.start = parse_time("2023-01-01T00:00:00Z");
    s.end = parse_time("2025-01-01T00:00:00Z");
    s.stations = {
        {"KGX", 2.6, 0.15, 1.6, 0.25, 0.15, 0.5, -0.04, 0.005, 0.25},
        {"YRK", 1.4, 0.10, 1.4, 0.20, 0.20, 0.5, -0.05, 0.005, 0.20},
        {"BWK", -1.2, 0.05, 1.0, 0.20, 0.25, 0.4, -0.05, 0.0, 0.15},
    };
    return s;
}

SynthSpec spec_from_json(const json& j) {
    SynthSpec s = default_spec();
    if (j.contains("start")) s.start = parse_time(j.at("start").get<std::string>());
    if (j.contains("end")) s.end = parse_time(j.at("end").get<std::string>());
    s.future_days = j.value("future_days", s.future_days);
    s.seed = j.value("seed", s.seed);
    s.weather_missing_rate = j.value("weather_missing_rate", s.weather_missing_rate);
    s.emit_weather_noise = j.value("weather_noise", s.emit_weather_noise);
    if (j.contains("lead_time")) {
        const auto& l = j.at("lead_time");
        s.lead_time.body_mean_days = l.value("body_mean_days", s.lead_time.body_mean_days);
        s.lead_time.spike_days = l.value("spike_days", s.lead_time.spike_days);
        s.lead_time.final_week_mass = l.value("final_week_mass", s.lead_time.final_week_mass);
    }
    if (j.contains("roster")) {
        const auto& r = j.at("roster");
        s.roster.display_first = r.value("display_first", s.roster.display_first);
        s.roster.display_last = r.value("display_last", s.roster.display_last);
        s.roster.primary_cover = r.value("primary_cover", s.roster.primary_cover);
        s.roster.jitter = r.value("jitter", s.roster.jitter);
        s.roster.secondary_max = r.value("secondary_max", s.roster.secondary_max);
        s.roster.excluded_per_hour = r.value("excluded_per_hour", s.roster.excluded_per_hour);
    }
    if (j.contains("stations")) {
        s.stations.clear();
        for (const auto& p : j.at("stations")) {
            StationProfile sp;
            sp.code = p.at("code").get<std::string>();
            sp.level = p.value("level", sp.level);
            sp.trend_per_year = p.value("trend_per_year", sp.trend_per_year);
            sp.daily_amplitude = p.value("daily_amplitude", sp.daily_amplitude);
            sp.weekly_amplitude = p.value("weekly_amplitude", sp.weekly_amplitude);
            sp.yearly_amplitude = p.value("yearly_amplitude", sp.yearly_amplitude);
            sp.holiday_uplift = p.value("holiday_uplift", sp.holiday_uplift);
            sp.rain_effect = p.value("rain_effect", sp.rain_effect);
            sp.temperature_effect = p.value("temperature_effect", sp.temperature_effect);
            sp.tuag_rate = p.value("tuag_rate", sp.tuag_rate);
            s.stations.push_back(sp);
        }
    }
    s.validate();
    return s;
}

json to_json(const SynthSpec& s) {
    json stations = json::array();
    for (const auto& p : s.stations) {
        stations.push_back({{"code", p.code},
                            {"level", p.level},
                            {"trend_per_year", p.trend_per_year},
                            {"daily_amplitude", p.daily_amplitude},
                            {"weekly_amplitude", p.weekly_amplitude},
                            {"yearly_amplitude", p.yearly_amplitude},
                            {"holiday_uplift", p.holiday_uplift},
                            {"rain_effect", p.rain_effect},
                            {"temperature_effect", p.temperature_effect},
                            {"tuag_rate", p.tuag_rate}});
    }
    return {{"start", format_time(s.start)},
            {"end", format_time(s.end)},
            {"future_days", s.future_days},
            {"seed", s.seed},
            {"weather_missing_rate", s.weather_missing_rate},
            {"weather_noise", s.emit_weather_noise},
            {"lead_time",
             {{"body_mean_days", s.lead_time.body_mean_days},
              {"spike_days", s.lead_time.spike_days},
              {"final_week_mass", s.lead_time.final_week_mass}}},
            {"roster",
             {{"display_first", s.roster.display_first},
              {"display_last", s.roster.display_last},
              {"primary_cover", s.roster.primary_cover},
              {"jitter", s.roster.jitter},
              {"secondary_max", s.roster.secondary_max},
              {"excluded_per_hour", s.roster.excluded_per_hour}}},
            {"stations", stations}};
}

// ---------------------------------------------------------------------------
// Generation

std::vector<TruthRow> SynthTruth::station(const std::string& code) const {
    std::vector<TruthRow> out;
    for (const auto& r : rows) {
        if (r.station == code) out.push_back(r);
    }
    return out;
}

SynthOutput generate(const SynthSpec& spec) {
    spec.validate();
    const Calendar calendar(spec.start, spec.end + Days{spec.future_days});
    const Timestamp horizon_end = spec.end + Days{spec.future_days};
    const std::size_t n_hours = static_cast<std::size_t>((horizon_end - spec.start) / Hours{1});
    const double p_spike = spec.lead_time.spike_weight();
    const double cf = workforce::capacity_factor({});

    SynthOutput out;
    for (const auto& st : spec.stations) {
        auto weather_rng = stream(spec.seed, st.code, 1);
        auto event_rng = stream(spec.seed, st.code, 2);
        auto roster_rng = stream(spec.seed, st.code, 3);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<int> minute(0, 59);
        std::exponential_distribution<double> body(1.0 / spec.lead_time.body_mean_days);
        std::size_t serial = 0;
        WeatherState ws;
        const Timestamp roster_from = std::max(spec.start, spec.end - Days{28});

        for (std::size_t i = 0; i < n_hours; ++i) {
            const Timestamp t = spec.start + Hours{static_cast<std::int64_t>(i)};
            const auto w = draw_weather(st.code, t, ws, weather_rng, spec.emit_weather_noise);
            if (!(u01(weather_rng) < spec.weather_missing_rate)) out.weather.push_back(w);

            TruthRow tr;
            tr.station = st.code;
            tr.hour = t;
            tr.trend = st.trend_per_year * (epoch_days(t) - epoch_days(spec.start)) / 365.25;
            tr.daily = st.daily_amplitude * daily_shape(t);
            tr.weekly = st.weekly_amplitude * weekly_shape(t);
            tr.yearly = st.yearly_amplitude * yearly_shape(t);
            tr.holidays = st.holiday_uplift * calendar.at(t);
            tr.regressors = st.rain_effect * w.rainfall_mm + st.temperature_effect * (w.temperature_c - 10.0);
            tr.lambda = softplus(st.level + tr.trend + tr.daily + tr.weekly + tr.yearly + tr.holidays + tr.regressors);
            const bool in_span = t < spec.end;
            if (in_span) out.truth.rows.push_back(tr);

            const auto n = std::poisson_distribution<int>(tr.lambda)(event_rng);
            for (int k = 0; k < n; ++k) {
                AssistanceEvent e;
                e.station = st.code;
                e.kind = u01(event_rng) < 0.5 ? EventKind::Dep : EventKind::Arr;
                e.scheduled_time = t + std::chrono::minutes{minute(event_rng)};
                const double lead_days =
                    u01(event_rng) < p_spike ? spec.lead_time.spike_days * u01(event_rng) : body(event_rng);
                const auto lead = std::chrono::minutes{static_cast<std::int64_t>(std::ceil(lead_days * 1440.0))};
                e.booking_created = e.scheduled_time - lead;
                e.channel = Channel::Prebooked;
                char id[48];
                std::snprintf(id, sizeof id, "%s-%07zu", st.code.c_str(), ++serial);
                e.journey_id = id;
                if (!in_span && e.booking_created >= spec.end) continue;
                out.events.push_back(std::move(e));
            }
            if (in_span) {
                const auto n_tuag = std::poisson_distribution<int>(st.tuag_rate * tr.lambda + 1e-12)(event_rng);
                for (int k = 0; k < n_tuag; ++k) {
                    AssistanceEvent e;
                    e.station = st.code;
                    e.kind = u01(event_rng) < 0.5 ? EventKind::Dep : EventKind::Arr;
                    e.scheduled_time = t + std::chrono::minutes{minute(event_rng)};
                    e.booking_created = e.scheduled_time;
                    e.channel = Channel::Tuag;
                    char id[48];
                    std::snprintf(id, sizeof id, "%s-T%06zu", st.code.c_str(), ++serial);
                    e.journey_id = id;
                    out.events.push_back(std::move(e));
                }
            }

            const int hod = hour_of_day(t);
            if (t >= roster_from && hod >= spec.roster.display_first && hod <= spec.roster.display_last) {
                const double need = tr.lambda * spec.roster.primary_cover / cf;
                const double jittered = need * (1.0 + spec.roster.jitter * (2.0 * u01(roster_rng) - 1.0));
                const int primary = std::max(0, static_cast<int>(std::lround(jittered)));
                out.roster.set(st.code, t, "PSA", (primary + 1) / 2);
                out.roster.set(st.code, t, "SCSC", primary / 2);
                std::uniform_int_distribution<int> sec(0, std::max(0, spec.roster.secondary_max));
                out.roster.set(st.code, t, "SCSA", sec(roster_rng));
                out.roster.set(st.code, t, "SSA", sec(roster_rng) / 2);
                out.roster.set(st.code, t, "IC", spec.roster.excluded_per_hour);
            }
        }
    }
    std::sort(out.events.begin(), out.events.end(), [](const AssistanceEvent& a, const AssistanceEvent& b) {
        return std::tie(a.scheduled_time, a.station, a.journey_id) < std::tie(b.scheduled_time, b.station, b.journey_id);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Files

void write_truth_csv(const std::filesystem::path& path, const SynthTruth& truth) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path.string() + "'");
    out << "station,hour_start,trend,daily,weekly,yearly,holidays,regressors,lambda\n";
    for (const auto& r : truth.rows) {
        csv::write_row(out, {r.station, format_time(r.hour), csv::format_double(r.trend), csv::format_double(r.daily),
                             csv::format_double(r.weekly), csv::format_double(r.yearly),
                             csv::format_double(r.holidays), csv::format_double(r.regressors),
                             csv::format_double(r.lambda)});
    }
}

SynthTruth read_truth_csv(const std::filesystem::path& path) {
    const auto t = csv::read_file(path);
    const auto cs = t.column("station"), ch = t.column("hour_start"), ctr = t.column("trend"),
               cd = t.column("daily"), cw = t.column("weekly"), cy = t.column("yearly"), cho = t.column("holidays"),
               cr = t.column("regressors"), cl = t.column("lambda");
    SynthTruth truth;
    for (const auto& row : t.rows) {
        truth.rows.push_back({row[cs], parse_time(row[ch]), std::stod(row[ctr]), std::stod(row[cd]),
                              std::stod(row[cw]), std::stod(row[cy]), std::stod(row[cho]), std::stod(row[cr]),
                              std::stod(row[cl])});
    }
    return truth;
}

void write_outputs(const std::filesystem::path& dir, const SynthOutput& out) {
    std::filesystem::create_directories(dir);
    panel::write_events_csv(dir / kEventsFile, out.events);
    panel::write_weather_csv(dir / kWeatherFile, out.weather);
    workforce::write_roster_csv(dir / kRosterFile, out.roster);
    write_truth_csv(dir / kTruthFile, out.truth);
}

// ---------------------------------------------------------------------------
// Truth comparison

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail("correlation of series with different lengths");
    const std::size_t n = a.size();
    if (n < 2) return std::nullopt;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    const double eps = 1e-24 * static_cast<double>(n);
    if (saa <= eps || sbb <= eps) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<CorrelationRow> truth_report(const SynthTruth& truth, std::span<const ComponentSeries> fitted) {
    std::map<std::pair<std::string, Timestamp>, const TruthRow*> index;
    for (const auto& r : truth.rows) index[{r.station, r.hour}] = &r;
    auto pick = [](const TruthRow& r, const std::string& c) {
        if (c == "trend") return r.trend;
        if (c == "daily") return r.daily;
        if (c == "weekly") return r.weekly;
        if (c == "yearly") return r.yearly;
        if (c == "holidays") return r.holidays;
        if (c == "regressors") return r.regressors;
        if (c == "lambda") return r.lambda;
        fail("unknown truth component '" + c + "'");
    };
    std::vector<CorrelationRow> out;
    for (const auto& f : fitted) {
        std::vector<const TruthRow*> rows;
        rows.reserve(f.hours.size());
        for (auto h : f.hours) {
            auto it = index.find({f.station, h});
            if (it == index.end()) fail("no ground truth for " + f.station + " at " + format_time(h));
            rows.push_back(it->second);
        }
        for (const auto& [name, values] : f.components) {
            if (values.size() != rows.size()) fail("component '" + name + "' length differs from its hours");
            std::vector<double> t(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) t[i] = pick(*rows[i], name);
            out.push_back({f.station, name, pearson(values, t), values.size()});
        }
    }
    return out;
}

}  // namespace paxcast::synth
