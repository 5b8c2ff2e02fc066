#pragma once

// Station-hour panel construction: ingestion of raw assistance records,
// journey decomposition, hourly aggregation, as-of booking features, weather
// join, imputation, scaling and the time-ordered split.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "paxcast/time.hpp"

namespace paxcast::panel {

enum class EventKind { Dep, Arr };
enum class Channel { Prebooked, Tuag };
enum class SplitTag { Train, Test, Future };

std::string to_string(EventKind k);
std::string to_string(Channel c);
std::string to_string(SplitTag s);

struct AssistanceEvent {
    std::string station;
    EventKind kind = EventKind::Dep;
    Timestamp scheduled_time;  // effective timestamp: departure for DEP, arrival for ARR
    Timestamp booking_created;
    Channel channel = Channel::Prebooked;
    std::string journey_id;

    auto operator<=>(const AssistanceEvent&) const = default;
};

/// One row of events.csv as read from disk; `row` is the 1-based data row.
struct RawRecord {
    std::size_t row = 0;
    std::string journey_id;
    std::string station;
    std::string event_kind;
    std::string scheduled_time;
    std::string booking_created;
    std::string channel;
};

struct Diagnostic {
    std::size_t row = 0;
    std::string message;
};

struct IngestResult {
    std::vector<AssistanceEvent> prebooked;  // modelling target
    std::vector<AssistanceEvent> tuag;       // kept for rate estimation only
    std::vector<Diagnostic> diagnostics;
};

/// Filters to `stations`, drops exact duplicates and sorts chronologically by
/// effective timestamp. Rejected rows are reported, not thrown.
IngestResult ingest_events(std::span<const RawRecord> records, std::span<const std::string> stations);

std::vector<RawRecord> read_events_csv(const std::filesystem::path& path);
void write_events_csv(const std::filesystem::path& path, std::span<const AssistanceEvent> events);

struct Leg {
    std::string origin;
    std::string destination;
    Timestamp departure;
    Timestamp arrival;
};

struct Journey {
    std::string journey_id;
    std::string origin;       // may be empty; checked against the legs otherwise
    std::string destination;  // likewise
    std::vector<Leg> legs;
    Timestamp booking_created;
    Channel channel = Channel::Prebooked;
};

/// One DEP at each leg origin and one ARR at each leg destination.
std::vector<AssistanceEvent> decompose_journey(const Journey& journey);

/// Gap-free hourly series for one station. Regressor cells use NaN for missing.
struct StationSeries {
    std::string station;
    Timestamp start;  // first hour_start
    std::vector<double> y;
    std::vector<SplitTag> split;
    std::map<std::string, std::vector<double>> columns;

    std::size_t size() const { return y.size(); }
    Timestamp hour(std::size_t i) const { return start + Hours{static_cast<std::int64_t>(i)}; }
    std::optional<std::size_t> index_of(Timestamp hour_start) const;
    std::vector<Timestamp> hours() const;
    const std::vector<double>& column(const std::string& name) const;
};

struct StationHourPanel {
    std::vector<StationSeries> series;

    const StationSeries& station(const std::string& code) const;
    StationSeries& station(const std::string& code);
    bool has_station(const std::string& code) const;
};

/// Hourly counts over `span` (whole hours, half-open) for every station.
StationHourPanel build_panel(std::span<const AssistanceEvent> events, std::span<const std::string> stations,
                             HourSpan span);

struct AsOfFeatureSpec {
    std::vector<Hours> thresholds{Hours{48}, Hours{7 * 24}, Hours{14 * 24}, Hours{28 * 24}, Hours{56 * 24}};
    bool include_adjacent_diffs = true;

    void validate() const;
};

/// "2d" for whole days, "36h" otherwise.
std::string threshold_label(Hours tau);
std::string cum_column(Hours tau);
/// Column holding cum_{smaller} - cum_{larger}: bookings created in (t - larger, t - smaller].
std::string diff_column(Hours larger, Hours smaller);
/// All column names produced by compute_asof_features for this spec.
std::vector<std::string> asof_columns(const AsOfFeatureSpec& spec);

/// Adds `cum_<tau>` (and adjacent `diff_` columns) to every series. Without an
/// origin each row is its own reference time; with one, bookings created after
/// the origin are also excluded.
void compute_asof_features(StationHourPanel& panel, std::span<const AssistanceEvent> bookings,
                           const AsOfFeatureSpec& spec, std::optional<Timestamp> as_of_origin = std::nullopt);
void compute_asof_features(StationSeries& series, std::span<const AssistanceEvent> bookings,
                           const AsOfFeatureSpec& spec, std::optional<Timestamp> as_of_origin = std::nullopt);

struct WeatherObservation {
    std::string station;
    Timestamp hour_start;
    double temperature_c = 0.0;
    double rainfall_mm = 0.0;
    double humidity_pct = 0.0;
};

inline const std::vector<std::string>& weather_columns() {
    static const std::vector<std::string> cols{"temperature_c", "rainfall_mm", "humidity_pct"};
    return cols;
}

std::vector<WeatherObservation> read_weather_csv(const std::filesystem::path& path);
void write_weather_csv(const std::filesystem::path& path, std::span<const WeatherObservation> obs);

/// Aligns the three weather columns by (station, hour); unmatched rows are NaN.
void join_weather(StationHourPanel& panel, std::span<const WeatherObservation> observations);
void join_weather(StationSeries& series, std::span<const WeatherObservation> observations);

enum class ImputePolicy { ForwardFillThenTrainMean, TrainMean };

/// Per-column fill values (TRAIN means) for one station.
using ImputeStats = std::map<std::string, double>;

/// Learns fill means from the TRAIN rows of `series`. Throws when a column has
/// no observed TRAIN value.
ImputeStats fit_imputation(const StationSeries& series, std::span<const std::string> columns);
/// Fills NaN cells of the columns in `stats`; never reads values from later rows.
void apply_imputation(StationSeries& series, const ImputeStats& stats, ImputePolicy policy);
/// fit_imputation followed by apply_imputation.
ImputeStats impute_missing(StationSeries& series, ImputePolicy policy, std::span<const std::string> columns);

enum class ScaleMethod { Standardise, MinMax, None };

std::string to_string(ScaleMethod m);
ScaleMethod scale_method_from_string(const std::string& s);

struct ColumnStats {
    double center = 0.0;
    double spread = 0.0;  // 0 => column passes through unscaled
};

class Scaler {
public:
    Scaler() = default;
    Scaler(ScaleMethod method, std::map<std::string, ColumnStats> stats);

    bool fitted() const { return fitted_; }
    ScaleMethod method() const { return method_; }
    const std::map<std::string, ColumnStats>& stats() const { return stats_; }

    double transform(const std::string& column, double value) const;
    std::vector<double> transform(const std::string& column, std::span<const double> values) const;
    void apply(StationSeries& series) const;

    /// Stable hash of the statistics, stored with every fitted model.
    std::string fingerprint() const;

    nlohmann::json to_json() const;
    static Scaler from_json(const nlohmann::json& j);

private:
    ScaleMethod method_ = ScaleMethod::None;
    std::map<std::string, ColumnStats> stats_;
    bool fitted_ = false;
};

/// Statistics over the given (TRAIN) values; population standard deviation.
Scaler fit_scaler(const std::map<std::string, std::vector<double>>& train_columns, ScaleMethod method);
/// Statistics over the TRAIN rows of `series` only.
Scaler fit_scaler(const StationSeries& series, ScaleMethod method, std::span<const std::string> columns);

/// Index of the first TEST row after sorting `hours`; floor(fraction * n) rows train.
std::size_t split_index(std::size_t n, double train_fraction);

/// Sorts the given timestamps and returns the first TEST timestamp.
Timestamp split_boundary(std::vector<Timestamp> hours, double train_fraction = 0.8);

/// Tags rows TRAIN/TEST per station. Throws when a station has fewer than 5 rows.
void split_time_ordered(StationHourPanel& panel, double train_fraction = 0.8);

struct TuagRate {
    double value = 0.0;
    bool fallback = false;  // seasonal cell undefined; station annual rate used
};

/// TUAG / PREBOOKED count ratio for a station and calendar month (1-12).
TuagRate estimate_tuag_rate(std::span<const AssistanceEvent> events, const std::string& station, unsigned month);

inline double indicative_tuag(double prebooked_forecast, const TuagRate& rate) {
    return prebooked_forecast * rate.value;
}

}  // namespace paxcast::panel
