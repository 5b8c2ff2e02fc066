#include "paxcast/horizon.hpp"

#include <algorithm>
#include <ostream>

#include <nlohmann/json.hpp>

#include "paxcast/csv.hpp"
#include "paxcast/error.hpp"

namespace paxcast::horizon {

using nlohmann::json;

BucketSet::BucketSet(std::vector<HorizonBucket> buckets) : buckets_(std::move(buckets)) {
    if (buckets_.empty()) fail("bucket set is empty");
    int expect = 1;
    for (std::size_t i = 0; i < buckets_.size(); ++i) {
        const auto& b = buckets_[i];
        if (b.name.empty()) fail("bucket without a name");
        for (std::size_t j = 0; j < i; ++j) {
            if (buckets_[j].name == b.name) fail("duplicate bucket name '" + b.name + "'");
        }
        if (b.h_min_days != expect) {
            fail("bucket '" + b.name + "' starts at day " + std::to_string(b.h_min_days) + ", expected " +
                 std::to_string(expect) + " for contiguous coverage");
        }
        const bool last = i + 1 == buckets_.size();
        if (!b.h_max_days) {
            if (!last) fail("only the last bucket may be unbounded");
        } else {
            if (*b.h_max_days < b.h_min_days) fail("bucket '" + b.name + "' has h_max < h_min");
            if (last) fail("the last bucket must be unbounded to cover every horizon");
            expect = *b.h_max_days + 1;
        }
    }
}

const HorizonBucket& BucketSet::for_horizon(int horizon) const {
    for (const auto& b : buckets_) {
        if (b.contains(horizon)) return b;
    }
    fail("no bucket covers horizon " + std::to_string(horizon));
}

const HorizonBucket& BucketSet::by_name(const std::string& name) const {
    for (const auto& b : buckets_) {
        if (b.name == name) return b;
    }
    throw Error(ErrorKind::NotFound, "unknown bucket '" + name + "'");
}

std::vector<std::string> BucketSet::names() const {
    std::vector<std::string> out;
    for (const auto& b : buckets_) out.push_back(b.name);
    return out;
}

std::vector<std::string> BucketSet::all_regressors() const {
    std::vector<std::string> out;
    for (const auto& b : buckets_) {
        for (const auto& r : b.regressors) {
            if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
        }
    }
    return out;
}

BucketSet default_buckets() {
    const std::vector<std::string> weather{"temperature_c", "rainfall_mm", "humidity_pct"};
    auto with_weather = [&](std::vector<std::string> v) {
        v.insert(v.end(), weather.begin(), weather.end());
        return v;
    };
    return BucketSet({
        {"VeryShort", 1, 2, with_weather({"cum_2d", "cum_7d", "diff_7d_2d"})},
        {"Short", 3, 7, with_weather({"cum_7d", "cum_14d", "diff_14d_7d"})},
        {"MediumI", 8, 14, {"cum_14d", "cum_28d", "diff_28d_14d"}},
        {"MediumII", 15, 28, {"cum_28d", "cum_56d", "diff_56d_28d"}},
        {"Long", 29, std::nullopt, {"cum_56d"}},
    });
}

int horizon_days(Timestamp origin, Timestamp target) {
    if (target <= origin) {
        fail("target " + format_time(target) + " is not after forecast origin " + format_time(origin));
    }
    const auto secs = (target - origin).count();
    return static_cast<int>((secs + 86399) / 86400);
}

const HorizonBucket& route(Timestamp origin, Timestamp target, const BucketSet& buckets) {
    return buckets.for_horizon(horizon_days(origin, target));
}

json to_json(const BucketSet& buckets) {
    json out = json::array();
    for (const auto& b : buckets.buckets()) {
        out.push_back({{"name", b.name},
                       {"h_min_days", b.h_min_days},
                       {"h_max_days", b.h_max_days ? json(*b.h_max_days) : json(nullptr)},
                       {"regressors", b.regressors}});
    }
    return out;
}

BucketSet buckets_from_json(const json& j) {
    std::vector<HorizonBucket> out;
    for (const auto& b : j) {
        HorizonBucket hb;
        hb.name = b.at("name").get<std::string>();
        hb.h_min_days = b.at("h_min_days").get<int>();
        if (b.contains("h_max_days") && !b.at("h_max_days").is_null()) hb.h_max_days = b.at("h_max_days").get<int>();
        hb.regressors = b.value("regressors", std::vector<std::string>{});
        out.push_back(std::move(hb));
    }
    return BucketSet(std::move(out));
}

gam::Frame frame_from_series(const panel::StationSeries& series, std::span<const std::string> regressors,
                             std::optional<panel::SplitTag> tag, const std::string& scaler_fingerprint) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!tag || series.split[i] == *tag) rows.push_back(i);
    }
    gam::Frame f;
    f.scaler_fingerprint = scaler_fingerprint;
    f.ds.reserve(rows.size());
    f.y.reserve(rows.size());
    for (auto i : rows) {
        f.ds.push_back(series.hour(i));
        f.y.push_back(series.y[i]);
    }
    for (const auto& name : regressors) {
        auto it = series.columns.find(name);
        if (it == series.columns.end()) {
            fail("station " + series.station + ": regressor '" + name + "' is absent from the panel");
        }
        auto& dst = f.regressors[name];
        dst.reserve(rows.size());
        for (auto i : rows) dst.push_back(it->second[i]);
    }
    return f;
}

BucketTraining train_bucketed(const panel::StationSeries& series, const BucketSet& buckets,
                              std::span<const gam::ModelSpec> grid, const std::string& scaler_fingerprint,
                              double validation_fraction) {
    if (grid.empty()) fail("training needs at least one model spec");
    for (const auto& b : buckets.buckets()) {
        for (const auto& r : b.regressors) {
            if (!series.columns.contains(r)) {
                fail("bucket '" + b.name + "' references regressor '" + r + "' absent from the panel");
            }
        }
    }
    BucketTraining out;
    for (const auto& b : buckets.buckets()) {
        const auto train = frame_from_series(series, b.regressors, panel::SplitTag::Train, scaler_fingerprint);
        std::vector<gam::ModelSpec> bucket_grid(grid.begin(), grid.end());
        for (auto& s : bucket_grid) s.regressor_names = b.regressors;
        auto result = gam::grid_search(train, bucket_grid, validation_fraction);
        out.models.emplace(b.name, gam::fit(train, result.best));
        out.grids.emplace(b.name, std::move(result));
    }
    return out;
}

std::vector<TrajectoryRow> forecast_trajectory(const BucketModels& models, const BucketSet& buckets,
                                               Timestamp origin, Timestamp first_hour, Timestamp last_hour,
                                               const panel::StationSeries& future,
                                               const std::string& scaler_fingerprint) {
    if (last_hour < first_hour) fail("forecast range is empty");
    if (floor_hour(first_hour) != first_hour || floor_hour(last_hour) != last_hour) {
        fail("forecast range must start and end on whole hours");
    }
    const std::size_t n = static_cast<std::size_t>((last_hour - first_hour) / Hours{1}) + 1;

    std::vector<TrajectoryRow> out(n);
    std::map<std::string, std::vector<std::size_t>> by_bucket;
    for (std::size_t i = 0; i < n; ++i) {
        const Timestamp t = first_hour + Hours{static_cast<std::int64_t>(i)};
        const int h = horizon_days(origin, t);
        const auto& b = buckets.for_horizon(h);
        out[i] = {future.station, t, h, b.name, 0.0};
        by_bucket[b.name].push_back(i);
    }
    for (const auto& [name, idx] : by_bucket) {
        auto mit = models.find(name);
        if (mit == models.end()) {
            throw Error(ErrorKind::NotReady, "no trained model for bucket '" + name + "' at " + future.station);
        }
        const auto& bucket = buckets.by_name(name);
        gam::Frame f;
        f.scaler_fingerprint = scaler_fingerprint;
        for (auto i : idx) {
            auto row = future.index_of(out[i].hour);
            if (!row) fail("future features do not cover " + format_time(out[i].hour));
            f.ds.push_back(out[i].hour);
            for (const auto& r : bucket.regressors) f.regressors[r].push_back(future.column(r)[*row]);
        }
        const auto pred = gam::predict(mit->second, f);
        for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]].yhat = pred.yhat[k];
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows) {
    out << "station,hour_start,horizon_days,bucket,yhat\n";
    for (const auto& r : rows) {
        csv::write_row(out, {r.station, format_time(r.hour), std::to_string(r.horizon_days), r.bucket,
                             csv::format_double(r.yhat)});
    }
}

}  // namespace paxcast::horizon
