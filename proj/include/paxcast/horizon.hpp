#pragma once

// Horizon buckets: one additive model per lead-time range, each with the
// regressors that are observable at that lead time. Forecast hours are routed
// by their horizon from the forecast origin and stitched into one trajectory.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "paxcast/gam.hpp"
#include "paxcast/panel.hpp"

namespace paxcast::horizon {

struct HorizonBucket {
    std::string name;
    int h_min_days = 1;
    std::optional<int> h_max_days;  // nullopt = unbounded
    std::vector<std::string> regressors;

    bool contains(int horizon) const {
        return horizon >= h_min_days && (!h_max_days || horizon <= *h_max_days);
    }
};

/// Ordered, disjoint buckets that jointly cover [1, inf). Checked on construction.
class BucketSet {
public:
    explicit BucketSet(std::vector<HorizonBucket> buckets);

    const std::vector<HorizonBucket>& buckets() const { return buckets_; }
    std::size_t size() const { return buckets_.size(); }
    const HorizonBucket& for_horizon(int horizon_days) const;
    const HorizonBucket& by_name(const std::string& name) const;
    std::vector<std::string> names() const;
    /// Union of every bucket's regressors, in first-seen order.
    std::vector<std::string> all_regressors() const;

private:
    std::vector<HorizonBucket> buckets_;
};

/// VeryShort [1,2], Short [3,7], MediumI [8,14], MediumII [15,28], Long (28, inf).
BucketSet default_buckets();

/// Ceiling of the lead time in days. Throws unless target > origin.
int horizon_days(Timestamp origin, Timestamp target);

const HorizonBucket& route(Timestamp origin, Timestamp target, const BucketSet& buckets);

nlohmann::json to_json(const BucketSet& buckets);
BucketSet buckets_from_json(const nlohmann::json& j);

/// Rows of `series` (optionally only those with `tag`) as a model frame
/// carrying just the named regressors.
gam::Frame frame_from_series(const panel::StationSeries& series, std::span<const std::string> regressors,
                             std::optional<panel::SplitTag> tag, const std::string& scaler_fingerprint);

using BucketModels = std::map<std::string, gam::FittedModel>;

struct BucketTraining {
    BucketModels models;
    std::map<std::string, gam::GridResult> grids;
};

/// Grid-searches and fits one model per bucket on the TRAIN rows of
/// `series`. Each bucket's design sees only that bucket's regressors.
BucketTraining train_bucketed(const panel::StationSeries& series, const BucketSet& buckets,
                              std::span<const gam::ModelSpec> grid, const std::string& scaler_fingerprint,
                              double validation_fraction = 0.2);

struct TrajectoryRow {
    std::string station;
    Timestamp hour;
    int horizon_days = 0;
    std::string bucket;
    double yhat = 0.0;
};

/// One prediction per hour in [first_hour, last_hour]. `future` must cover
/// that range with regressors already computed as of `origin` and scaled.
std::vector<TrajectoryRow> forecast_trajectory(const BucketModels& models, const BucketSet& buckets,
                                               Timestamp origin, Timestamp first_hour, Timestamp last_hour,
                                               const panel::StationSeries& future,
                                               const std::string& scaler_fingerprint);

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows);

}  // namespace paxcast::horizon
