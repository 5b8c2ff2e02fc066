#pragma once

// On-disk model store: <work>/models/<station>/<bucket>.json plus a manifest
// with training metadata.

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "paxcast/gam.hpp"
#include "paxcast/horizon.hpp"

namespace paxcast::store {

std::filesystem::path models_dir(const std::filesystem::path& work);
std::filesystem::path model_path(const std::filesystem::path& work, const std::string& station,
                                 const std::string& bucket);
std::filesystem::path manifest_path(const std::filesystem::path& work);

void save_model(const std::filesystem::path& path, const gam::FittedModel& model);
gam::FittedModel load_model(const std::filesystem::path& path);

struct StationEntry {
    std::string scaler_fingerprint;
    std::map<std::string, nlohmann::json> buckets;  // bucket -> {file, best_index, grid}
};

struct Manifest {
    std::string data_hash;
    std::string trained_at;
    std::map<std::string, StationEntry> stations;

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
};

/// Writes every bucket model of one station and returns its manifest entry.
StationEntry save_station(const std::filesystem::path& work, const std::string& station,
                          const horizon::BucketTraining& training, const std::string& scaler_fingerprint);

void write_manifest(const std::filesystem::path& work, const Manifest& m);
/// Throws NotReady when no models have been trained.
Manifest read_manifest(const std::filesystem::path& work);

/// Loads every model listed in the manifest. Throws NotReady when the
/// manifest is absent.
std::map<std::string, horizon::BucketModels> load_all(const std::filesystem::path& work, Manifest* manifest = nullptr);

}  // namespace paxcast::store
