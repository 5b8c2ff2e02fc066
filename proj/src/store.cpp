#include "paxcast/store.hpp"

#include <fstream>

#include "paxcast/error.hpp"

namespace paxcast::store {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "cannot read '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + tmp + "'");
        out << j.dump(1) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::filesystem::path models_dir(const std::filesystem::path& work) { return work / "models"; }

std::filesystem::path model_path(const std::filesystem::path& work, const std::string& station,
                                 const std::string& bucket) {
    return models_dir(work) / station / (bucket + ".json");
}

std::filesystem::path manifest_path(const std::filesystem::path& work) { return models_dir(work) / "manifest.json"; }

void save_model(const std::filesystem::path& path, const gam::FittedModel& model) {
    write_json(path, gam::to_json(model));
}

gam::FittedModel load_model(const std::filesystem::path& path) {
    try {
        return gam::model_from_json(read_json(path));
    } catch (const json::exception& e) {
        fail("model file '" + path.string() + "' is malformed: " + e.what());
    }
}

json Manifest::to_json() const {
    json st = json::object();
    for (const auto& [code, e] : stations) {
        st[code] = {{"scaler_fingerprint", e.scaler_fingerprint}, {"buckets", e.buckets}};
    }
    return {{"data_hash", data_hash}, {"trained_at", trained_at}, {"stations", st}};
}

Manifest Manifest::from_json(const json& j) {
    Manifest m;
    m.data_hash = j.value("data_hash", std::string{});
    m.trained_at = j.value("trained_at", std::string{});
    for (const auto& [code, e] : j.at("stations").items()) {
        StationEntry se;
        se.scaler_fingerprint = e.at("scaler_fingerprint").get<std::string>();
        for (const auto& [b, v] : e.at("buckets").items()) se.buckets[b] = v;
        m.stations[code] = std::move(se);
    }
    return m;
}

StationEntry save_station(const std::filesystem::path& work, const std::string& station,
                          const horizon::BucketTraining& training, const std::string& scaler_fingerprint) {
    StationEntry e;
    e.scaler_fingerprint = scaler_fingerprint;
    for (const auto& [bucket, model] : training.models) {
        save_model(model_path(work, station, bucket), model);
        json grid = json::array();
        std::size_t best = 0;
        if (auto it = training.grids.find(bucket); it != training.grids.end()) {
            best = it->second.best_index;
            for (const auto& s : it->second.table) {
                grid.push_back({{"index", s.index},
                                {"mode", gam::to_string(s.spec.mode)},
                                {"seasonality_scale", s.spec.penalties.seasonality},
                                {"holidays_scale", s.spec.penalties.holidays},
                                {"armse", s.armse},
                                {"mae", s.mae}});
            }
        }
        e.buckets[bucket] = {{"file", station + "/" + bucket + ".json"}, {"best_index", best}, {"grid", grid}};
    }
    return e;
}

void write_manifest(const std::filesystem::path& work, const Manifest& m) { write_json(manifest_path(work), m.to_json()); }

Manifest read_manifest(const std::filesystem::path& work) {
    const auto path = manifest_path(work);
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::NotReady, "no trained models: run `train` first");
    try {
        return Manifest::from_json(read_json(path));
    } catch (const json::exception& e) {
        fail("model manifest is malformed: " + std::string(e.what()));
    }
}

std::map<std::string, horizon::BucketModels> load_all(const std::filesystem::path& work, Manifest* manifest) {
    const Manifest m = read_manifest(work);
    std::map<std::string, horizon::BucketModels> out;
    for (const auto& [station, entry] : m.stations) {
        auto& models = out[station];
        for (const auto& [bucket, info] : entry.buckets) {
            auto model = load_model(models_dir(work) / info.at("file").get<std::string>());
            if (model.scaler_fingerprint != entry.scaler_fingerprint) {
                fail("model " + station + "/" + bucket + " was fitted against a different scaler");
            }
            models.emplace(bucket, std::move(model));
        }
    }
    if (manifest) *manifest = m;
    return out;
}

}  // namespace paxcast::store
