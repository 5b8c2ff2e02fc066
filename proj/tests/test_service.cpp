#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "paxcast/error.hpp"
#include "paxcast/service.hpp"
#include "paxcast/store.hpp"
#include "support.hpp"
#include "workspace.hpp"

using namespace paxcast;
using testsupport::shared_workspace;
using testsupport::ts;

namespace {

int kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return static_cast<int>(e.kind());
    }
    return -1;
}

}  // namespace

TEST(Config, LoadResolvesRelativePaths) {
    testsupport::TempDir d("cfg");
    testsupport::write_json(d.path() / "c.json", testsupport::small_config({"YRK"}));
    const auto c = config::load(d.path() / "c.json");
    EXPECT_EQ(c.data_dir, d.path() / "data");
    EXPECT_EQ(c.work_dir, d.path() / "work");
    EXPECT_EQ(c.spec_grid().size(), 1u);
    EXPECT_EQ(c.origin(), ts("2024-05-01T00:00:00Z"));
    EXPECT_EQ(c.synth.stations.size(), 1u);
    const auto back = config::from_json(config::to_json(c), d.path());
    EXPECT_EQ(config::to_json(back), config::to_json(c));
}

TEST(Config, ValidationErrors) {
    testsupport::TempDir d("cfg_bad");
    const auto base = testsupport::small_config({"YRK"});
    const auto bad = [&](const std::function<void(nlohmann::json&)>& edit) {
        auto j = base;
        edit(j);
        return kind_of([&] { config::from_json(j, d.path()); });
    };
    const int invalid = static_cast<int>(ErrorKind::InvalidInput);
    EXPECT_EQ(bad([](auto& j) { j["stations"] = nlohmann::json::array(); }), invalid);
    EXPECT_EQ(bad([](auto& j) { j["stations"] = {"YRK", "YRK"}; }), invalid);
    EXPECT_EQ(bad([](auto& j) { j["span"]["end"] = "2022-01-01T00:00:00Z"; }), invalid);
    EXPECT_EQ(bad([](auto& j) { j["train_fraction"] = 1.2; }), invalid);
    EXPECT_EQ(bad([](auto& j) { j["grid"]["seasonality_scales"] = {0.0}; }), invalid);
    EXPECT_EQ(bad([](auto& j) { j["holiday_calendar"] = "mars"; }), invalid);
    EXPECT_EQ(bad([](auto& j) { j["planning"] = {{"origin", "2030-01-01T00:00:00Z"}}; }), invalid);
    EXPECT_EQ(kind_of([&] { config::load(d.path() / "missing.json"); }), static_cast<int>(ErrorKind::NotFound));
}

TEST(Store, RoundTripIsBitIdentical) {
    auto& ws = shared_workspace();
    testsupport::TempDir d("store");
    for (const auto& [station, t] : ws.trained.stations) {
        for (const auto& [bucket, m] : t.models) {
            const auto p1 = d.path() / (station + bucket + "_1.json");
            const auto p2 = d.path() / (station + bucket + "_2.json");
            store::save_model(p1, m);
            const auto loaded = store::load_model(p1);
            store::save_model(p2, loaded);
            EXPECT_EQ(testsupport::read_text(p1), testsupport::read_text(p2));
            EXPECT_EQ(loaded.coefficients, m.coefficients);
        }
    }
}

TEST(Store, MissingManifestIsNotReady) {
    testsupport::TempDir d("nomodels");
    EXPECT_EQ(kind_of([&] { store::load_all(d.path()); }), static_cast<int>(ErrorKind::NotReady));
    EXPECT_EQ(kind_of([&] { store::read_manifest(d.path()); }), static_cast<int>(ErrorKind::NotReady));
}

TEST(Pipeline, TrainedEveryStationAndBucket) {
    auto& ws = shared_workspace();
    store::Manifest m;
    const auto all = store::load_all(ws.cfg.work_dir, &m);
    ASSERT_EQ(all.size(), 2u);
    for (const auto& st : ws.cfg.stations) {
        EXPECT_EQ(all.at(st).size(), 5u);
        EXPECT_EQ(m.stations.at(st).buckets.size(), 5u);
        for (const auto& name : ws.cfg.buckets.names()) {
            EXPECT_TRUE(std::filesystem::exists(store::model_path(ws.cfg.work_dir, st, name)));
        }
    }
    EXPECT_FALSE(m.data_hash.empty());
}

TEST(Pipeline, EvaluateReportShape) {
    auto& ws = shared_workspace();
    const auto r = pipeline::run_evaluate(ws.cfg);
    EXPECT_EQ(r.rows.size(), ws.cfg.stations.size() * 6 * 2);
    for (const auto& row : r.rows) {
        EXPECT_GE(row.mae, 0.0);
        EXPECT_GE(row.coverage_pct, 0.0);
        EXPECT_LE(row.coverage_pct, 100.0);
    }
    EXPECT_TRUE(std::filesystem::exists(pipeline::evaluation_path(ws.cfg.work_dir)));
}

TEST(Pipeline, InferenceFeaturesMatchPanelForPastHours) {
    auto& ws = shared_workspace();
    const auto loaded = pipeline::load_panel(ws.cfg);
    const auto raw = panel::read_events_csv(pipeline::bookings_path(ws.cfg.work_dir));
    const auto ev = panel::ingest_events(raw, ws.cfg.stations);
    const auto weather = panel::read_weather_csv(ws.cfg.weather_path());
    const auto& s = loaded.series.at("KGX");
    const auto& sc = loaded.sidecars.at("KGX");
    const std::size_t i0 = s.size() - 100;
    const auto first = s.hour(i0), last = s.hour(s.size() - 1);
    // without an origin cap the features reproduce the panel exactly
    const auto inf = pipeline::build_inference_features(sc, first, last, ev.prebooked, weather, ws.cfg.span.end);
    for (const auto& col : sc.regressor_columns) {
        for (std::size_t k = 0; k < inf.size(); ++k) {
            EXPECT_NEAR(inf.column(col)[k], s.column(col)[i0 + k], 1e-12) << col << " " << k;
        }
    }
}

class ServiceTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() { svc_ = std::make_unique<service::ForecastService>(shared_workspace().cfg); }
    static void TearDownTestSuite() { svc_.reset(); }
    static std::unique_ptr<service::ForecastService> svc_;
};

std::unique_ptr<service::ForecastService> ServiceTest::svc_;

TEST_F(ServiceTest, ForecastCoversRangeAndRoutes) {
    const auto origin = shared_workspace().cfg.span.end;
    const auto from = origin + Hours{1}, to = origin + Days{35};
    const auto rows = svc_->forecast("KGX", origin, from, to);
    ASSERT_EQ(rows.size(), static_cast<std::size_t>((to - from) / Hours{1}) + 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].hour, from + Hours{static_cast<std::int64_t>(i)});
        EXPECT_EQ(rows[i].bucket, horizon::route(origin, rows[i].hour, shared_workspace().cfg.buckets).name);
        EXPECT_GE(rows[i].yhat, 0.0);
    }
    EXPECT_EQ(kind_of([&] { svc_->forecast("ZZZ", origin, from, to); }), static_cast<int>(ErrorKind::NotFound));
    EXPECT_EQ(kind_of([&] { svc_->forecast("KGX", origin, origin, to); }), static_cast<int>(ErrorKind::InvalidInput));
    EXPECT_EQ(kind_of([&] { svc_->forecast("KGX", origin, to, from); }), static_cast<int>(ErrorKind::InvalidInput));
}

TEST_F(ServiceTest, ComponentsSumToForecast) {
    const auto origin = shared_workspace().cfg.span.end;
    const auto from = origin + Hours{1}, to = origin + Hours{40};
    const auto rows = svc_->forecast("KGX", origin, from, to);
    const auto b = svc_->components("KGX", "VeryShort", from, to, origin);
    ASSERT_EQ(b.ds.size(), rows.size());
    for (std::size_t i = 0; i < b.ds.size(); ++i) {
        const double sum = b.trend[i] + b.daily[i] + b.weekly[i] + b.yearly[i] + b.holidays[i] + b.regressors[i];
        EXPECT_NEAR(sum, b.total[i], 1e-9);
        EXPECT_NEAR(std::max(0.0, b.total[i]), b.yhat[i], 1e-9);
        if (rows[i].bucket == "VeryShort") EXPECT_NEAR(b.yhat[i], rows[i].yhat, 1e-9);
    }
    const auto in_panel = svc_->components("KGX", "Long", ts("2024-02-01T00:00:00Z"), ts("2024-02-02T00:00:00Z"));
    EXPECT_EQ(in_panel.ds.size(), 25u);
    EXPECT_EQ(kind_of([&] { svc_->components("KGX", "Nope", from, to, origin); }),
              static_cast<int>(ErrorKind::NotFound));
}

TEST_F(ServiceTest, HeatmapShape) {
    const auto h = svc_->heatmap("KGX", 50);
    EXPECT_EQ(h.cells.size(), 50u * 16u);
    EXPECT_EQ(h.days, 50);
    for (const auto& c : h.cells) {
        EXPECT_GE(hour_of_day(c.hour), 6);
        EXPECT_LE(hour_of_day(c.hour), 21);
        EXPECT_GT(c.hour, shared_workspace().cfg.origin());
    }
    const auto j = svc_->heatmap_json("KGX", 0);
    EXPECT_EQ(j.at("cells").size(), 800u);
    EXPECT_TRUE(j.at("cells")[0].contains("tuag_indicative"));
    EXPECT_THROW(svc_->heatmap("KGX", 400), Error);
}

TEST_F(ServiceTest, WhatIfEmptyAndDelta) {
    service::WhatIfRequest req{"KGX", 7, {}};
    const auto base = svc_->heatmap("KGX", 7);
    const auto same = svc_->whatif(req);
    EXPECT_TRUE(same.changes.empty());
    EXPECT_EQ(workforce::to_json(same.heatmap), workforce::to_json(base));

    // adding a large primary crew turns every cell of that hour green
    const auto hour = base.cells[3].hour;
    req.deltas.push_back({"KGX", hour, "PSA", 200});
    const auto r = svc_->whatif(req);
    for (const auto& c : r.heatmap.cells) {
        if (c.hour == hour) EXPECT_EQ(c.rag, workforce::Rag::Green);
    }
    if (base.cells[3].rag != workforce::Rag::Green) {
        ASSERT_EQ(r.changes.size(), 1u);
        EXPECT_EQ(r.changes[0].hour, hour);
    }
    req.deltas = {{"KGX", hour + Days{30}, "PSA", 1}};
    EXPECT_EQ(kind_of([&] { svc_->whatif(req); }), static_cast<int>(ErrorKind::Unprocessable));
}

TEST_F(ServiceTest, ParseWhatIf) {
    const auto ok = service::parse_whatif(
        {{"station", "KGX"}, {"deltas", {{{"hour", "2024-05-02T10:00:00Z"}, {"role", "PSA"}, {"change", 1}}}}});
    ASSERT_EQ(ok.deltas.size(), 1u);
    EXPECT_EQ(ok.deltas[0].hour, ts("2024-05-02T10:00:00Z"));
    const int unp = static_cast<int>(ErrorKind::Unprocessable);
    EXPECT_EQ(kind_of([] { service::parse_whatif(nlohmann::json::array()); }), unp);
    EXPECT_EQ(kind_of([] { service::parse_whatif({{"station", "KGX"}}); }), unp);
    EXPECT_EQ(kind_of([] {
                  service::parse_whatif({{"station", "KGX"},
                                         {"deltas", {{{"hour", "2024-05-02T10:30:00Z"}, {"role", "x"}, {"change", 1}}}}});
              }),
              unp);
    EXPECT_EQ(kind_of([] {
                  service::parse_whatif(
                      {{"station", "KGX"}, {"deltas", {{{"hour", "soon"}, {"role", "x"}, {"change", 1}}}}});
              }),
              unp);
}

TEST_F(ServiceTest, Diagnostics) {
    const auto d = svc_->diagnostics("BWK", "Long");
    EXPECT_GT(d.residuals.size(), 100u);
    EXPECT_EQ(d.qq.size(), d.residuals.size());
    std::size_t total = 0;
    for (auto c : d.histogram.counts) total += c;
    EXPECT_EQ(total, d.residuals.size());
    for (auto i : d.outliers) EXPECT_GT(std::fabs(d.residuals[i] - d.median), d.threshold);
    const auto j = svc_->diagnostics_json("BWK", "Long");
    EXPECT_EQ(j.at("n").get<std::size_t>(), d.residuals.size());
}

TEST_F(ServiceTest, ConcurrentReadsDuringModelSwap) {
    const auto origin = shared_workspace().cfg.span.end;
    const auto expected = svc_->forecast("BWK", origin, origin + Hours{1}, origin + Hours{48});
    const auto set = svc_->models();
    std::atomic<bool> stop{false};
    std::atomic<int> mismatches{0}, reads{0};
    std::thread reader([&] {
        while (!stop) {
            const auto got = svc_->forecast("BWK", origin, origin + Hours{1}, origin + Hours{48});
            for (std::size_t i = 0; i < got.size(); ++i) {
                if (got[i].yhat != expected[i].yhat) ++mismatches;
            }
            ++reads;
        }
    });
    for (int i = 0; i < 50; ++i) {
        svc_->install_models(std::make_shared<service::ModelSet>(*set));
        std::this_thread::yield();
    }
    svc_->reload_models();
    while (reads < 3) std::this_thread::yield();
    stop = true;
    reader.join();
    EXPECT_EQ(mismatches, 0);
}

TEST(ServiceUntrained, NotReadyUntilModelsExist) {
    testsupport::TempDir d("untrained");
    testsupport::write_json(d.path() / "c.json", testsupport::small_config({"BWK"}, "2023-06-01T00:00:00Z",
                                                                           "2023-09-01T00:00:00Z"));
    const auto cfg = config::load(d.path() / "c.json");
    synth::write_outputs(cfg.data_dir, synth::generate(cfg.synth));
    pipeline::run_ingest(cfg);
    service::ForecastService svc(cfg);
    EXPECT_FALSE(svc.ready());
    const auto o = cfg.span.end;
    EXPECT_EQ(kind_of([&] { svc.forecast("BWK", o, o + Hours{1}, o + Hours{2}); }),
              static_cast<int>(ErrorKind::NotReady));
    EXPECT_EQ(kind_of([&] { svc.reload_models(); }), static_cast<int>(ErrorKind::NotReady));
    EXPECT_EQ(kind_of([&] { service::ForecastService s2(config::load(d.path() / "missing.json")); }),
              static_cast<int>(ErrorKind::NotFound));
}
