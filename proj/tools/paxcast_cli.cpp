// paxcast command-line interface.
//
//   paxcast --config cfg.json synth | ingest | train | evaluate
//   paxcast --config cfg.json forecast --origin T --from T --to T [--station S] [--out F]
//   paxcast --config cfg.json heatmap --days N [--station S]
//   paxcast --config cfg.json serve [--port P]
//
// Success exits 0. Failures print one JSON line {"error":{kind,message}} on
// stderr and exit non-zero; usage errors exit 2.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "paxcast/config.hpp"
#include "paxcast/error.hpp"
#include "paxcast/http.hpp"
#include "paxcast/kernels.hpp"
#include "paxcast/pipeline.hpp"
#include "paxcast/service.hpp"
#include "paxcast/synth.hpp"

using namespace paxcast;
using nlohmann::json;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidInput: return 3;
        case ErrorKind::NotFound: return 4;
        case ErrorKind::Unprocessable: return 5;
        case ErrorKind::NotReady: return 6;
        case ErrorKind::Internal: return 7;
    }
    return 1;
}

std::string kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidInput: return "invalid_input";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Unprocessable: return "unprocessable";
        case ErrorKind::NotReady: return "not_ready";
        case ErrorKind::Internal: return "internal";
    }
    return "internal";
}

int report(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << std::endl;
    return code;
}

std::vector<std::string> pick_stations(const config::AppConfig& cfg, const std::string& only) {
    if (only.empty()) return cfg.stations;
    if (std::find(cfg.stations.begin(), cfg.stations.end(), only) == cfg.stations.end()) {
        throw Error(ErrorKind::NotFound, "unknown station '" + only + "'");
    }
    return {only};
}

http::Server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Horizon-aware passenger-assistance demand forecasting and RAG workforce planning"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "Path to the JSON config")->required();

    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic events, weather, roster and truth");
    auto* ingest_cmd = app.add_subcommand("ingest", "Build the station-hour panel");
    auto* train_cmd = app.add_subcommand("train", "Grid-search and fit every station x bucket model");

    auto* forecast_cmd = app.add_subcommand("forecast", "Write an hourly forecast trajectory");
    std::string origin_s, from_s, to_s, station, out_path;
    forecast_cmd->add_option("--origin", origin_s, "Forecast origin (ISO-8601 UTC)")->required();
    forecast_cmd->add_option("--from", from_s, "First forecast hour")->required();
    forecast_cmd->add_option("--to", to_s, "Last forecast hour (inclusive)")->required();
    forecast_cmd->add_option("--station", station, "Only this station");
    forecast_cmd->add_option("--out", out_path, "Write CSV here instead of stdout");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score bucket models and the YoY baseline on TEST rows");
    eval_cmd->add_option("--out", out_path, "Also write the report here");

    auto* heatmap_cmd = app.add_subcommand("heatmap", "Export RAG heatmaps from the planning origin");
    int days = service::ForecastService::kDefaultDays;
    heatmap_cmd->add_option("--days", days, "Number of days")->check(CLI::Range(1, 366));
    heatmap_cmd->add_option("--station", station, "Only this station");

    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    std::optional<int> port;
    std::string host = "0.0.0.0";
    serve_cmd->add_option("--port", port, "Port (PORT env var overrides the config default)");
    serve_cmd->add_option("--host", host, "Bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << std::flush;
        return report("usage", e.what(), 2);
    }

    try {
        const auto cfg = config::load(config_path);

        if (*synth_cmd) {
            const auto out = synth::generate(cfg.synth);
            synth::write_outputs(cfg.data_dir, out);
            std::size_t pre = 0;
            for (const auto& e : out.events) pre += e.channel == panel::Channel::Prebooked ? 1 : 0;
            std::cout << json{{"data_dir", cfg.data_dir.string()},
                              {"events", out.events.size()},
                              {"prebooked", pre},
                              {"weather_rows", out.weather.size()},
                              {"roster_entries", out.roster.entries()},
                              {"truth_rows", out.truth.rows.size()}}
                             .dump()
                      << '\n';
        } else if (*ingest_cmd) {
            const auto s = pipeline::run_ingest(cfg);
            std::cout << json{{"records", s.records},
                              {"prebooked", s.prebooked},
                              {"tuag", s.tuag},
                              {"rejected", s.rejected},
                              {"data_hash", s.data_hash},
                              {"work_dir", cfg.work_dir.string()}}
                             .dump()
                      << '\n';
        } else if (*train_cmd) {
            const auto s = pipeline::run_train(cfg);
            json out = json::object();
            for (const auto& [st, t] : s.stations) {
                for (const auto& [bucket, g] : t.grids) {
                    out[st][bucket] = {{"mode", gam::to_string(g.best.mode)},
                                       {"seasonality_scale", g.best.penalties.seasonality},
                                       {"holidays_scale", g.best.penalties.holidays},
                                       {"validation_armse", g.table[g.best_index].armse}};
                }
            }
            std::cout << json{{"kernels", std::string(kernels::isa_name(kernels::active().isa))}, {"models", out}}.dump()
                      << '\n';
        } else if (*forecast_cmd) {
            const Timestamp origin = parse_time(origin_s), from = parse_time(from_s), to = parse_time(to_s);
            service::ForecastService svc(cfg);
            std::vector<horizon::TrajectoryRow> rows;
            for (const auto& st : pick_stations(cfg, station)) {
                auto r = svc.forecast(st, origin, from, to);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            if (out_path.empty()) {
                horizon::write_trajectory_csv(std::cout, rows);
            } else {
                std::ofstream out(out_path);
                if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + out_path + "'");
                horizon::write_trajectory_csv(out, rows);
            }
        } else if (*eval_cmd) {
            const auto report = pipeline::run_evaluate(cfg);
            if (!out_path.empty()) report.write_csv(std::filesystem::path(out_path));
            report.write_csv(std::cout);
        } else if (*heatmap_cmd) {
            service::ForecastService svc(cfg);
            json summary = json::array();
            for (const auto& st : pick_stations(cfg, station)) {
                const auto h = svc.heatmap(st, days);
                std::filesystem::create_directories(cfg.work_dir);
                {
                    std::ofstream out(cfg.work_dir / ("heatmap_" + st + ".json"));
                    out << svc.heatmap_json(st, days).dump() << '\n';
                }
                {
                    std::ofstream out(cfg.work_dir / ("heatmap_" + st + ".csv"));
                    workforce::write_heatmap_csv(out, h);
                }
                std::size_t n[3] = {0, 0, 0};
                for (const auto& c : h.cells) ++n[static_cast<int>(c.rag)];
                summary.push_back({{"station", st},
                                   {"cells", h.cells.size()},
                                   {"green", n[0]},
                                   {"amber", n[1]},
                                   {"red", n[2]}});
            }
            std::cout << json{{"heatmaps", summary}}.dump() << '\n';
        } else if (*serve_cmd) {
            service::ForecastService svc(cfg);
            http::Server server(svc);
            const int p = port ? *port : http::port_from_env(cfg.port);
            const int bound = server.bind(host, p);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << json{{"listening", host + ":" + std::to_string(bound)}, {"ready", svc.ready()}}.dump()
                      << std::endl;
            server.serve();
            g_server = nullptr;
        }
    } catch (const Error& e) {
        return report(kind_name(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
    return 0;
}
