#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "paxcast/service.hpp"
#include "paxcast/workforce.hpp"
#include "support.hpp"

using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const testsupport::fs::path& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const std::string cmd = std::string(PAXCAST_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = testsupport::read_text(out);
    return r;
}

std::size_t count_lines(const std::string& s) {
    std::istringstream in(s);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += line.empty() ? 0 : 1;
    return n;
}

}  // namespace

TEST(Cli, EndToEnd) {
    testsupport::TempDir d("cli");
    const auto cfg_path = d.path() / "config.json";
    testsupport::write_json(cfg_path, testsupport::small_config({"KGX", "YRK", "BWK"}));
    const std::string c = "--config " + cfg_path.string();

    auto r = run(d.path(), c + " synth");
    ASSERT_EQ(r.code, 0) << testsupport::read_text(d.path() / "stderr.txt");
    EXPECT_GT(json::parse(r.out).at("events").get<int>(), 0);

    r = run(d.path(), c + " ingest");
    ASSERT_EQ(r.code, 0) << testsupport::read_text(d.path() / "stderr.txt");
    EXPECT_EQ(json::parse(r.out).at("rejected").get<int>(), 0);

    r = run(d.path(), c + " train");
    ASSERT_EQ(r.code, 0) << testsupport::read_text(d.path() / "stderr.txt");
    const auto trained = json::parse(r.out);
    EXPECT_EQ(trained.at("models").size(), 3u);
    EXPECT_EQ(trained.at("models").at("YRK").size(), 5u);

    r = run(d.path(), c + " evaluate --out " + (d.path() / "eval.csv").string());
    ASSERT_EQ(r.code, 0) << testsupport::read_text(d.path() / "stderr.txt");
    EXPECT_EQ(count_lines(r.out), 1u + 3 * 6 * 2);
    EXPECT_EQ(testsupport::read_text(d.path() / "eval.csv"), r.out);

    r = run(d.path(), c + " forecast --origin 2024-05-01T00:00:00Z --from 2024-05-01T01:00:00Z --to "
                          "2024-05-03T00:00:00Z --station YRK");
    ASSERT_EQ(r.code, 0) << testsupport::read_text(d.path() / "stderr.txt");
    EXPECT_EQ(count_lines(r.out), 1u + 48);

    r = run(d.path(), c + " heatmap --days 50");
    ASSERT_EQ(r.code, 0) << testsupport::read_text(d.path() / "stderr.txt");
    for (const auto& h : json::parse(r.out).at("heatmaps")) EXPECT_EQ(h.at("cells").get<int>(), 800);

    // CLI export and the service agree cell for cell
    const auto cfg = paxcast::config::load(cfg_path);
    paxcast::service::ForecastService svc(cfg);
    const auto exported = json::parse(testsupport::read_text(cfg.work_dir / "heatmap_KGX.json"));
    EXPECT_EQ(exported, svc.heatmap_json("KGX", 50));
    EXPECT_EQ(count_lines(testsupport::read_text(cfg.work_dir / "heatmap_KGX.csv")), 801u);
}

TEST(Cli, ExitCodes) {
    testsupport::TempDir d("cli_codes");
    EXPECT_EQ(run(d.path(), "").code, 2);
    EXPECT_EQ(run(d.path(), "--config x.json bogus").code, 2);
    EXPECT_EQ(run(d.path(), "--config " + (d.path() / "missing.json").string() + " ingest").code, 4);

    auto j = testsupport::small_config({"BWK"});
    j["planning"] = {{"origin", "2030-01-01T00:00:00Z"}};
    testsupport::write_json(d.path() / "late.json", j);
    EXPECT_EQ(run(d.path(), "--config " + (d.path() / "late.json").string() + " heatmap").code, 3);

    testsupport::write_json(d.path() / "ok.json", testsupport::small_config({"BWK"}));
    EXPECT_EQ(run(d.path(), "--config " + (d.path() / "ok.json").string() + " ingest").code, 4);
    const auto err = testsupport::read_text(d.path() / "stderr.txt");
    EXPECT_NE(err.find("not found"), std::string::npos);
}
