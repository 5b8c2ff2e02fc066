#pragma once

// Independent reference implementations and fixtures shared by the tests.
// Oracles here are written from the definitions with plain loops and do not
// call into the library under test.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "paxcast/panel.hpp"
#include "paxcast/time.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline double oracle_mae(const std::vector<double>& y, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(y[i] - f[i]);
    return s / static_cast<double>(y.size());
}

inline double oracle_armse(const std::vector<double>& y, const std::vector<double>& f, double w) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = f[i] - y[i];
        s += (e < 0 ? w : 1.0) * e * e;
    }
    return std::sqrt(s / static_cast<double>(y.size()));
}

inline double oracle_coverage(const std::vector<double>& y, const std::vector<double>& f, double delta) {
    int hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += std::fabs(y[i] - f[i]) <= delta ? 1 : 0;
    return 100.0 * hit / static_cast<double>(y.size());
}

/// Bookings for (station, hour t) created no later than t - tau (and the origin, when given).
inline double oracle_cum(const std::vector<paxcast::panel::AssistanceEvent>& bookings, const std::string& station,
                         paxcast::Timestamp t, paxcast::Hours tau,
                         std::optional<paxcast::Timestamp> origin = std::nullopt) {
    int n = 0;
    for (const auto& b : bookings) {
        if (b.station != station) continue;
        if (std::chrono::floor<paxcast::Hours>(b.scheduled_time) != t) continue;
        if (b.booking_created > t - tau) continue;
        if (origin && b.booking_created > *origin) continue;
        ++n;
    }
    return n;
}

/// Least-squares coefficients of y on the columns of X via Householder QR.
inline Eigen::VectorXd oracle_lstsq(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    return X.colPivHouseholderQr().solve(y);
}

inline double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline double stddev(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// R^2 of a single-regressor OLS fit with intercept.
inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
    const double r = oracle_pearson(x, y);
    return r * r;
}

inline paxcast::Timestamp ts(const char* s) { return paxcast::parse_time(s); }

inline paxcast::panel::AssistanceEvent booking(const std::string& station, paxcast::Timestamp scheduled,
                                               paxcast::Timestamp created, const std::string& id = "J") {
    return {station, paxcast::panel::EventKind::Dep, scheduled, created, paxcast::panel::Channel::Prebooked, id};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("paxcast_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline void write_json(const fs::path& p, const nlohmann::json& j) {
    std::ofstream out(p);
    out << j.dump(2) << '\n';
}

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Config document for a small one-or-more-station synthetic run with a
/// reduced grid; `dir` receives data/ and work/.
inline nlohmann::json small_config(const std::vector<std::string>& stations, const char* start = "2023-01-01T00:00:00Z",
                                   const char* end = "2024-05-01T00:00:00Z") {
    nlohmann::json st = nlohmann::json::array();
    const nlohmann::json profiles = {
        {"KGX", {{"level", 2.6}, {"trend_per_year", 0.15}, {"daily_amplitude", 1.6}, {"weekly_amplitude", 0.25},
                 {"yearly_amplitude", 0.15}, {"holiday_uplift", 0.5}, {"rain_effect", -0.04},
                 {"temperature_effect", 0.005}, {"tuag_rate", 0.25}}},
        {"YRK", {{"level", 1.4}, {"trend_per_year", 0.10}, {"daily_amplitude", 1.4}, {"weekly_amplitude", 0.20},
                 {"yearly_amplitude", 0.20}, {"holiday_uplift", 0.5}, {"rain_effect", -0.05},
                 {"temperature_effect", 0.005}, {"tuag_rate", 0.20}}},
        {"BWK", {{"level", -1.2}, {"trend_per_year", 0.05}, {"daily_amplitude", 1.0}, {"weekly_amplitude", 0.20},
                 {"yearly_amplitude", 0.25}, {"holiday_uplift", 0.4}, {"rain_effect", -0.05},
                 {"temperature_effect", 0.0}, {"tuag_rate", 0.15}}},
    };
    for (const auto& s : stations) {
        auto p = profiles.at(s);
        p["code"] = s;
        st.push_back(p);
    }
    return {{"data_dir", "data"},
            {"work_dir", "work"},
            {"stations", stations},
            {"span", {{"start", start}, {"end", end}}},
            {"grid",
             {{"seasonality_scales", {10}}, {"holiday_scales", {10}}, {"modes", {"additive"}},
              {"validation_fraction", 0.2}}},
            {"synth", {{"seed", 11}, {"start", start}, {"end", end}, {"future_days", 60}, {"stations", st}}}};
}

}  // namespace testsupport
