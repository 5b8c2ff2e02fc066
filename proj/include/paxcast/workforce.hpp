#pragma once

// Forecast-to-capacity mapping and hourly Red/Amber/Green classification.

#include <chrono>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "paxcast/time.hpp"

namespace paxcast::workforce {

enum class RoleCategory { Primary, Secondary, Excluded };

std::string to_string(RoleCategory c);
RoleCategory category_from_string(const std::string& s);

struct RoleConfig {
    std::string role_code;
    RoleCategory category = RoleCategory::Primary;
    double alpha = 0.0;  // availability, SECONDARY only

    void validate() const;
};

using RoleTable = std::map<std::string, RoleConfig>;

/// PSA and SCSC primary; SCSA and SSA secondary at alpha 0.30; information
/// controllers (IC) and duty team leaders (DTL) excluded.
RoleTable default_roles();
RoleTable roles_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RoleTable& roles);

struct CapacityParams {
    double assists_per_hour = 4.0;  // A_h
    double margin = 0.10;           // M

    void validate() const;
};

/// Safe assists per hour for one fully available staff member: A_h (1 - M).
double capacity_factor(const CapacityParams& params);

/// Headcounts per (station, hour, role). Absent entries are zero.
class Roster {
public:
    void set(const std::string& station, Timestamp hour, const std::string& role, int headcount);
    int headcount(const std::string& station, Timestamp hour, const std::string& role) const;
    /// Role -> headcount at one station-hour (only non-zero entries).
    const std::map<std::string, int>& at(const std::string& station, Timestamp hour) const;
    std::size_t entries() const;
    std::vector<std::string> stations() const;

    /// Visits (station, hour, role, headcount) in (station, hour, role) order.
    template <class F>
    void for_each(F&& f) const {
        for (const auto& [key, roles] : cells_) {
            for (const auto& [role, n] : roles) f(key.first, key.second, role, n);
        }
    }

private:
    std::map<std::pair<std::string, Timestamp>, std::map<std::string, int>> cells_;
};

Roster read_roster_csv(const std::filesystem::path& path);
void write_roster_csv(const std::filesystem::path& path, const Roster& roster);

struct Capacity {
    double primary = 0.0;    // C_P
    double secondary = 0.0;  // C_S
    double total = 0.0;      // C_P + C_S
};

/// Throws when a rostered role has no RoleConfig.
Capacity hourly_capacity(const Roster& roster, const RoleTable& roles, const CapacityParams& params,
                         const std::string& station, Timestamp hour);

enum class Rag { Green, Amber, Red };

std::string to_string(Rag r);
Rag rag_from_string(const std::string& s);

/// GREEN iff yhat <= C_P, AMBER iff C_P < yhat <= C_total, RED otherwise.
Rag classify_rag(double yhat, double c_primary, double c_total);

struct HeatmapCell {
    Timestamp hour;
    double yhat = 0.0;
    Capacity capacity;
    Rag rag = Rag::Green;
};

/// Inclusive range of hours of day shown on the grid.
struct DisplayHours {
    int first = 6;
    int last = 21;

    int count() const { return last - first + 1; }
};

struct RagHeatmap {
    std::string station;
    std::chrono::sys_days first_day;
    int days = 0;
    DisplayHours display;
    std::vector<HeatmapCell> cells;  // day-major, then hour of day
};

struct HeatmapInputs {
    std::string station;
    std::map<Timestamp, double> forecast;  // hourly yhat
    Roster roster;
    RoleTable roles;
    CapacityParams params;
    std::chrono::sys_days first_day;
    int days = 0;
    DisplayHours display;
};

/// Classifies every display hour in [first_day, first_day + days). Throws
/// listing any hours the forecast does not cover.
RagHeatmap build_heatmap(const HeatmapInputs& inputs);

struct RosterDelta {
    std::string station;
    Timestamp hour;
    std::string role;
    int change = 0;
};

struct CellChange {
    Timestamp hour;
    Rag before = Rag::Green;
    Rag after = Rag::Green;
};

struct WhatIfResult {
    RagHeatmap heatmap;
    std::vector<CellChange> changes;
};

/// Re-evaluates the heatmap under `inputs.roster` plus `deltas`. Neither the
/// inputs nor `baseline` are modified.
WhatIfResult whatif(const HeatmapInputs& inputs, const RagHeatmap& baseline, std::span<const RosterDelta> deltas);

nlohmann::json to_json(const RagHeatmap& heatmap);
RagHeatmap heatmap_from_json(const nlohmann::json& j);
void write_heatmap_csv(std::ostream& out, const RagHeatmap& heatmap);

}  // namespace paxcast::workforce
