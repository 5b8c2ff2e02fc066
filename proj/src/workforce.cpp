#include "paxcast/workforce.hpp"

#include <fstream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "paxcast/csv.hpp"
#include "paxcast/error.hpp"

namespace paxcast::workforce {

using nlohmann::json;

std::string to_string(RoleCategory c) {
    switch (c) {
        case RoleCategory::Primary: return "PRIMARY";
        case RoleCategory::Secondary: return "SECONDARY";
        case RoleCategory::Excluded: return "EXCLUDED";
    }
    return "?";
}

RoleCategory category_from_string(const std::string& s) {
    if (s == "PRIMARY") return RoleCategory::Primary;
    if (s == "SECONDARY") return RoleCategory::Secondary;
    if (s == "EXCLUDED") return RoleCategory::Excluded;
    fail("unknown role category '" + s + "'");
}

void RoleConfig::validate() const {
    if (role_code.empty()) fail("role without a code");
    if (category == RoleCategory::Secondary && !(alpha >= 0.0 && alpha <= 1.0)) {
        fail("secondary role " + role_code + " needs availability alpha in [0, 1]");
    }
}

RoleTable default_roles() {
    RoleTable t;
    for (RoleConfig r : {RoleConfig{"PSA", RoleCategory::Primary, 0.0}, RoleConfig{"SCSC", RoleCategory::Primary, 0.0},
                         RoleConfig{"SCSA", RoleCategory::Secondary, 0.30},
                         RoleConfig{"SSA", RoleCategory::Secondary, 0.30}, RoleConfig{"IC", RoleCategory::Excluded, 0.0},
                         RoleConfig{"DTL", RoleCategory::Excluded, 0.0}}) {
        t.emplace(r.role_code, r);
    }
    return t;
}

RoleTable roles_from_json(const json& j) {
    RoleTable t;
    for (const auto& r : j) {
        RoleConfig rc;
        rc.role_code = r.at("role_code").get<std::string>();
        rc.category = category_from_string(r.at("category").get<std::string>());
        if (rc.category == RoleCategory::Secondary) {
            if (!r.contains("alpha") || r.at("alpha").is_null()) fail("secondary role " + rc.role_code + " lacks alpha");
            rc.alpha = r.at("alpha").get<double>();
        }
        rc.validate();
        if (!t.emplace(rc.role_code, rc).second) fail("duplicate role '" + rc.role_code + "'");
    }
    return t;
}

json to_json(const RoleTable& roles) {
    json out = json::array();
    for (const auto& [code, r] : roles) {
        out.push_back({{"role_code", code},
                       {"category", to_string(r.category)},
                       {"alpha", r.category == RoleCategory::Secondary ? json(r.alpha) : json(nullptr)}});
    }
    return out;
}

void CapacityParams::validate() const {
    if (!(assists_per_hour > 0.0)) fail("A_h must be positive");
    if (!(margin >= 0.0 && margin < 1.0)) fail("operational margin must lie in [0, 1)");
}

double capacity_factor(const CapacityParams& params) {
    params.validate();
    return params.assists_per_hour * (1.0 - params.margin);
}

// ---------------------------------------------------------------------------
// Roster

void Roster::set(const std::string& station, Timestamp hour, const std::string& role, int headcount) {
    if (headcount < 0) fail("negative headcount for " + role + " at " + station + " " + format_time(hour));
    auto& cell = cells_[{station, floor_hour(hour)}];
    if (headcount == 0) cell.erase(role);
    else cell[role] = headcount;
}

int Roster::headcount(const std::string& station, Timestamp hour, const std::string& role) const {
    auto it = cells_.find({station, floor_hour(hour)});
    if (it == cells_.end()) return 0;
    auto r = it->second.find(role);
    return r == it->second.end() ? 0 : r->second;
}

const std::map<std::string, int>& Roster::at(const std::string& station, Timestamp hour) const {
    static const std::map<std::string, int> empty;
    auto it = cells_.find({station, floor_hour(hour)});
    return it == cells_.end() ? empty : it->second;
}

std::size_t Roster::entries() const {
    std::size_t n = 0;
    for (const auto& [k, v] : cells_) n += v.size();
    return n;
}

std::vector<std::string> Roster::stations() const {
    std::set<std::string> s;
    for (const auto& [k, v] : cells_) s.insert(k.first);
    return {s.begin(), s.end()};
}

Roster read_roster_csv(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    const auto c_station = table.column("station");
    const auto c_hour = table.column("hour_start");
    const auto c_role = table.column("role_code");
    const auto c_count = table.column("headcount");
    Roster r;
    for (const auto& row : table.rows) {
        int count = 0;
        try {
            count = std::stoi(row[c_count]);
        } catch (const std::exception&) {
            fail("invalid headcount '" + row[c_count] + "' in roster");
        }
        const auto hour = parse_time(row[c_hour]);
        r.set(row[c_station], hour, row[c_role], r.headcount(row[c_station], hour, row[c_role]) + count);
    }
    return r;
}

void write_roster_csv(const std::filesystem::path& path, const Roster& roster) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write '" + path.string() + "'");
    out << "station,hour_start,role_code,headcount\n";
    roster.for_each([&](const std::string& station, Timestamp hour, const std::string& role, int n) {
        csv::write_row(out, {station, format_time(hour), role, std::to_string(n)});
    });
}

// ---------------------------------------------------------------------------
// Capacity and classification

Capacity hourly_capacity(const Roster& roster, const RoleTable& roles, const CapacityParams& params,
                         const std::string& station, Timestamp hour) {
    const double cf = capacity_factor(params);
    Capacity c;
    for (const auto& [code, n] : roster.at(station, hour)) {
        auto it = roles.find(code);
        if (it == roles.end()) fail("unknown role code '" + code + "' rostered at " + station);
        switch (it->second.category) {
            case RoleCategory::Primary: c.primary += n * cf; break;
            case RoleCategory::Secondary: c.secondary += n * it->second.alpha * cf; break;
            case RoleCategory::Excluded: break;
        }
    }
    c.total = c.primary + c.secondary;
    return c;
}

std::string to_string(Rag r) {
    switch (r) {
        case Rag::Green: return "GREEN";
        case Rag::Amber: return "AMBER";
        case Rag::Red: return "RED";
    }
    return "?";
}

Rag rag_from_string(const std::string& s) {
    if (s == "GREEN") return Rag::Green;
    if (s == "AMBER") return Rag::Amber;
    if (s == "RED") return Rag::Red;
    fail("unknown RAG class '" + s + "'");
}

Rag classify_rag(double yhat, double c_primary, double c_total) {
    if (!(yhat >= 0.0)) fail("forecast demand must be non-negative");
    if (c_primary > c_total) fail("primary capacity exceeds total capacity");
    if (yhat <= c_primary) return Rag::Green;
    if (yhat <= c_total) return Rag::Amber;
    return Rag::Red;
}

RagHeatmap build_heatmap(const HeatmapInputs& in) {
    if (in.days <= 0) fail("heatmap needs at least one day");
    if (in.display.first < 0 || in.display.last > 23 || in.display.first > in.display.last) {
        fail("display hours must satisfy 0 <= first <= last <= 23");
    }
    RagHeatmap h;
    h.station = in.station;
    h.first_day = in.first_day;
    h.days = in.days;
    h.display = in.display;
    std::vector<std::string> missing;
    for (int d = 0; d < in.days; ++d) {
        for (int hr = in.display.first; hr <= in.display.last; ++hr) {
            const Timestamp t = Timestamp{in.first_day + Days{d}} + Hours{hr};
            auto it = in.forecast.find(t);
            if (it == in.forecast.end()) {
                missing.push_back(format_time(t));
                continue;
            }
            const auto cap = hourly_capacity(in.roster, in.roles, in.params, in.station, t);
            h.cells.push_back({t, it->second, cap, classify_rag(it->second, cap.primary, cap.total)});
        }
    }
    if (!missing.empty()) {
        std::string msg = "forecast for " + in.station + " is missing " + std::to_string(missing.size()) + " hour(s):";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
        if (missing.size() > 10) msg += " ...";
        fail(msg);
    }
    return h;
}

WhatIfResult whatif(const HeatmapInputs& inputs, const RagHeatmap& baseline, std::span<const RosterDelta> deltas) {
    HeatmapInputs modified = inputs;
    for (const auto& d : deltas) {
        if (d.station != inputs.station) {
            throw Error(ErrorKind::Unprocessable, "delta targets station " + d.station + ", heatmap is " + inputs.station);
        }
        if (!inputs.roles.contains(d.role)) throw Error(ErrorKind::Unprocessable, "unknown role code '" + d.role + "'");
        const int now = modified.roster.headcount(d.station, d.hour, d.role) + d.change;
        if (now < 0) {
            throw Error(ErrorKind::Unprocessable, "delta drives " + d.role + " at " + format_time(d.hour) +
                                                      " to a negative headcount");
        }
        modified.roster.set(d.station, d.hour, d.role, now);
    }
    WhatIfResult out;
    out.heatmap = build_heatmap(modified);
    std::map<Timestamp, Rag> before;
    for (const auto& c : baseline.cells) before[c.hour] = c.rag;
    for (const auto& c : out.heatmap.cells) {
        auto it = before.find(c.hour);
        if (it != before.end() && it->second != c.rag) out.changes.push_back({c.hour, it->second, c.rag});
    }
    return out;
}

json to_json(const RagHeatmap& h) {
    json cells = json::array();
    for (const auto& c : h.cells) {
        cells.push_back({{"hour", format_time(c.hour)},
                         {"yhat", c.yhat},
                         {"c_p", c.capacity.primary},
                         {"c_s", c.capacity.secondary},
                         {"c_total", c.capacity.total},
                         {"rag", to_string(c.rag)}});
    }
    return {{"station", h.station},
            {"first_day", format_date(h.first_day)},
            {"days", h.days},
            {"display_hours", {{"first", h.display.first}, {"last", h.display.last}}},
            {"cells", cells}};
}

RagHeatmap heatmap_from_json(const json& j) {
    RagHeatmap h;
    h.station = j.at("station").get<std::string>();
    h.first_day = floor_day(parse_time(j.at("first_day").get<std::string>()));
    h.days = j.at("days").get<int>();
    h.display = {j.at("display_hours").at("first").get<int>(), j.at("display_hours").at("last").get<int>()};
    for (const auto& c : j.at("cells")) {
        HeatmapCell cell;
        cell.hour = parse_time(c.at("hour").get<std::string>());
        cell.yhat = c.at("yhat").get<double>();
        cell.capacity = {c.at("c_p").get<double>(), c.at("c_s").get<double>(), c.at("c_total").get<double>()};
        cell.rag = rag_from_string(c.at("rag").get<std::string>());
        h.cells.push_back(cell);
    }
    return h;
}

void write_heatmap_csv(std::ostream& out, const RagHeatmap& h) {
    out << "station,hour,yhat,c_p,c_s,c_total,rag\n";
    for (const auto& c : h.cells) {
        csv::write_row(out, {h.station, format_time(c.hour), csv::format_double(c.yhat),
                             csv::format_double(c.capacity.primary), csv::format_double(c.capacity.secondary),
                             csv::format_double(c.capacity.total), to_string(c.rag)});
    }
}

}  // namespace paxcast::workforce
