#include "gridsurrogate/grid.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridsurrogate/common.hpp"

namespace gs {

using json = nlohmann::ordered_json;

std::string to_string(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::Pv: return "pv";
        case BusKind::Pq: return "pq";
    }
    return "?";
}

std::string to_string(InjectorKind k) {
    switch (k) {
        case InjectorKind::Load: return "load";
        case InjectorKind::Res: return "res";
        case InjectorKind::Conventional: return "conventional";
    }
    return "?";
}

BusKind bus_kind_from_string(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "pv") return BusKind::Pv;
    if (s == "pq") return BusKind::Pq;
    throw ParseError("unknown bus kind \"" + s + "\"");
}

InjectorKind injector_kind_from_string(const std::string& s) {
    if (s == "load") return InjectorKind::Load;
    if (s == "res") return InjectorKind::Res;
    if (s == "conventional") return InjectorKind::Conventional;
    throw ParseError("unknown injector kind \"" + s + "\"");
}

Grid::Grid(double base_mva, double base_kv, std::vector<Bus> buses,
           std::vector<Line> lines, std::vector<Injector> loads,
           std::vector<Injector> generators, OperatingLimits limits)
    : base_mva_(base_mva),
      base_kv_(base_kv),
      buses_(std::move(buses)),
      lines_(std::move(lines)),
      loads_(std::move(loads)),
      generators_(std::move(generators)),
      limits_(limits) {
    for (int i = 0; i < n_bus(); ++i) {
        if (!bus_index_.emplace(buses_[i].id, i).second)
            throw ValidationError("duplicate bus id \"" + buses_[i].id + "\"");
        if (buses_[i].kind == BusKind::Slack) {
            if (slack_index_ >= 0)
                throw ValidationError("more than one slack bus (\"" +
                                      buses_[slack_index_].id + "\" and \"" +
                                      buses_[i].id + "\")");
            slack_index_ = i;
        }
    }
    for (int i = 0; i < n_line(); ++i) {
        if (!line_index_.emplace(lines_[i].id, i).second)
            throw ValidationError("duplicate line id \"" + lines_[i].id + "\"");
    }
    validate();
}

void Grid::validate() const {
    if (base_mva_ <= 0.0 || base_kv_ <= 0.0)
        throw ValidationError("base_mva and base_kv must be positive");
    if (slack_index_ < 0) throw ValidationError("grid has no slack bus");
    for (const Bus& b : buses_) {
        const double lo = b.vm_min.value_or(limits_.vm_min);
        const double hi = b.vm_max.value_or(limits_.vm_max);
        if (!(lo < hi))
            throw ValidationError("bus \"" + b.id + "\": vm_min must be < vm_max");
        if (b.kind != BusKind::Pq) {
            if (!b.vm_setpoint)
                throw ValidationError("bus \"" + b.id +
                                      "\" is " + to_string(b.kind) +
                                      " and needs a vm_setpoint");
            if (*b.vm_setpoint < lo || *b.vm_setpoint > hi)
                throw ValidationError("bus \"" + b.id +
                                      "\": vm_setpoint outside [vm_min, vm_max]");
        }
    }
    for (const Line& l : lines_) {
        for (const std::string* end : {&l.from_bus, &l.to_bus}) {
            if (!bus_index_.count(*end))
                throw ValidationError("line \"" + l.id +
                                      "\" references unknown bus \"" + *end + "\"");
        }
        if (l.from_bus == l.to_bus)
            throw ValidationError("line \"" + l.id + "\": from_bus equals to_bus");
        if (l.r_pu == 0.0 && l.x_pu == 0.0)
            throw ValidationError("line \"" + l.id + "\": zero series impedance");
        if (l.b_pu < 0.0)
            throw ValidationError("line \"" + l.id + "\": negative shunt susceptance");
        if (!(l.i_rated_ka > 0.0))
            throw ValidationError("line \"" + l.id + "\": i_rated must be > 0");
    }
    for (const Injector& g : generators_) {
        if (!bus_index_.count(g.bus))
            throw ValidationError("generator \"" + g.id +
                                  "\" references unknown bus \"" + g.bus + "\"");
        if (!(g.p_max_mw > 0.0))
            throw ValidationError("generator \"" + g.id + "\": p_max must be > 0");
    }
    for (const Injector& l : loads_) {
        if (!bus_index_.count(l.bus))
            throw ValidationError("load \"" + l.id +
                                  "\" references unknown bus \"" + l.bus + "\"");
    }
    if (!(limits_.i_limit_pct > 0.0 && limits_.i_limit_pct <= 200.0))
        throw ValidationError("limits: i_limit_pct must be in (0, 200]");
    if (!connected_without(-1))
        throw ValidationError("grid graph is not connected in the base topology");
}

double Grid::base_ka() const { return base_mva_ / (std::sqrt(3.0) * base_kv_); }

int Grid::bus_index(const std::string& id) const {
    auto it = bus_index_.find(id);
    if (it == bus_index_.end())
        throw ValidationError("unknown bus id \"" + id + "\"");
    return it->second;
}

int Grid::line_index(const std::string& id) const {
    auto it = line_index_.find(id);
    if (it == line_index_.end())
        throw ValidationError("unknown line id \"" + id + "\"");
    return it->second;
}

double Grid::bus_vm_min(int bus) const {
    return buses_[bus].vm_min.value_or(limits_.vm_min);
}

double Grid::bus_vm_max(int bus) const {
    return buses_[bus].vm_max.value_or(limits_.vm_max);
}

bool Grid::connected_without(int without_line) const {
    if (n_bus() == 0) return true;
    std::vector<std::vector<int>> adj(n_bus());
    for (int i = 0; i < n_line(); ++i) {
        if (i == without_line) continue;
        const int f = bus_index_.at(lines_[i].from_bus);
        const int t = bus_index_.at(lines_[i].to_bus);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    std::vector<char> seen(n_bus(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                q.push(v);
            }
        }
    }
    return count == n_bus();
}

namespace {

json bus_to_json(const Bus& b) {
    json j;
    j["id"] = b.id;
    j["kind"] = to_string(b.kind);
    if (b.vm_setpoint) j["vm_setpoint"] = *b.vm_setpoint;
    if (b.vm_min) j["vm_min"] = *b.vm_min;
    if (b.vm_max) j["vm_max"] = *b.vm_max;
    return j;
}

json line_to_json(const Line& l) {
    return json{{"id", l.id},     {"from_bus", l.from_bus}, {"to_bus", l.to_bus},
                {"r_pu", l.r_pu}, {"x_pu", l.x_pu},         {"b_pu", l.b_pu},
                {"i_rated", l.i_rated_ka}};
}

json injector_to_json(const Injector& inj) {
    return json{{"id", inj.id},
                {"bus", inj.bus},
                {"kind", to_string(inj.kind)},
                {"p_max", inj.p_max_mw},
                {"profile_id", inj.profile_id}};
}

Bus bus_from_json(const json& j) {
    Bus b;
    b.id = j.at("id").get<std::string>();
    b.kind = bus_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("vm_setpoint")) b.vm_setpoint = j.at("vm_setpoint").get<double>();
    if (j.contains("vm_min")) b.vm_min = j.at("vm_min").get<double>();
    if (j.contains("vm_max")) b.vm_max = j.at("vm_max").get<double>();
    return b;
}

Line line_from_json(const json& j) {
    Line l;
    l.id = j.at("id").get<std::string>();
    l.from_bus = j.at("from_bus").get<std::string>();
    l.to_bus = j.at("to_bus").get<std::string>();
    l.r_pu = j.at("r_pu").get<double>();
    l.x_pu = j.at("x_pu").get<double>();
    l.b_pu = j.value("b_pu", 0.0);
    l.i_rated_ka = j.at("i_rated").get<double>();
    return l;
}

Injector injector_from_json(const json& j) {
    Injector inj;
    inj.id = j.at("id").get<std::string>();
    inj.bus = j.at("bus").get<std::string>();
    inj.kind = injector_kind_from_string(j.at("kind").get<std::string>());
    inj.p_max_mw = j.value("p_max", 0.0);
    inj.profile_id = j.value("profile_id", std::string{});
    return inj;
}

}  // namespace

std::string Grid::to_json_string() const {
    json j;
    j["base_mva"] = base_mva_;
    j["base_kv"] = base_kv_;
    j["buses"] = json::array();
    for (const Bus& b : buses_) j["buses"].push_back(bus_to_json(b));
    j["lines"] = json::array();
    for (const Line& l : lines_) j["lines"].push_back(line_to_json(l));
    j["loads"] = json::array();
    for (const Injector& inj : loads_) j["loads"].push_back(injector_to_json(inj));
    j["generators"] = json::array();
    for (const Injector& inj : generators_)
        j["generators"].push_back(injector_to_json(inj));
    j["limits"] = json{{"i_limit_pct", limits_.i_limit_pct},
                       {"vm_min", limits_.vm_min},
                       {"vm_max", limits_.vm_max}};
    return j.dump(2);
}

Grid grid_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("grid file: ") + e.what());
    }
    try {
        std::vector<Bus> buses;
        for (const json& b : j.at("buses")) buses.push_back(bus_from_json(b));
        std::vector<Line> lines;
        for (const json& l : j.at("lines")) lines.push_back(line_from_json(l));
        std::vector<Injector> loads;
        for (const json& inj : j.value("loads", json::array()))
            loads.push_back(injector_from_json(inj));
        std::vector<Injector> generators;
        for (const json& inj : j.value("generators", json::array()))
            generators.push_back(injector_from_json(inj));
        OperatingLimits limits;
        if (j.contains("limits")) {
            const json& jl = j.at("limits");
            limits.i_limit_pct = jl.value("i_limit_pct", limits.i_limit_pct);
            limits.vm_min = jl.value("vm_min", limits.vm_min);
            limits.vm_max = jl.value("vm_max", limits.vm_max);
        }
        return Grid(j.at("base_mva").get<double>(), j.at("base_kv").get<double>(),
                    std::move(buses), std::move(lines), std::move(loads),
                    std::move(generators), limits);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("grid file: ") + e.what());
    }
}

Grid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open grid file \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return grid_from_json_string(ss.str());
}

AdmittanceMatrix build_admittance(const Grid& grid,
                                  const std::optional<std::string>& outage) {
    int skip = -1;
    if (outage) skip = grid.line_index(*outage);

    std::vector<Eigen::Triplet<std::complex<double>>> trip;
    trip.reserve(grid.n_line() * 4);
    for (int i = 0; i < grid.n_line(); ++i) {
        if (i == skip) continue;
        const Line& l = grid.lines()[i];
        const int f = grid.bus_index(l.from_bus);
        const int t = grid.bus_index(l.to_bus);
        const std::complex<double> ys =
            1.0 / std::complex<double>(l.r_pu, l.x_pu);
        const std::complex<double> ysh(0.0, l.b_pu / 2.0);
        trip.emplace_back(f, f, ys + ysh);
        trip.emplace_back(t, t, ys + ysh);
        trip.emplace_back(f, t, -ys);
        trip.emplace_back(t, f, -ys);
    }
    AdmittanceMatrix m;
    m.y.resize(grid.n_bus(), grid.n_bus());
    m.y.setFromTriplets(trip.begin(), trip.end());
    m.outage = outage;
    return m;
}

TimeSeries::TimeSeries(int step_count, int resolution_min, double base_mva,
                       std::map<std::string, Column> columns)
    : step_count_(step_count),
      resolution_min_(resolution_min),
      base_mva_(base_mva),
      columns_(std::move(columns)) {
    for (const auto& [id, col] : columns_) {
        if (static_cast<int>(col.p.size()) != step_count_ ||
            static_cast<int>(col.q.size()) != step_count_)
            throw ValidationError("time series column \"" + id +
                                  "\" length does not match step count");
    }
}

const TimeSeries::Column& TimeSeries::column(const std::string& profile_id) const {
    auto it = columns_.find(profile_id);
    if (it == columns_.end())
        throw ValidationError("missing time series column for profile \"" +
                              profile_id + "\"");
    return it->second;
}

bool TimeSeries::has_column(const std::string& profile_id) const {
    return columns_.count(profile_id) > 0;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& cell, int row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
            ++pos;
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError("time series row " + std::to_string(row) +
                         ": non-numeric cell \"" + cell + "\"");
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

TimeSeries time_series_from_csv_string(const std::string& text, const Grid& grid) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw ParseError("time series: empty file");
    const std::vector<std::string> names = split_csv_line(header);
    if (names.empty() || names[0] != "step")
        throw ParseError("time series: first header column must be \"step\"");

    // column index per profile; 0 = unset (column 0 is always "step")
    std::map<std::string, std::pair<int, int>> profile_cols;
    for (std::size_t i = 1; i < names.size(); ++i) {
        const std::string& n = names[i];
        int* slot = nullptr;
        if (n.size() > 2 && n.ends_with("_p"))
            slot = &profile_cols[n.substr(0, n.size() - 2)].first;
        else if (n.size() > 2 && n.ends_with("_q"))
            slot = &profile_cols[n.substr(0, n.size() - 2)].second;
        else
            throw ParseError("time series: column \"" + n +
                             "\" is neither <profile>_p nor <profile>_q");
        if (*slot != 0)
            throw ParseError("time series: duplicate column \"" + n + "\"");
        *slot = static_cast<int>(i);
    }
    for (auto& [id, pq] : profile_cols) {
        if (pq.first == 0 || pq.second == 0)
            throw ParseError("time series: profile \"" + id +
                             "\" needs both _p and _q columns");
    }
    auto require_profile = [&](const Injector& inj) {
        if (!inj.profile_id.empty() && !profile_cols.count(inj.profile_id))
            throw ParseError("time series: missing column for profile \"" +
                             inj.profile_id + "\"");
    };
    for (const Injector& inj : grid.loads()) require_profile(inj);
    for (const Injector& inj : grid.generators()) require_profile(inj);

    std::map<std::string, TimeSeries::Column> columns;
    for (const auto& [id, pq] : profile_cols) columns[id] = {};

    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != names.size())
            throw ParseError("time series row " + std::to_string(row) +
                             ": expected " + std::to_string(names.size()) +
                             " cells, got " + std::to_string(cells.size()));
        for (const auto& [id, pq] : profile_cols) {
            columns[id].p.push_back(parse_number(cells[pq.first], row) /
                                    grid.base_mva());
            columns[id].q.push_back(parse_number(cells[pq.second], row) /
                                    grid.base_mva());
        }
    }
    if (row == 0) throw ParseError("time series: no data rows");
    return TimeSeries(row, 15, grid.base_mva(), std::move(columns));
}

TimeSeries load_time_series(const std::string& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open time series file \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return time_series_from_csv_string(ss.str(), grid);
}

std::string TimeSeries::to_csv_string() const {
    std::ostringstream out;
    out << "step";
    for (const auto& [id, col] : columns_) out << "," << id << "_p," << id << "_q";
    out << "\n";
    for (int t = 0; t < step_count_; ++t) {
        out << t;
        for (const auto& [id, col] : columns_)
            out << "," << format_double(col.p[t] * base_mva_) << ","
                << format_double(col.q[t] * base_mva_);
        out << "\n";
    }
    return out.str();
}

void TimeSeries::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << to_csv_string();
}

Eigen::VectorXcd aggregate_bus_injections(const Grid& grid, const TimeSeries& ts,
                                          int step) {
    if (step < 0 || step >= ts.step_count())
        throw std::out_of_range("step " + std::to_string(step) +
                                " outside [0, " + std::to_string(ts.step_count()) +
                                ")");
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(grid.n_bus());
    for (const Injector& inj : grid.loads()) {
        const TimeSeries::Column& col = ts.column(inj.profile_id);
        s[grid.bus_index(inj.bus)] -=
            std::complex<double>(col.p[step], col.q[step]);
    }
    for (const Injector& inj : grid.generators()) {
        if (inj.profile_id.empty()) continue;
        const TimeSeries::Column& col = ts.column(inj.profile_id);
        // PV-node units vary real power only; RES inject their known q
        const double q = inj.kind == InjectorKind::Res ? col.q[step] : 0.0;
        s[grid.bus_index(inj.bus)] += std::complex<double>(col.p[step], q);
    }
    return s;
}

}  // namespace gs
