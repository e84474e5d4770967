#include "gridsurrogate/contingency.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "gridsurrogate/common.hpp"

namespace gs {

using json = nlohmann::ordered_json;

CaseEnumeration enumerate_cases(const Grid& grid) {
    CaseEnumeration out;
    out.cases.push_back({0, std::nullopt});
    int index = 1;
    for (int i = 0; i < grid.n_line(); ++i) {
        if (grid.connected_without(i))
            out.cases.push_back({index++, grid.lines()[i].id});
        else
            out.islanding_lines.push_back(grid.lines()[i].id);
    }
    return out;
}

SweepResultStore::SweepResultStore(std::uint64_t grid_hash,
                                   std::vector<ContingencyCase> cases,
                                   std::vector<int> steps, OperatingLimits limits,
                                   int n_bus, int n_line)
    : grid_hash_(grid_hash),
      cases_(std::move(cases)),
      steps_(std::move(steps)),
      limits_(limits),
      n_bus_(n_bus),
      n_line_(n_line) {
    records_.resize(cases_.size() * steps_.size());
}

const SweepRecord& SweepResultStore::record(int case_pos, int step_pos) const {
    return records_.at(static_cast<std::size_t>(case_pos) * steps_.size() +
                       step_pos);
}

SweepRecord& SweepResultStore::record(int case_pos, int step_pos) {
    return records_.at(static_cast<std::size_t>(case_pos) * steps_.size() +
                       step_pos);
}

int SweepResultStore::case_position(int case_index) const {
    for (std::size_t i = 0; i < cases_.size(); ++i)
        if (cases_[i].index == case_index) return static_cast<int>(i);
    throw std::invalid_argument("store has no case with index " +
                                std::to_string(case_index));
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

}  // namespace

std::string SweepResultStore::to_jsonl_string() const {
    std::ostringstream out;
    json header;
    header["grid_hash"] = grid_hash_;
    header["n_bus"] = n_bus_;
    header["n_line"] = n_line_;
    json jc = json::array();
    for (const ContingencyCase& c : cases_) {
        json e;
        e["index"] = c.index;
        if (c.outage)
            e["outage"] = *c.outage;
        else
            e["outage"] = nullptr;
        jc.push_back(e);
    }
    header["cases"] = jc;
    header["steps"] = steps_;
    header["limits"] = json{{"i_limit_pct", limits_.i_limit_pct},
                            {"vm_min", limits_.vm_min},
                            {"vm_max", limits_.vm_max}};
    out << header.dump() << "\n";
    for (const SweepRecord& r : records_) {
        json jr;
        jr["case"] = r.case_index;
        jr["step"] = r.step;
        jr["converged"] = r.converged;
        jr["vm"] = vector_to_json(r.vm);
        jr["loading"] = vector_to_json(r.loading);
        if (r.converged) jr["label"] = r.label;
        out << jr.dump() << "\n";
    }
    return out.str();
}

void SweepResultStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << to_jsonl_string();
}

SweepResultStore SweepResultStore::from_jsonl_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("result store: empty file");
    json header;
    try {
        header = json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("result store header: ") + e.what());
    }
    std::vector<ContingencyCase> cases;
    for (const json& e : header.at("cases")) {
        ContingencyCase c;
        c.index = e.at("index").get<int>();
        if (!e.at("outage").is_null()) c.outage = e.at("outage").get<std::string>();
        cases.push_back(c);
    }
    OperatingLimits limits;
    limits.i_limit_pct = header.at("limits").at("i_limit_pct").get<double>();
    limits.vm_min = header.at("limits").at("vm_min").get<double>();
    limits.vm_max = header.at("limits").at("vm_max").get<double>();
    SweepResultStore store(header.at("grid_hash").get<std::uint64_t>(),
                           std::move(cases),
                           header.at("steps").get<std::vector<int>>(), limits,
                           header.at("n_bus").get<int>(),
                           header.at("n_line").get<int>());
    std::size_t i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (i >= store.records_.size())
            throw ParseError("result store: more records than cases x steps");
        json jr;
        try {
            jr = json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("result store record: ") + e.what());
        }
        SweepRecord r;
        r.case_index = jr.at("case").get<int>();
        r.step = jr.at("step").get<int>();
        r.converged = jr.at("converged").get<bool>();
        r.vm = vector_from_json(jr.at("vm"));
        r.loading = vector_from_json(jr.at("loading"));
        if (r.converged) r.label = jr.at("label").get<int>();
        store.records_[i++] = std::move(r);
    }
    if (i != store.records_.size())
        throw ParseError("result store: record count " + std::to_string(i) +
                         " does not match cases x steps");
    return store;
}

SweepResultStore SweepResultStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open result store \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_jsonl_string(ss.str());
}

SweepResultStore run_sweep(const Grid& grid, const TimeSeries& ts,
                           const std::vector<ContingencyCase>& cases,
                           const std::vector<int>& steps,
                           const SweepOptions& options) {
    for (int s : steps) {
        if (s < 0 || s >= ts.step_count())
            throw std::out_of_range("sweep step " + std::to_string(s) +
                                    " outside [0, " +
                                    std::to_string(ts.step_count()) + ")");
    }
    for (const ContingencyCase& c : cases) {
        if (c.outage) grid.line_index(*c.outage);  // throws on unknown id
    }

    SweepResultStore store(fnv1a64(grid.to_json_string()), cases, steps,
                           grid.limits(), grid.n_bus(), grid.n_line());

    // injections are case-independent; compute once
    std::vector<Eigen::VectorXcd> injections(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i)
        injections[i] = aggregate_bus_injections(grid, ts, steps[i]);

    const auto t0 = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next_case{0};
    std::atomic<std::int64_t> solve_nanos{0};

    auto work = [&]() {
        std::int64_t local_nanos = 0;
        for (;;) {
            const std::size_t c = next_case.fetch_add(1);
            if (c >= cases.size()) break;
            const AdmittanceMatrix ybus = build_admittance(grid, cases[c].outage);
            for (std::size_t s = 0; s < steps.size(); ++s) {
                const auto s0 = std::chrono::steady_clock::now();
                const PowerFlowSolution sol =
                    solve_power_flow(grid, ybus, injections[s], options.power_flow);
                local_nanos += std::chrono::duration_cast<std::chrono::nanoseconds>(
                                   std::chrono::steady_clock::now() - s0)
                                   .count();
                SweepRecord& r =
                    store.record(static_cast<int>(c), static_cast<int>(s));
                r.case_index = cases[c].index;
                r.step = steps[s];
                r.converged = sol.converged;
                if (sol.converged) {
                    r.vm = sol.vm;
                    r.loading = sol.line_loading;
                    r.label = classify_state(grid, sol).value;
                }
            }
        }
        solve_nanos.fetch_add(local_nanos);
    };

    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    const std::size_t n_solves = cases.size() * steps.size();
    store.timing().total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    store.timing().mean_solve_seconds =
        n_solves == 0 ? 0.0
                      : static_cast<double>(solve_nanos.load()) * 1e-9 /
                            static_cast<double>(n_solves);
    return store;
}

LabelMatrix label_matrix(const SweepResultStore& store) {
    LabelMatrix out;
    const int n_steps = static_cast<int>(store.steps().size());
    for (std::size_t c = 0; c < store.cases().size(); ++c) {
        std::vector<int> labels(n_steps, 0);
        std::vector<bool> conv(n_steps, false);
        for (int s = 0; s < n_steps; ++s) {
            const SweepRecord& r = store.record(static_cast<int>(c), s);
            conv[s] = r.converged;
            if (r.converged)
                labels[s] = r.label;
            else
                ++out.non_converged_count;
        }
        out.labels.push_back(std::move(labels));
        out.converged.push_back(std::move(conv));
    }
    return out;
}

}  // namespace gs
