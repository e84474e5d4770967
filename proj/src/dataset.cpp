#include "gridsurrogate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gs {

using json = nlohmann::ordered_json;

FeatureLayout FeatureLayout::of(const Grid& grid) {
    FeatureLayout layout;
    layout.n_bus = grid.n_bus();
    std::set<int> q_buses;
    for (const Injector& inj : grid.loads()) q_buses.insert(grid.bus_index(inj.bus));
    for (const Injector& inj : grid.generators()) {
        if (inj.kind == InjectorKind::Res) q_buses.insert(grid.bus_index(inj.bus));
    }
    for (int i = 0; i < grid.n_bus(); ++i) {
        switch (grid.buses()[i].kind) {
            case BusKind::Slack: layout.slack_buses.push_back(i); break;
            case BusKind::Pv: layout.pv_buses.push_back(i); break;
            case BusKind::Pq: break;
        }
        if (q_buses.count(i)) layout.q_buses.push_back(i);
    }
    return layout;
}

std::vector<std::string> FeatureLayout::names(const Grid& grid) const {
    std::vector<std::string> out;
    out.reserve(size());
    for (int i : slack_buses) out.push_back("vm_ref[" + grid.buses()[i].id + "]");
    for (int i : slack_buses) out.push_back("va_ref[" + grid.buses()[i].id + "]");
    for (int i : pv_buses) out.push_back("vm_gen[" + grid.buses()[i].id + "]");
    for (int i = 0; i < n_bus; ++i) out.push_back("p_bus[" + grid.buses()[i].id + "]");
    for (int i : q_buses) out.push_back("q_bus[" + grid.buses()[i].id + "]");
    return out;
}

Eigen::VectorXd extract_features(const Grid& grid, const FeatureLayout& layout,
                                 const TimeSeries& ts, int step) {
    const Eigen::VectorXcd s = aggregate_bus_injections(grid, ts, step);
    Eigen::VectorXd x(layout.size());
    int at = 0;
    for (int i : layout.slack_buses) x[at++] = *grid.buses()[i].vm_setpoint;
    for (std::size_t i = 0; i < layout.slack_buses.size(); ++i) x[at++] = 0.0;
    for (int i : layout.pv_buses) x[at++] = *grid.buses()[i].vm_setpoint;
    for (int i = 0; i < layout.n_bus; ++i) x[at++] = s[i].real();
    for (int i : layout.q_buses) x[at++] = s[i].imag();
    return x;
}

Eigen::MatrixXd extract_feature_matrix(const Grid& grid,
                                       const FeatureLayout& layout,
                                       const TimeSeries& ts,
                                       const std::vector<int>& steps) {
    Eigen::MatrixXd x(steps.size(), layout.size());
    for (std::size_t r = 0; r < steps.size(); ++r)
        x.row(r) = extract_features(grid, layout, ts, steps[r]).transpose();
    return x;
}

TrainTestSplit split_train_test(const std::vector<int>& step_ids,
                                double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must be in (0, 1)");
    std::vector<int> ids = step_ids;
    Rng rng(seed);
    rng.shuffle(ids);
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(ids.size())));
    TrainTestSplit split;
    split.train_ids.assign(ids.begin(), ids.begin() + n_train);
    split.test_ids.assign(ids.begin() + n_train, ids.end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

Scaler fit_scaler(const Eigen::MatrixXd& x_train) {
    if (x_train.rows() < 2)
        throw std::invalid_argument("fit_scaler needs at least 2 training rows");
    Scaler s;
    s.mean = x_train.colwise().mean();
    Eigen::MatrixXd centered = x_train.rowwise() - s.mean.transpose();
    s.std = (centered.array().square().colwise().mean()).sqrt();
    return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size())
        throw std::invalid_argument("scaler: feature count mismatch");
    Eigen::MatrixXd out = x.rowwise() - mean.transpose();
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        if (std[c] > 0.0)
            out.col(c) /= std[c];
        else
            out.col(c).setZero();
    }
    return out;
}

Eigen::MatrixXd SmotePlan::apply(const Eigen::MatrixXd& x_minority) const {
    Eigen::MatrixXd out(base.size(), x_minority.cols());
    for (std::size_t i = 0; i < base.size(); ++i) {
        out.row(i) = x_minority.row(base[i]) +
                     u[i] * (x_minority.row(neighbour[i]) - x_minority.row(base[i]));
    }
    return out;
}

SmotePlan smote_plan(const Eigen::MatrixXd& x_minority, int n_synthetic, int k,
                     Rng& rng) {
    const int n = static_cast<int>(x_minority.rows());
    if (n < 2)
        throw ValidationError(
            "SMOTE needs at least 2 minority samples to interpolate");
    if (k < 1) throw std::invalid_argument("SMOTE: k must be >= 1");
    k = std::min(k, n - 1);

    // k nearest minority neighbours per sample (Euclidean), ties by index
    std::vector<std::vector<int>> nn(n);
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            dist[j] = {(x_minority.row(i) - x_minority.row(j)).squaredNorm(), j};
        dist[i].first = std::numeric_limits<double>::infinity();  // skip self
        std::sort(dist.begin(), dist.end());
        nn[i].reserve(k);
        for (int j = 0; j < k; ++j) nn[i].push_back(dist[j].second);
    }

    SmotePlan plan;
    plan.base.reserve(n_synthetic);
    for (int t = 0; t < n_synthetic; ++t) {
        const int i = t % n;  // round-robin over minority samples
        const int j = nn[i][rng.below(nn[i].size())];
        plan.base.push_back(i);
        plan.neighbour.push_back(j);
        plan.u.push_back(rng.uniform01());
    }
    return plan;
}

SmoteResult smote_oversample(const Eigen::MatrixXd& x_minority, int minority_label,
                             const Eigen::MatrixXd& x_majority, int majority_label,
                             int k, std::uint64_t seed) {
    const int n_min = static_cast<int>(x_minority.rows());
    const int n_maj = static_cast<int>(x_majority.rows());
    const int n_syn = std::max(0, n_maj - n_min);
    Rng rng(seed);
    Eigen::MatrixXd synthetic(0, x_minority.cols());
    if (n_syn > 0) {
        const SmotePlan plan = smote_plan(x_minority, n_syn, k, rng);
        synthetic = plan.apply(x_minority);
    }
    SmoteResult result;
    result.x.resize(n_min + n_syn + n_maj, x_minority.cols());
    result.x.topRows(n_min) = x_minority;
    result.x.middleRows(n_min, n_syn) = synthetic;
    result.x.bottomRows(n_maj) = x_majority;
    result.y.resize(n_min + n_syn + n_maj);
    result.y.head(n_min + n_syn).setConstant(minority_label);
    result.y.tail(n_maj).setConstant(majority_label);
    return result;
}

TimeSeries generate_scenarios(const Grid& grid, const ScenarioConfig& config) {
    if (config.count <= 0)
        throw std::invalid_argument("scenario count must be > 0");
    struct Unit {
        const Injector* inj;
        double p_max_pu;
    };
    std::vector<Unit> units;
    for (const Injector& inj : grid.loads()) {
        if (!(inj.p_max_mw > 0.0))
            throw ValidationError("injector \"" + inj.id +
                                  "\" needs p_max for scenario generation");
        units.push_back({&inj, inj.p_max_mw / grid.base_mva()});
    }
    for (const Injector& inj : grid.generators())
        units.push_back({&inj, inj.p_max_mw / grid.base_mva()});

    const double tan_phi =
        std::tan(std::acos(std::clamp(config.load_power_factor, 0.0, 1.0)));

    std::map<std::string, TimeSeries::Column> columns;
    for (const Unit& u : units) {
        columns[u.inj->profile_id].p.assign(config.count, 0.0);
        columns[u.inj->profile_id].q.assign(config.count, 0.0);
    }

    Rng rng(config.seed);
    for (int t = 0; t < config.count; ++t) {
        const double scale_load = rng.uniform01();
        const double scale_res = rng.uniform01();
        const double scale_conv = rng.uniform01();
        for (const Unit& u : units) {
            double scale = scale_load;
            if (u.inj->kind == InjectorKind::Res) scale = scale_res;
            if (u.inj->kind == InjectorKind::Conventional) scale = scale_conv;
            double p = scale * u.p_max_pu;
            if (config.noise_std > 0.0)
                p += rng.normal(0.0, config.noise_std * u.p_max_pu);
            p = std::clamp(p, 0.0, u.p_max_pu);
            TimeSeries::Column& col = columns[u.inj->profile_id];
            col.p[t] = p;
            col.q[t] = u.inj->kind == InjectorKind::Load ? p * tan_phi : 0.0;
        }
    }
    return TimeSeries(config.count, 15, grid.base_mva(), std::move(columns));
}

TimeSeries apply_curtailment(const Grid& grid, const TimeSeries& ts,
                             double energy_fraction) {
    if (!(energy_fraction > 0.0 && energy_fraction < 1.0))
        throw std::invalid_argument("curtailment fraction must be in (0, 1)");

    // rated power per RES profile column, p.u.
    std::map<std::string, double> res_rating;
    for (const Injector& inj : grid.generators()) {
        if (inj.kind != InjectorKind::Res) continue;
        double& r = res_rating[inj.profile_id];
        r = std::max(r, inj.p_max_mw / grid.base_mva());
    }
    if (res_rating.empty())
        throw ValidationError("grid has no RES injectors to curtail");

    double total = 0.0;
    for (const auto& [id, rating] : res_rating) {
        const TimeSeries::Column& col = ts.column(id);
        total = std::accumulate(col.p.begin(), col.p.end(), total);
    }
    if (!(total > 0.0)) throw ValidationError("RES profiles carry no energy");
    const double target = (1.0 - energy_fraction) * total;

    auto curtailed_energy = [&](double cap) {
        double e = 0.0;
        for (const auto& [id, rating] : res_rating) {
            const TimeSeries::Column& col = ts.column(id);
            const double lim = cap * rating;
            for (double p : col.p) e += std::min(p, lim);
        }
        return e;
    };
    if (curtailed_energy(1.0) < target - 1e-4 * total)
        throw ValidationError("curtailment fraction infeasible: profiles exceed "
                              "rated power");

    double lo = 0.0, hi = 1.0, cap = 1.0;
    for (int it = 0; it < 100; ++it) {
        cap = 0.5 * (lo + hi);
        const double e = curtailed_energy(cap);
        if (std::abs(e - target) <= 1e-4 * total) break;
        if (e > target)
            hi = cap;
        else
            lo = cap;
    }

    std::map<std::string, TimeSeries::Column> columns = ts.columns();
    for (const auto& [id, rating] : res_rating) {
        const double lim = cap * rating;
        for (double& p : columns[id].p) p = std::min(p, lim);
    }
    return TimeSeries(ts.step_count(), ts.resolution_min(), ts.base_mva(),
                      std::move(columns));
}

std::string to_string(DatasetMode m) {
    return m == DatasetMode::Regression ? "regression" : "classification";
}

DatasetMode dataset_mode_from_string(const std::string& s) {
    if (s == "regression" || s == "reg") return DatasetMode::Regression;
    if (s == "classification" || s == "cls") return DatasetMode::Classification;
    throw ParseError("unknown dataset mode \"" + s + "\"");
}

Eigen::MatrixXd Dataset::rows(const std::vector<int>& idx,
                              const Eigen::MatrixXd& m) const {
    Eigen::MatrixXd out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
    return out;
}

Dataset build_dataset(const Grid& grid, const TimeSeries& ts,
                      const SweepResultStore& store, int case_index,
                      DatasetMode mode, const DatasetOptions& options) {
    const int case_pos = store.case_position(case_index);
    const FeatureLayout layout = FeatureLayout::of(grid);

    std::vector<int> usable_steps;
    std::vector<int> usable_pos;
    for (std::size_t s = 0; s < store.steps().size(); ++s) {
        const SweepRecord& r = store.record(case_pos, static_cast<int>(s));
        if (r.converged) {
            usable_steps.push_back(store.steps()[s]);
            usable_pos.push_back(static_cast<int>(s));
        }
    }
    if (usable_steps.empty())
        throw ValidationError("case " + std::to_string(case_index) +
                              " has no converged steps");

    Dataset ds;
    ds.case_index = case_index;
    ds.mode = mode;
    ds.feature_names = layout.names(grid);
    ds.n_bus = store.n_bus();
    ds.n_line = store.n_line();
    ds.x = extract_feature_matrix(grid, layout, ts, usable_steps);
    ds.step_ids = usable_steps;

    if (mode == DatasetMode::Regression) {
        ds.y_reg.resize(usable_steps.size(), store.n_bus() + store.n_line());
        for (std::size_t i = 0; i < usable_pos.size(); ++i) {
            const SweepRecord& r = store.record(case_pos, usable_pos[i]);
            ds.y_reg.row(i).head(store.n_bus()) = r.vm.transpose();
            ds.y_reg.row(i).tail(store.n_line()) = r.loading.transpose();
        }
    } else {
        ds.y_cls.resize(usable_steps.size());
        for (std::size_t i = 0; i < usable_pos.size(); ++i)
            ds.y_cls[i] = store.record(case_pos, usable_pos[i]).label;
    }

    // split on row positions, seeded per (seed, case)
    std::vector<int> row_ids(usable_steps.size());
    std::iota(row_ids.begin(), row_ids.end(), 0);
    const TrainTestSplit split = split_train_test(
        row_ids, options.train_fraction,
        derive_seed(options.seed, static_cast<std::uint64_t>(case_index)));
    ds.train_rows = split.train_ids;
    ds.test_rows = split.test_ids;

    ds.scaler = fit_scaler(ds.rows(ds.train_rows, ds.x));

    if (options.smote && mode == DatasetMode::Classification) {
        std::vector<int> pos_rows, neg_rows;
        for (int r : ds.train_rows)
            (ds.y_cls[r] > 0 ? pos_rows : neg_rows).push_back(r);
        const bool pos_minority = pos_rows.size() < neg_rows.size();
        const std::vector<int>& minority = pos_minority ? pos_rows : neg_rows;
        const std::vector<int>& majority = pos_minority ? neg_rows : pos_rows;
        const int n_syn =
            static_cast<int>(majority.size()) - static_cast<int>(minority.size());
        if (n_syn > 0) {
            if (minority.size() < 2)
                throw ValidationError(
                    "SMOTE needs at least 2 minority samples to interpolate");
            const Eigen::MatrixXd x_min_raw = ds.rows(minority, ds.x);
            const Eigen::MatrixXd x_min_scaled = ds.scaler.apply(x_min_raw);
            Rng rng(derive_seed(options.seed,
                                0x534d4f5445ULL ^ static_cast<std::uint64_t>(
                                                      case_index)));
            const SmotePlan plan =
                smote_plan(x_min_scaled, n_syn, options.smote_k, rng);
            // interpolation commutes with the affine scaler; replay on raw rows
            const Eigen::MatrixXd synthetic = plan.apply(x_min_raw);
            const int old_rows = static_cast<int>(ds.x.rows());
            ds.x.conservativeResize(old_rows + n_syn, Eigen::NoChange);
            ds.x.bottomRows(n_syn) = synthetic;
            ds.y_cls.conservativeResize(old_rows + n_syn);
            ds.y_cls.tail(n_syn).setConstant(pos_minority ? 1 : -1);
            for (int i = 0; i < n_syn; ++i) {
                ds.step_ids.push_back(-1);
                ds.train_rows.push_back(old_rows + i);
            }
        }
    }
    return ds;
}

Dataset build_multicase_dataset(const Grid& grid, const TimeSeries& ts,
                                const SweepResultStore& store, DatasetMode mode,
                                const DatasetOptions& options) {
    const FeatureLayout layout = FeatureLayout::of(grid);

    Dataset ds;
    ds.case_index = -1;
    ds.mode = mode;
    ds.feature_names = layout.names(grid);
    ds.feature_names.push_back("case_index");
    ds.n_bus = store.n_bus();
    ds.n_line = store.n_line();

    // features per step are case-independent; compute once
    std::vector<int> steps = store.steps();
    const Eigen::MatrixXd step_features =
        extract_feature_matrix(grid, layout, ts, steps);

    std::vector<Eigen::Index> row_case, row_step_pos;
    for (std::size_t c = 0; c < store.cases().size(); ++c) {
        for (std::size_t s = 0; s < steps.size(); ++s) {
            if (!store.record(static_cast<int>(c), static_cast<int>(s)).converged)
                continue;
            row_case.push_back(static_cast<Eigen::Index>(c));
            row_step_pos.push_back(static_cast<Eigen::Index>(s));
        }
    }
    const Eigen::Index n = static_cast<Eigen::Index>(row_case.size());
    if (n == 0) throw ValidationError("store has no converged records");

    ds.x.resize(n, layout.size() + 1);
    if (mode == DatasetMode::Regression)
        ds.y_reg.resize(n, ds.n_bus + ds.n_line);
    else
        ds.y_cls.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        ds.x.row(r).head(layout.size()) = step_features.row(row_step_pos[r]);
        ds.x(r, layout.size()) =
            static_cast<double>(store.cases()[row_case[r]].index);
        const SweepRecord& rec = store.record(static_cast<int>(row_case[r]),
                                              static_cast<int>(row_step_pos[r]));
        ds.step_ids.push_back(rec.step);
        if (mode == DatasetMode::Regression) {
            ds.y_reg.row(r).head(ds.n_bus) = rec.vm.transpose();
            ds.y_reg.row(r).tail(ds.n_line) = rec.loading.transpose();
        } else {
            ds.y_cls[r] = rec.label;
        }
    }

    // split by step id so no held-out step leaks through another case
    const TrainTestSplit split =
        split_train_test(steps, options.train_fraction, options.seed);
    std::set<int> train_steps(split.train_ids.begin(), split.train_ids.end());
    for (Eigen::Index r = 0; r < n; ++r) {
        if (train_steps.count(ds.step_ids[r]))
            ds.train_rows.push_back(static_cast<int>(r));
        else
            ds.test_rows.push_back(static_cast<int>(r));
    }
    ds.scaler = fit_scaler(ds.rows(ds.train_rows, ds.x));
    return ds;
}

std::string Dataset::to_jsonl_string() const {
    std::ostringstream out;
    json header;
    header["case"] = case_index;
    header["mode"] = to_string(mode);
    header["feature_names"] = feature_names;
    header["n_bus"] = n_bus;
    header["n_line"] = n_line;
    header["scaler"] = json{{"mean", std::vector<double>(
                                         scaler.mean.begin(), scaler.mean.end())},
                            {"std", std::vector<double>(scaler.std.begin(),
                                                        scaler.std.end())}};
    header["train_rows"] = train_rows;
    header["test_rows"] = test_rows;
    out << header.dump() << "\n";
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        json jr;
        jr["step"] = step_ids[r];
        json xs = json::array();
        for (Eigen::Index c = 0; c < x.cols(); ++c) xs.push_back(x(r, c));
        jr["x"] = std::move(xs);
        if (mode == DatasetMode::Regression) {
            json ys = json::array();
            for (Eigen::Index c = 0; c < y_reg.cols(); ++c)
                ys.push_back(y_reg(r, c));
            jr["y"] = std::move(ys);
        } else {
            jr["label"] = y_cls[r];
        }
        out << jr.dump() << "\n";
    }
    return out.str();
}

void Dataset::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << to_jsonl_string();
}

Dataset Dataset::from_jsonl_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("dataset: empty file");
    json header;
    try {
        header = json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("dataset header: ") + e.what());
    }
    Dataset ds;
    ds.case_index = header.at("case").get<int>();
    ds.mode = dataset_mode_from_string(header.at("mode").get<std::string>());
    ds.feature_names = header.at("feature_names").get<std::vector<std::string>>();
    ds.n_bus = header.at("n_bus").get<int>();
    ds.n_line = header.at("n_line").get<int>();
    const auto mean = header.at("scaler").at("mean").get<std::vector<double>>();
    const auto sd = header.at("scaler").at("std").get<std::vector<double>>();
    ds.scaler.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    ds.scaler.std = Eigen::Map<const Eigen::VectorXd>(sd.data(), sd.size());
    ds.train_rows = header.at("train_rows").get<std::vector<int>>();
    ds.test_rows = header.at("test_rows").get<std::vector<int>>();

    std::vector<json> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("dataset row: ") + e.what());
        }
    }
    const std::size_t n = rows.size();
    const std::size_t d = ds.feature_names.size();
    ds.x.resize(n, d);
    if (ds.mode == DatasetMode::Regression)
        ds.y_reg.resize(n, ds.n_bus + ds.n_line);
    else
        ds.y_cls.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const json& jr = rows[r];
        ds.step_ids.push_back(jr.at("step").get<int>());
        const json& xs = jr.at("x");
        if (xs.size() != d) throw ParseError("dataset: feature width mismatch");
        for (std::size_t c = 0; c < d; ++c) ds.x(r, c) = xs[c].get<double>();
        if (ds.mode == DatasetMode::Regression) {
            const json& ys = jr.at("y");
            if (static_cast<Eigen::Index>(ys.size()) != ds.y_reg.cols())
                throw ParseError("dataset: target width mismatch");
            for (std::size_t c = 0; c < ys.size(); ++c)
                ds.y_reg(r, c) = ys[c].get<double>();
        } else {
            ds.y_cls[r] = jr.at("label").get<int>();
        }
    }
    return ds;
}

Dataset Dataset::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_jsonl_string(ss.str());
}

}  // namespace gs
