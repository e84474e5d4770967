#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridsurrogate/common.hpp"
#include "gridsurrogate/contingency.hpp"
#include "gridsurrogate/dataset.hpp"
#include "gridsurrogate/fixtures.hpp"
#include "gridsurrogate/metrics.hpp"
#include "gridsurrogate/models.hpp"
#include "gridsurrogate/pipeline.hpp"
#include "gridsurrogate/report.hpp"

using json = nlohmann::ordered_json;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    bool verbose = false;
};

void log_line(const GlobalOptions& g, const std::string& msg) {
    if (g.verbose) std::cerr << msg << "\n";
}

gs::Grid resolve_grid(const std::string& arg) {
    if (arg == "demo3") return gs::fixtures::demo3();
    if (arg == "demo9") return gs::fixtures::demo9();
    return gs::load_grid(arg);
}

/// "demo-year" resolves to the bundled 2,000-step synthetic year seeded
/// from --seed; anything else is a CSV path.
gs::TimeSeries resolve_series(const std::string& arg, const gs::Grid& grid,
                              std::uint64_t seed) {
    if (arg == "demo-year")
        return gs::fixtures::make_synthetic_year(grid, 2000,
                                                 gs::derive_seed(seed, 0x79656172));
    return gs::load_time_series(arg, grid);
}

std::vector<int> parse_steps(const std::string& arg, int t_total,
                             std::uint64_t seed) {
    std::vector<int> all(t_total);
    for (int i = 0; i < t_total; ++i) all[i] = i;
    if (arg == "all") return all;
    if (arg.find(',') == std::string::npos && arg.find('.') != std::string::npos) {
        const double fraction = std::stod(arg);
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw std::invalid_argument("--steps fraction must be in (0, 1]");
        if (fraction == 1.0) return all;
        return gs::split_train_test(all, fraction, seed).train_ids;
    }
    std::vector<int> steps;
    std::size_t at = 0;
    while (at < arg.size()) {
        const std::size_t comma = arg.find(',', at);
        const std::string tok = arg.substr(
            at, comma == std::string::npos ? std::string::npos : comma - at);
        steps.push_back(std::stoi(tok));
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    if (steps.empty()) throw std::invalid_argument("--steps: empty list");
    return steps;
}

std::vector<double> parse_doubles(const std::string& arg) {
    std::vector<double> out;
    std::size_t at = 0;
    while (at < arg.size()) {
        const std::size_t comma = arg.find(',', at);
        out.push_back(std::stod(arg.substr(
            at, comma == std::string::npos ? std::string::npos : comma - at)));
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    return out;
}

// ------------------------------------------------------------- predict

void write_predictions(const std::string& path, const gs::SurrogateModel& model,
                       const gs::Dataset& ds) {
    std::ostringstream out;
    json header;
    header["case"] = model.case_index;
    header["task"] = gs::to_string(model.task);
    header["kind"] = gs::to_string(model.kind);
    header["n_bus"] = model.n_bus;
    header["n_line"] = model.n_line;
    out << header.dump() << "\n";

    std::vector<char> is_train(ds.x.rows(), 0);
    for (int r : ds.train_rows) is_train[r] = 1;
    std::vector<int> rows;
    for (Eigen::Index r = 0; r < ds.x.rows(); ++r)
        if (ds.step_ids[r] >= 0) rows.push_back(static_cast<int>(r));

    Eigen::MatrixXd x(rows.size(), ds.x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) x.row(i) = ds.x.row(rows[i]);

    if (model.task == gs::TaskKind::Regression) {
        const Eigen::MatrixXd y = model.predict_regression(x);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            json jr;
            jr["step"] = ds.step_ids[rows[i]];
            jr["split"] = is_train[rows[i]] ? "train" : "test";
            json ys = json::array();
            for (Eigen::Index c = 0; c < y.cols(); ++c) ys.push_back(y(i, c));
            jr["y"] = std::move(ys);
            out << jr.dump() << "\n";
        }
    } else {
        const Eigen::VectorXd p = model.predict_proba(x);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            json jr;
            jr["step"] = ds.step_ids[rows[i]];
            jr["split"] = is_train[rows[i]] ? "train" : "test";
            jr["p"] = p[i];
            out << jr.dump() << "\n";
        }
    }
    gs::write_text_file(path, out.str());
}

struct Predictions {
    int case_index = 0;
    gs::TaskKind task = gs::TaskKind::Regression;
    int n_bus = 0, n_line = 0;
    std::vector<int> steps;
    std::vector<std::string> split;
    Eigen::MatrixXd y;   // regression
    Eigen::VectorXd p;   // classification
};

Predictions read_predictions(const std::string& path) {
    std::istringstream in(gs::read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw gs::ParseError("predictions: empty file");
    const json header = json::parse(line);
    Predictions pr;
    pr.case_index = header.at("case").get<int>();
    pr.task = gs::task_kind_from_string(header.at("task").get<std::string>());
    pr.n_bus = header.at("n_bus").get<int>();
    pr.n_line = header.at("n_line").get<int>();
    std::vector<json> rows;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(json::parse(line));
    }
    pr.steps.reserve(rows.size());
    if (pr.task == gs::TaskKind::Regression)
        pr.y.resize(rows.size(), pr.n_bus + pr.n_line);
    else
        pr.p.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        pr.steps.push_back(rows[i].at("step").get<int>());
        pr.split.push_back(rows[i].value("split", "test"));
        if (pr.task == gs::TaskKind::Regression) {
            const json& ys = rows[i].at("y");
            for (std::size_t c = 0; c < ys.size(); ++c)
                pr.y(i, c) = ys[c].get<double>();
        } else {
            pr.p[i] = rows[i].at("p").get<double>();
        }
    }
    return pr;
}

// ------------------------------------------------------------ evaluate

json evaluate_predictions(const Predictions& pr, const gs::SweepResultStore& store,
                          const std::vector<double>& thresholds,
                          const std::vector<double>& factors,
                          const std::string& split) {
    const int case_pos = store.case_position(pr.case_index);
    std::map<int, int> step_pos;
    for (std::size_t i = 0; i < store.steps().size(); ++i)
        step_pos[store.steps()[i]] = static_cast<int>(i);

    std::vector<int> keep;
    for (std::size_t i = 0; i < pr.steps.size(); ++i) {
        if (split != "all" && pr.split[i] != split) continue;
        const auto it = step_pos.find(pr.steps[i]);
        if (it == step_pos.end())
            throw gs::ValidationError("prediction step " +
                                      std::to_string(pr.steps[i]) +
                                      " not present in the truth store");
        if (!store.record(case_pos, it->second).converged) continue;
        keep.push_back(static_cast<int>(i));
    }
    if (keep.empty())
        throw gs::ValidationError("no evaluable predictions for split \"" +
                                  split + "\"");

    Eigen::VectorXi truth(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        truth[i] =
            store.record(case_pos, step_pos.at(pr.steps[keep[i]])).label;

    json report;
    report["case"] = pr.case_index;
    report["task"] = gs::to_string(pr.task);
    report["split"] = split;
    report["n"] = keep.size();

    if (pr.task == gs::TaskKind::Regression) {
        Eigen::MatrixXd y_hat(keep.size(), pr.y.cols());
        Eigen::MatrixXd y_true(keep.size(), pr.y.cols());
        for (std::size_t i = 0; i < keep.size(); ++i) {
            y_hat.row(i) = pr.y.row(keep[i]);
            const gs::SweepRecord& r =
                store.record(case_pos, step_pos.at(pr.steps[keep[i]]));
            y_true.row(i).head(pr.n_bus) = r.vm.transpose();
            y_true.row(i).tail(pr.n_line) = r.loading.transpose();
        }
        report["regression_errors"] = json{
            {"vm", gs::error_stats_to_json(gs::regression_errors(
                       y_hat.leftCols(pr.n_bus), y_true.leftCols(pr.n_bus)))},
            {"loading",
             gs::error_stats_to_json(gs::regression_errors(
                 y_hat.rightCols(pr.n_line), y_true.rightCols(pr.n_line)))}};
        json jf = json::array();
        for (double f : factors) {
            const gs::Metrics m = gs::compute_metrics(gs::confusion_counts(
                gs::classify_from_regression(y_hat, pr.n_bus, store.limits(), f),
                truth));
            jf.push_back(json{{"factor", f}, {"metrics", gs::metrics_to_json(m)}});
        }
        report["factors"] = std::move(jf);
    } else {
        Eigen::VectorXd p(keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) p[i] = pr.p[keep[i]];
        json jt = json::array();
        for (double thr : thresholds) {
            const gs::Metrics m = gs::compute_metrics(gs::confusion_counts(
                gs::classify_from_probability(p, thr), truth));
            jt.push_back(
                json{{"threshold", thr}, {"metrics", gs::metrics_to_json(m)}});
        }
        report["thresholds"] = std::move(jt);
    }
    return report;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-series N-1 contingency simulation and ML surrogates"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.set_help_all_flag("--help-all");

    GlobalOptions global;
    app.add_option("--seed", global.seed, "master seed for every stochastic step");
    app.add_option("--workers", global.workers, "worker threads (1 = serial)");
    app.add_flag("--verbose", global.verbose, "log progress to stderr");

    // ---------------------------------------------------------- simulate
    auto* sim = app.add_subcommand(
        "simulate", "run the (N+1)*T contingency power flow sweep");
    std::string sim_grid, sim_series, sim_steps = "all", sim_cases = "all",
                sim_out = "store.jsonl";
    gs::PowerFlowOptions pf_opt;
    sim->add_option("--grid", sim_grid, "grid file or demo3|demo9")->required();
    sim->add_option("--series", sim_series, "series CSV or demo-year")->required();
    sim->add_option("--steps", sim_steps, "all | <fraction> | s1,s2,...");
    sim->add_option("--cases", sim_cases, "all | base");
    sim->add_option("--out", sim_out, "output store (JSONL)");
    sim->add_option("--pf-tol", pf_opt.tolerance, "power flow tolerance (p.u.)");
    sim->add_option("--pf-max-iter", pf_opt.max_iterations,
                    "power flow iteration limit");

    // -------------------------------------------------------- make-series
    auto* mk = app.add_subcommand("make-series",
                                  "generate a seeded synthetic mini-year CSV");
    std::string mk_grid, mk_out = "year.csv";
    int mk_steps = 2000, mk_resolution = 15;
    mk->add_option("--grid", mk_grid)->required();
    mk->add_option("--steps", mk_steps, "number of steps");
    mk->add_option("--resolution", mk_resolution, "minutes per step");
    mk->add_option("--out", mk_out);

    // ---------------------------------------------------------- scenario
    auto* scen = app.add_subcommand(
        "scenario", "sample synthetic injection states from scale tuples");
    std::string scen_grid, scen_out = "scenarios.csv";
    gs::ScenarioConfig scen_cfg;
    scen->add_option("--grid", scen_grid)->required();
    scen->add_option("--n", scen_cfg.count, "number of scenarios")->required();
    scen->add_option("--noise", scen_cfg.noise_std,
                     "per-unit noise std as a fraction of rated power");
    scen->add_option("--pf", scen_cfg.load_power_factor, "load power factor");
    scen->add_option("--out", scen_out);

    // ----------------------------------------------------------- curtail
    auto* curt = app.add_subcommand(
        "curtail", "cap RES in-feed to remove an annual energy fraction");
    std::string curt_grid, curt_series, curt_out = "curtailed.csv";
    double curt_fraction = 0.03;
    curt->add_option("--grid", curt_grid)->required();
    curt->add_option("--series", curt_series)->required();
    curt->add_option("--fraction", curt_fraction, "energy fraction to remove");
    curt->add_option("--out", curt_out);

    // ----------------------------------------------------------- dataset
    auto* data = app.add_subcommand(
        "dataset", "build a supervised dataset for one contingency case");
    std::string data_store, data_grid, data_series, data_mode = "reg",
                data_out = "dataset.jsonl";
    int data_case = 0;
    gs::DatasetOptions data_opt;
    data->add_option("--store", data_store, "sweep store (JSONL)")->required();
    data->add_option("--grid", data_grid)->required();
    data->add_option("--series", data_series)->required();
    data->add_option("--case", data_case, "contingency case index");
    data->add_option("--mode", data_mode, "reg | cls");
    bool data_multicase = false;
    data->add_flag("--multi-case", data_multicase,
                   "one dataset over all cases, case index as a feature");
    data->add_option("--train-frac", data_opt.train_fraction);
    data->add_flag("--smote", data_opt.smote,
                   "balance the train split by oversampling (cls only)");
    data->add_option("--smote-k", data_opt.smote_k);
    data->add_option("--out", data_out);

    // ------------------------------------------------------------- train
    auto* train = app.add_subcommand("train", "train a surrogate model");
    std::string train_data, train_model = "mlp", train_out = "model.json";
    gs::TrainConfig train_cfg;
    std::string mlp_hidden = "100,100";
    train->add_option("--dataset", train_data)->required();
    train->add_option("--model", train_model, "mlp|ridge|tree|forest|knn");
    train->add_option("--out", train_out);
    train->add_option("--mlp-hidden", mlp_hidden, "hidden layer sizes");
    train->add_option("--mlp-epochs", train_cfg.mlp.max_epochs);
    train->add_option("--mlp-lr", train_cfg.mlp.learning_rate);
    train->add_option("--mlp-batch", train_cfg.mlp.batch_size);
    train->add_option("--mlp-patience", train_cfg.mlp.patience);
    train->add_option("--forest-trees", train_cfg.forest.n_trees);
    train->add_option("--tree-max-depth", train_cfg.tree.max_depth);
    train->add_option("--knn-k", train_cfg.knn_k);
    train->add_option("--ridge-folds", train_cfg.ridge_folds);

    // ----------------------------------------------------------- predict
    auto* pred = app.add_subcommand("predict", "apply a model to a dataset");
    std::string pred_model, pred_data, pred_out = "predictions.jsonl";
    pred->add_option("--model", pred_model)->required();
    pred->add_option("--dataset", pred_data)->required();
    pred->add_option("--out", pred_out);

    // ---------------------------------------------------------- evaluate
    auto* eval = app.add_subcommand(
        "evaluate", "score predictions against a truth store");
    std::string eval_pred, eval_truth, eval_out = "report.json",
                eval_split = "test";
    std::string eval_thresholds = "0.2,0.5", eval_factors = "0.94,0.96,0.98,1.0";
    eval->add_option("--pred", eval_pred)->required();
    eval->add_option("--truth", eval_truth, "sweep store (JSONL)")->required();
    eval->add_option("--thresholds", eval_thresholds,
                     "probability thresholds (classification)");
    eval->add_option("--factors", eval_factors,
                     "loading-limit factors (regression)");
    eval->add_option("--split", eval_split, "test | train | all");
    eval->add_option("--out", eval_out);

    // ------------------------------------------------------------ report
    auto* rep = app.add_subcommand(
        "report", "aggregate evaluation reports into tables and curves");
    std::vector<std::string> rep_inputs;
    std::string rep_out_dir = "reports", rep_store, rep_grid;
    std::vector<std::string> rep_series;
    rep->add_option("--reports", rep_inputs, "evaluation report JSON files")
        ->delimiter(',');
    rep->add_option("--store", rep_store, "store for the sorted loading curve");
    rep->add_option("--grid", rep_grid, "grid for --series curves");
    rep->add_option("--series", rep_series, "series CSVs for sorted P curves")
        ->delimiter(',');
    rep->add_option("--out-dir", rep_out_dir);

    // ---------------------------------------------------------- pipeline
    auto* pipe = app.add_subcommand(
        "pipeline", "simulate, train, predict and evaluate end to end");
    std::string pipe_grid, pipe_series, pipe_out = "out", pipe_model = "mlp";
    gs::PipelineConfig pipe_cfg;
    std::string pipe_thresholds = "0.2", pipe_factors = "0.94,0.96,0.98,1.0";
    double pipe_curtail = 0.0;
    bool pipe_scenario = false, pipe_no_smote = false;
    pipe->add_option("--grid", pipe_grid, "grid file or demo3|demo9")->required();
    pipe->add_option("--series", pipe_series, "series CSV or demo-year")
        ->required();
    pipe->add_option("--train-frac", pipe_cfg.train_fraction);
    pipe->add_option("--model", pipe_model, "mlp|ridge|tree|forest|knn");
    pipe->add_option("--thresholds", pipe_thresholds);
    pipe->add_option("--factors", pipe_factors);
    pipe->add_flag("--no-smote", pipe_no_smote, "skip the oversampling variant");
    pipe->add_option("--curtail", pipe_curtail,
                     "run the curtailment study at this energy fraction");
    pipe->add_flag("--scenario", pipe_scenario, "run the scenario-training study");
    pipe->add_option("--pf-tol", pipe_cfg.power_flow.tolerance);
    pipe->add_option("--pf-max-iter", pipe_cfg.power_flow.max_iterations);
    pipe->add_option("--out-dir", pipe_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) {
            const gs::Grid grid = resolve_grid(sim_grid);
            const gs::TimeSeries ts =
                resolve_series(sim_series, grid, global.seed);
            const gs::CaseEnumeration e = gs::enumerate_cases(grid);
            std::vector<gs::ContingencyCase> cases =
                sim_cases == "base"
                    ? std::vector<gs::ContingencyCase>{e.cases[0]}
                    : e.cases;
            for (const std::string& l : e.islanding_lines)
                std::cerr << "excluded islanding outage: " << l << "\n";
            const std::vector<int> steps =
                parse_steps(sim_steps, ts.step_count(), global.seed);
            gs::SweepOptions opt;
            opt.power_flow = pf_opt;
            opt.workers = global.workers;
            const gs::SweepResultStore store =
                gs::run_sweep(grid, ts, cases, steps, opt);
            store.save(sim_out);
            int nonconv = 0;
            for (const gs::SweepRecord& r : store.records())
                nonconv += !r.converged;
            std::cerr << "sweep: " << cases.size() << " cases x " << steps.size()
                      << " steps = " << store.records().size() << " records ("
                      << nonconv << " non-converged) in "
                      << store.timing().total_seconds << " s, "
                      << store.timing().mean_solve_seconds * 1e3
                      << " ms per solve (seed " << global.seed << ")\n";
        } else if (mk->parsed()) {
            const gs::Grid grid = resolve_grid(mk_grid);
            gs::fixtures::make_synthetic_year(grid, mk_steps, global.seed,
                                              mk_resolution)
                .write_csv(mk_out);
            std::cerr << "wrote " << mk_out << " (seed " << global.seed << ")\n";
        } else if (scen->parsed()) {
            const gs::Grid grid = resolve_grid(scen_grid);
            scen_cfg.seed = global.seed;
            gs::generate_scenarios(grid, scen_cfg).write_csv(scen_out);
            std::cerr << "wrote " << scen_out << " (seed " << global.seed << ")\n";
        } else if (curt->parsed()) {
            const gs::Grid grid = resolve_grid(curt_grid);
            const gs::TimeSeries ts =
                resolve_series(curt_series, grid, global.seed);
            gs::apply_curtailment(grid, ts, curt_fraction).write_csv(curt_out);
            log_line(global, "wrote " + curt_out);
        } else if (data->parsed()) {
            const gs::Grid grid = resolve_grid(data_grid);
            const gs::TimeSeries ts =
                resolve_series(data_series, grid, global.seed);
            const gs::SweepResultStore store =
                gs::SweepResultStore::load(data_store);
            data_opt.seed = global.seed;
            const gs::DatasetMode mode = gs::dataset_mode_from_string(data_mode);
            const gs::Dataset ds =
                data_multicase
                    ? gs::build_multicase_dataset(grid, ts, store, mode, data_opt)
                    : gs::build_dataset(grid, ts, store, data_case, mode,
                                        data_opt);
            ds.save(data_out);
            std::cerr << "wrote " << data_out << " (seed " << global.seed << ")\n";
        } else if (train->parsed()) {
            const gs::Dataset ds = gs::Dataset::load(train_data);
            std::vector<int> hidden;
            for (double h : parse_doubles(mlp_hidden))
                hidden.push_back(static_cast<int>(h));
            train_cfg.mlp.hidden = hidden;
            const auto t0 = std::chrono::steady_clock::now();
            const gs::SurrogateModel model = gs::train_surrogate(
                ds, gs::model_kind_from_string(train_model), train_cfg,
                global.seed);
            model.save(train_out);
            std::cerr << "trained " << train_model << " on "
                      << ds.train_rows.size() << " rows in "
                      << std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count()
                      << " s (seed " << global.seed << ")\n";
        } else if (pred->parsed()) {
            const gs::SurrogateModel model = gs::SurrogateModel::load(pred_model);
            const gs::Dataset ds = gs::Dataset::load(pred_data);
            write_predictions(pred_out, model, ds);
            log_line(global, "wrote " + pred_out);
        } else if (eval->parsed()) {
            const Predictions pr = read_predictions(eval_pred);
            const gs::SweepResultStore store =
                gs::SweepResultStore::load(eval_truth);
            const json report = evaluate_predictions(
                pr, store, parse_doubles(eval_thresholds),
                parse_doubles(eval_factors), eval_split);
            gs::write_text_file(eval_out, report.dump(2) + "\n");
            log_line(global, "wrote " + eval_out);
        } else if (rep->parsed()) {
            std::filesystem::create_directories(rep_out_dir);
            json summary;
            summary["reports"] = json::array();
            std::map<std::string, gs::ConfusionCounts> aggregate;
            for (const std::string& path : rep_inputs) {
                const json r = json::parse(gs::read_text_file(path));
                summary["reports"].push_back(r);
                if (r.contains("thresholds")) {
                    for (const json& t : r.at("thresholds")) {
                        const gs::Metrics m =
                            gs::metrics_from_json(t.at("metrics"));
                        aggregate["classification@" +
                                  t.at("threshold").dump()] += m.counts;
                    }
                }
                if (r.contains("factors")) {
                    for (const json& f : r.at("factors")) {
                        const gs::Metrics m =
                            gs::metrics_from_json(f.at("metrics"));
                        aggregate["regression@" + f.at("factor").dump()] +=
                            m.counts;
                    }
                }
            }
            std::vector<gs::MetricsRow> rows;
            json jagg;
            for (const auto& [label, counts] : aggregate) {
                const gs::Metrics m = gs::compute_metrics(counts);
                rows.push_back({label, m});
                jagg[label] = gs::metrics_to_json(m);
            }
            summary["aggregate"] = std::move(jagg);
            gs::write_text_file(rep_out_dir + "/summary.json",
                                summary.dump(2) + "\n");
            if (!rows.empty())
                gs::write_metrics_csv(rep_out_dir + "/metrics.csv", rows);
            if (!rep_store.empty()) {
                const gs::SweepResultStore store =
                    gs::SweepResultStore::load(rep_store);
                const int base = store.case_position(0);
                Eigen::VectorXd curve(store.steps().size());
                for (std::size_t s = 0; s < store.steps().size(); ++s) {
                    const gs::SweepRecord& r =
                        store.record(base, static_cast<int>(s));
                    curve[s] = r.converged ? r.loading.maxCoeff() : 0.0;
                }
                gs::write_curve_csv(
                    rep_out_dir + "/sorted_max_loading.csv",
                    {{"base_case_max_loading_pct",
                      gs::sorted_annual_curve(curve)}});
            }
            if (!rep_series.empty()) {
                if (rep_grid.empty())
                    throw std::invalid_argument("--series needs --grid");
                const gs::Grid grid = resolve_grid(rep_grid);
                std::vector<std::pair<std::string, Eigen::VectorXd>> curves;
                for (const std::string& s : rep_series) {
                    const gs::TimeSeries ts = resolve_series(s, grid, global.seed);
                    Eigen::VectorXd total = Eigen::VectorXd::Zero(ts.step_count());
                    for (const auto& [id, col] : ts.columns())
                        for (int t = 0; t < ts.step_count(); ++t)
                            total[t] += col.p[t];
                    curves.emplace_back(
                        std::filesystem::path(s).stem().string(),
                        gs::sorted_annual_curve(total));
                }
                gs::write_curve_csv(rep_out_dir + "/sorted_p_input.csv", curves);
            }
            log_line(global, "wrote " + rep_out_dir);
        } else if (pipe->parsed()) {
            const gs::Grid grid = resolve_grid(pipe_grid);
            const gs::TimeSeries ts =
                resolve_series(pipe_series, grid, global.seed);
            pipe_cfg.seed = global.seed;
            pipe_cfg.workers = global.workers;
            pipe_cfg.model = gs::model_kind_from_string(pipe_model);
            pipe_cfg.thresholds = parse_doubles(pipe_thresholds);
            pipe_cfg.factors = parse_doubles(pipe_factors);
            pipe_cfg.with_smote = !pipe_no_smote;
            if (pipe_curtail > 0.0) pipe_cfg.curtail_fraction = pipe_curtail;
            pipe_cfg.scenario_study = pipe_scenario;
            const gs::PipelineResult result =
                gs::run_pipeline(grid, ts, pipe_cfg);
            gs::write_pipeline_outputs(result, grid, ts, pipe_cfg, pipe_out);
            std::cerr << "pipeline: seed " << global.seed << ", "
                      << result.store.cases().size() << " cases x "
                      << result.store.steps().size()
                      << " steps; sweep " << result.timings.sweep_seconds
                      << " s (train subset "
                      << result.timings.sweep_train_subset_seconds
                      << " s), training " << result.timings.train_seconds
                      << " s, prediction " << result.timings.predict_seconds
                      << " s, total " << result.timings.total_seconds << " s\n";
            const gs::Metrics cls =
                gs::compute_metrics(result.threshold_counts[0]);
            std::cerr << "classification@" << pipe_cfg.thresholds[0]
                      << ": accuracy " << gs::format_percent(*cls.accuracy)
                      << ", fn " << cls.counts.fn << ", fp " << cls.counts.fp
                      << "\n";
            std::cerr << "regression: mean |vm err| " << result.vm_errors.mean_abs
                      << " p.u., mean |loading err| "
                      << result.loading_errors.mean_abs << " %\n";
        }
    } catch (const gs::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const gs::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
