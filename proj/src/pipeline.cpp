#include "gridsurrogate/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "gridsurrogate/report.hpp"

namespace gs {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

ErrorStats stats_from_sorted(std::vector<double>& abs_err) {
    std::sort(abs_err.begin(), abs_err.end());
    ErrorStats s;
    if (abs_err.empty()) return s;
    s.max_abs = abs_err.back();
    double sum = 0.0;
    for (double e : abs_err) sum += e;
    s.mean_abs = sum / static_cast<double>(abs_err.size());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(abs_err.size())));
    s.p99_abs = abs_err[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

void collect_abs_errors(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y,
                        std::vector<double>& sink) {
    for (Eigen::Index r = 0; r < y_hat.rows(); ++r)
        for (Eigen::Index c = 0; c < y_hat.cols(); ++c)
            sink.push_back(std::abs(y_hat(r, c) - y(r, c)));
}

Eigen::VectorXi labels_for_rows(const Dataset& ds, const std::vector<int>& rows,
                                const SweepResultStore& store, int case_pos,
                                const std::map<int, int>& step_pos) {
    Eigen::VectorXi truth(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        truth[i] = store.record(case_pos, step_pos.at(ds.step_ids[rows[i]])).label;
    return truth;
}

}  // namespace

PipelineResult run_pipeline(const Grid& grid, const TimeSeries& ts,
                            const PipelineConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();
    PipelineResult result;

    const CaseEnumeration enumeration = enumerate_cases(grid);
    result.islanding_lines = enumeration.islanding_lines;

    std::vector<int> steps(ts.step_count());
    for (int i = 0; i < ts.step_count(); ++i) steps[i] = i;

    SweepOptions sweep_opt;
    sweep_opt.power_flow = config.power_flow;
    sweep_opt.workers = config.workers;
    result.store = run_sweep(grid, ts, enumeration.cases, steps, sweep_opt);
    result.timings.sweep_seconds = result.store.timing().total_seconds;
    result.timings.sweep_mean_solve_seconds =
        result.store.timing().mean_solve_seconds;

    std::map<int, int> step_pos;
    for (std::size_t i = 0; i < result.store.steps().size(); ++i)
        step_pos[result.store.steps()[i]] = static_cast<int>(i);

    // the paper's second timing row: the train-fraction share of the sweep
    {
        std::vector<int> ids(steps);
        const TrainTestSplit split =
            split_train_test(ids, config.train_fraction, config.seed);
        const SweepResultStore subset =
            run_sweep(grid, ts, enumeration.cases, split.train_ids, sweep_opt);
        result.timings.sweep_train_subset_seconds = subset.timing().total_seconds;
    }

    std::optional<TimeSeries> ts_curt;
    std::optional<SweepResultStore> store_curt;
    if (config.curtail_fraction) {
        ts_curt = apply_curtailment(grid, ts, *config.curtail_fraction);
        store_curt = run_sweep(grid, *ts_curt, enumeration.cases, steps, sweep_opt);
        result.timings.curtail_sweep_seconds = store_curt->timing().total_seconds;
        double before = 0.0, after = 0.0;
        for (const Injector& inj : grid.generators()) {
            if (inj.kind != InjectorKind::Res) continue;
            for (double p : ts.column(inj.profile_id).p) before += p;
            for (double p : ts_curt->column(inj.profile_id).p) after += p;
        }
        result.curtailed_energy_ratio = after / before;
        result.has_curtail = true;
    }
    result.has_scenario = config.scenario_study;

    result.factor_counts.resize(config.factors.size());
    result.threshold_counts.resize(config.thresholds.size());
    result.threshold_counts_smote.resize(config.thresholds.size());
    std::vector<double> vm_err_pool, loading_err_pool;

    DatasetOptions dopt;
    dopt.train_fraction = config.train_fraction;
    dopt.seed = config.seed;
    dopt.smote_k = config.smote_k;

    for (const ContingencyCase& cc : enumeration.cases) {
        const int k = cc.index;
        const int case_pos = result.store.case_position(k);
        CaseOutcome outcome;
        outcome.case_index = k;
        outcome.factor_counts.resize(config.factors.size());
        outcome.threshold_counts.resize(config.thresholds.size());
        outcome.threshold_counts_smote.resize(config.thresholds.size());

        // ---------------------------------------------------- regression
        const Dataset reg =
            build_dataset(grid, ts, result.store, k, DatasetMode::Regression, dopt);
        outcome.usable_steps = static_cast<int>(reg.x.rows());
        outcome.train_rows = static_cast<int>(reg.train_rows.size());
        outcome.test_rows = static_cast<int>(reg.test_rows.size());

        auto t_train = std::chrono::steady_clock::now();
        const SurrogateModel model_reg = train_surrogate(
            reg, config.model, config.train,
            derive_seed(config.seed, 0x7265670000ULL + static_cast<std::uint64_t>(k)));
        result.timings.train_seconds += seconds_since(t_train);

        const Eigen::MatrixXd x_test = reg.rows(reg.test_rows, reg.x);
        const Eigen::MatrixXd y_test = reg.rows(reg.test_rows, reg.y_reg);
        auto t_pred = std::chrono::steady_clock::now();
        const Eigen::MatrixXd y_hat = model_reg.predict_regression(x_test);
        result.timings.predict_seconds += seconds_since(t_pred);

        std::vector<double> vm_err, loading_err;
        collect_abs_errors(y_hat.leftCols(reg.n_bus), y_test.leftCols(reg.n_bus),
                           vm_err);
        collect_abs_errors(y_hat.rightCols(reg.n_line),
                           y_test.rightCols(reg.n_line), loading_err);
        vm_err_pool.insert(vm_err_pool.end(), vm_err.begin(), vm_err.end());
        loading_err_pool.insert(loading_err_pool.end(), loading_err.begin(),
                                loading_err.end());
        outcome.max_vm_error = vm_err.empty() ? 0.0 : *std::max_element(
                                                          vm_err.begin(),
                                                          vm_err.end());
        outcome.vm_errors = stats_from_sorted(vm_err);
        outcome.loading_errors = stats_from_sorted(loading_err);

        const Eigen::VectorXi truth =
            labels_for_rows(reg, reg.test_rows, result.store, case_pos, step_pos);
        for (std::size_t f = 0; f < config.factors.size(); ++f) {
            const ConfusionCounts c = confusion_counts(
                classify_from_regression(y_hat, reg.n_bus, grid.limits(),
                                         config.factors[f]),
                truth);
            outcome.factor_counts[f] = c;
            result.factor_counts[f] += c;
        }

        // ------------------------------------------------ classification
        const Dataset cls = build_dataset(grid, ts, result.store, k,
                                          DatasetMode::Classification, dopt);
        int positives = 0;
        for (int r : cls.train_rows) positives += cls.y_cls[r] > 0;
        outcome.train_positives = positives;
        const bool two_class =
            positives > 0 && positives < static_cast<int>(cls.train_rows.size());
        outcome.classifier_constant = !two_class;

        Eigen::VectorXd p_plain, p_smote;
        std::optional<SurrogateModel> model_cls;
        const Eigen::MatrixXd x_cls_test = cls.rows(cls.test_rows, cls.x);
        if (two_class) {
            t_train = std::chrono::steady_clock::now();
            model_cls = train_surrogate(
                cls, config.model, config.train,
                derive_seed(config.seed,
                            0x636c730000ULL + static_cast<std::uint64_t>(k)));
            result.timings.train_seconds += seconds_since(t_train);
            t_pred = std::chrono::steady_clock::now();
            p_plain = model_cls->predict_proba(x_cls_test);
            result.timings.predict_seconds += seconds_since(t_pred);
            result.models.emplace_back("case_" + std::to_string(k) + "_cls",
                                       *model_cls);

            p_smote = p_plain;
            if (config.with_smote && positives >= 2 &&
                static_cast<int>(cls.train_rows.size()) - positives >= 2) {
                DatasetOptions smote_opt = dopt;
                smote_opt.smote = true;
                const Dataset cls_smote =
                    build_dataset(grid, ts, result.store, k,
                                  DatasetMode::Classification, smote_opt);
                t_train = std::chrono::steady_clock::now();
                const SurrogateModel model_smote = train_surrogate(
                    cls_smote, config.model, config.train,
                    derive_seed(config.seed,
                                0x636c730000ULL + static_cast<std::uint64_t>(k)));
                result.timings.train_seconds += seconds_since(t_train);
                p_smote = model_smote.predict_proba(x_cls_test);
                result.models.emplace_back(
                    "case_" + std::to_string(k) + "_cls_smote", model_smote);
            }
        } else {
            // single-class train split: constant probability fallback
            const double p0 = positives > 0 ? 1.0 : 0.0;
            p_plain = Eigen::VectorXd::Constant(cls.test_rows.size(), p0);
            p_smote = p_plain;
        }

        Eigen::VectorXi cls_truth(cls.test_rows.size());
        for (std::size_t i = 0; i < cls.test_rows.size(); ++i)
            cls_truth[i] = cls.y_cls[cls.test_rows[i]];
        for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
            const ConfusionCounts plain = confusion_counts(
                classify_from_probability(p_plain, config.thresholds[t]),
                cls_truth);
            const ConfusionCounts smote = confusion_counts(
                classify_from_probability(p_smote, config.thresholds[t]),
                cls_truth);
            outcome.threshold_counts[t] = plain;
            outcome.threshold_counts_smote[t] = smote;
            result.threshold_counts[t] += plain;
            result.threshold_counts_smote[t] += smote;
        }

        // ------------------------------------------- curtailment study
        if (store_curt) {
            const Dataset reg_c = build_dataset(grid, *ts_curt, *store_curt, k,
                                                DatasetMode::Regression, dopt);
            std::map<int, int> curt_step_pos;
            for (std::size_t i = 0; i < store_curt->steps().size(); ++i)
                curt_step_pos[store_curt->steps()[i]] = static_cast<int>(i);
            const Eigen::MatrixXd x_curt = reg_c.rows(reg_c.test_rows, reg_c.x);
            const Eigen::MatrixXd y_hat_curt = model_reg.predict_regression(x_curt);
            const Eigen::VectorXi truth_curt =
                labels_for_rows(reg_c, reg_c.test_rows, *store_curt,
                                store_curt->case_position(k), curt_step_pos);
            result.uncurt_reg += confusion_counts(
                classify_from_regression(y_hat, reg.n_bus, grid.limits(),
                                         config.curtail_factor),
                truth);
            result.curt_reg += confusion_counts(
                classify_from_regression(y_hat_curt, reg_c.n_bus, grid.limits(),
                                         config.curtail_factor),
                truth_curt);
            const Eigen::VectorXd p_curt =
                model_cls ? model_cls->predict_proba(x_curt)
                          : Eigen::VectorXd::Constant(reg_c.test_rows.size(),
                                                      positives > 0 ? 1.0 : 0.0);
            result.uncurt_cls += confusion_counts(
                classify_from_probability(p_plain, config.curtail_threshold),
                cls_truth);
            result.curt_cls += confusion_counts(
                classify_from_probability(p_curt, config.curtail_threshold),
                truth_curt);
        }

        // ---------------------------------------------- scenario study
        if (config.scenario_study) {
            const auto t_scen = std::chrono::steady_clock::now();
            ScenarioConfig scen_cfg;
            scen_cfg.count = static_cast<int>(reg.train_rows.size());
            scen_cfg.noise_std = config.scenario_noise;
            scen_cfg.seed = derive_seed(
                config.seed, 0x7363656e0000ULL + static_cast<std::uint64_t>(k));
            const TimeSeries scen = generate_scenarios(grid, scen_cfg);
            std::vector<int> scen_steps(scen_cfg.count);
            for (int i = 0; i < scen_cfg.count; ++i) scen_steps[i] = i;
            const SweepResultStore scen_store =
                run_sweep(grid, scen, {cc}, scen_steps, sweep_opt);
            DatasetOptions scen_opt = dopt;
            scen_opt.train_fraction = 0.999;  // scenarios are train-only
            const Dataset scen_reg = build_dataset(grid, scen, scen_store, k,
                                                   DatasetMode::Regression,
                                                   scen_opt);
            const SurrogateModel scen_model = train_surrogate(
                scen_reg, config.model, config.train,
                derive_seed(config.seed,
                            0x7363000000ULL + static_cast<std::uint64_t>(k)));
            const Eigen::MatrixXd y_hat_scen = scen_model.predict_regression(x_test);
            outcome.max_vm_error_scenario =
                (y_hat_scen.leftCols(reg.n_bus) - y_test.leftCols(reg.n_bus))
                    .cwiseAbs()
                    .maxCoeff();
            result.timings.scenario_seconds += seconds_since(t_scen);
        }

        result.models.emplace_back("case_" + std::to_string(k) + "_reg",
                                   model_reg);
        result.cases.push_back(std::move(outcome));
    }

    result.vm_errors = stats_from_sorted(vm_err_pool);
    result.loading_errors = stats_from_sorted(loading_err_pool);
    for (const CaseOutcome& c : result.cases) {
        result.max_vm_error = std::max(result.max_vm_error, c.max_vm_error);
        result.max_vm_error_scenario =
            std::max(result.max_vm_error_scenario, c.max_vm_error_scenario);
    }
    result.timings.total_seconds = seconds_since(t_start);
    return result;
}

namespace {

json counts_with_metrics(const ConfusionCounts& c) {
    return metrics_to_json(compute_metrics(c));
}

}  // namespace

void write_pipeline_outputs(const PipelineResult& result, const Grid&,
                            const TimeSeries& ts, const PipelineConfig& config,
                            const std::string& out_dir, bool write_timings) {
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/models");
    fs::create_directories(out_dir + "/curves");

    result.store.save(out_dir + "/store.jsonl");
    for (const auto& [name, model] : result.models)
        model.save(out_dir + "/models/" + name + ".json");

    json report;
    report["grid_hash"] = result.store.grid_hash();
    report["cases"] = result.store.cases().size();
    report["steps"] = result.store.steps().size();
    report["records"] = result.store.records().size();
    report["islanding_excluded"] = result.islanding_lines;
    report["train_fraction"] = config.train_fraction;
    report["seed"] = config.seed;
    report["model"] = to_string(config.model);

    report["regression_errors"] =
        json{{"vm", error_stats_to_json(result.vm_errors)},
             {"loading", error_stats_to_json(result.loading_errors)}};

    json thresholds = json::array();
    for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
        thresholds.push_back(
            json{{"threshold", config.thresholds[t]},
                 {"classification", counts_with_metrics(result.threshold_counts[t])},
                 {"classification_smote",
                  counts_with_metrics(result.threshold_counts_smote[t])}});
    }
    report["thresholds"] = std::move(thresholds);

    json factors = json::array();
    for (std::size_t f = 0; f < config.factors.size(); ++f) {
        factors.push_back(json{{"factor", config.factors[f]},
                               {"regression",
                                counts_with_metrics(result.factor_counts[f])}});
    }
    report["factors"] = std::move(factors);

    json cases = json::array();
    for (const CaseOutcome& c : result.cases) {
        json jc;
        jc["case"] = c.case_index;
        const auto& cc = result.store.cases()[result.store.case_position(
            c.case_index)];
        jc["outage"] = cc.outage ? json(*cc.outage) : json(nullptr);
        jc["usable_steps"] = c.usable_steps;
        jc["train_rows"] = c.train_rows;
        jc["test_rows"] = c.test_rows;
        jc["train_positives"] = c.train_positives;
        jc["classifier_constant"] = c.classifier_constant;
        jc["vm_errors"] = error_stats_to_json(c.vm_errors);
        jc["loading_errors"] = error_stats_to_json(c.loading_errors);
        cases.push_back(std::move(jc));
    }
    report["per_case"] = std::move(cases);

    if (result.has_curtail) {
        report["curtailment"] = json{
            {"fraction", *config.curtail_fraction},
            {"energy_ratio", result.curtailed_energy_ratio},
            {"regression_factor", config.curtail_factor},
            {"classification_threshold", config.curtail_threshold},
            {"uncurtailed",
             json{{"regression", counts_with_metrics(result.uncurt_reg)},
                  {"classification", counts_with_metrics(result.uncurt_cls)}}},
            {"curtailed",
             json{{"regression", counts_with_metrics(result.curt_reg)},
                  {"classification", counts_with_metrics(result.curt_cls)}}}};
    }
    if (result.has_scenario) {
        report["scenario_training"] =
            json{{"noise_std", config.scenario_noise},
                 {"max_vm_error_time_series", result.max_vm_error},
                 {"max_vm_error_scenario", result.max_vm_error_scenario}};
    }
    write_text_file(out_dir + "/report.json", report.dump(2) + "\n");

    // Table-3-shaped CSV rows
    std::vector<MetricsRow> rows;
    for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
        rows.push_back({"classification@" + std::to_string(config.thresholds[t]),
                        compute_metrics(result.threshold_counts[t])});
        rows.push_back(
            {"classification_smote@" + std::to_string(config.thresholds[t]),
             compute_metrics(result.threshold_counts_smote[t])});
    }
    for (std::size_t f = 0; f < config.factors.size(); ++f)
        rows.push_back({"regression@" + std::to_string(config.factors[f]),
                        compute_metrics(result.factor_counts[f])});
    write_metrics_csv(out_dir + "/metrics.csv", rows);

    // sorted annual curves: base-case max loading and total P input
    const int base_pos = result.store.case_position(0);
    const int n_steps = static_cast<int>(result.store.steps().size());
    Eigen::VectorXd max_loading(n_steps);
    for (int s = 0; s < n_steps; ++s) {
        const SweepRecord& r = result.store.record(base_pos, s);
        max_loading[s] = r.converged ? r.loading.maxCoeff() : 0.0;
    }
    Eigen::VectorXd p_input = Eigen::VectorXd::Zero(ts.step_count());
    for (const auto& [id, col] : ts.columns())
        for (int t = 0; t < ts.step_count(); ++t) p_input[t] += col.p[t];
    write_curve_csv(out_dir + "/curves/sorted_max_loading.csv",
                    {{"base_case_max_loading_pct",
                      sorted_annual_curve(max_loading)}});
    write_curve_csv(out_dir + "/curves/sorted_p_input.csv",
                    {{"total_p_input_pu", sorted_annual_curve(p_input)}});

    if (write_timings) {
        json t;
        t["sweep_seconds"] = result.timings.sweep_seconds;
        t["sweep_train_subset_seconds"] =
            result.timings.sweep_train_subset_seconds;
        t["sweep_mean_solve_seconds"] = result.timings.sweep_mean_solve_seconds;
        t["train_seconds"] = result.timings.train_seconds;
        t["predict_seconds"] = result.timings.predict_seconds;
        t["curtail_sweep_seconds"] = result.timings.curtail_sweep_seconds;
        t["scenario_seconds"] = result.timings.scenario_seconds;
        t["total_seconds"] = result.timings.total_seconds;
        write_text_file(out_dir + "/timings.json", t.dump(2) + "\n");
    }
}

}  // namespace gs
