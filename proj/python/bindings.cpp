#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridsurrogate/common.hpp"
#include "gridsurrogate/contingency.hpp"
#include "gridsurrogate/dataset.hpp"
#include "gridsurrogate/fixtures.hpp"
#include "gridsurrogate/metrics.hpp"
#include "gridsurrogate/models.hpp"
#include "gridsurrogate/pipeline.hpp"
#include "gridsurrogate/power_flow.hpp"

namespace py = pybind11;
using namespace gs;

namespace {

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["tp"] = m.counts.tp;
    d["fp"] = m.counts.fp;
    d["tn"] = m.counts.tn;
    d["fn"] = m.counts.fn;
    auto opt = [](const std::optional<double>& v) -> py::object {
        if (!v) return py::none();
        return py::float_(*v);
    };
    d["recall"] = opt(m.recall);
    d["precision"] = opt(m.precision);
    d["accuracy"] = opt(m.accuracy);
    d["fpr"] = opt(m.fpr);
    d["fnr"] = opt(m.fnr);
    return d;
}

py::dict error_stats_dict(const ErrorStats& s) {
    py::dict d;
    d["mean_abs"] = s.mean_abs;
    d["max_abs"] = s.max_abs;
    d["p99_abs"] = s.p99_abs;
    return d;
}

DatasetMode mode_from(const std::string& s) { return dataset_mode_from_string(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "grid contingency simulation and surrogate-model core";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    // ------------------------------------------------------------ grid
    py::class_<Grid>(m, "Grid")
        .def_static("from_json", &grid_from_json_string, py::arg("text"))
        .def_property_readonly("n_bus", &Grid::n_bus)
        .def_property_readonly("n_line", &Grid::n_line)
        .def_property_readonly("base_mva", &Grid::base_mva)
        .def_property_readonly("base_kv", &Grid::base_kv)
        .def_property_readonly("bus_ids",
                               [](const Grid& g) {
                                   std::vector<std::string> ids;
                                   for (const Bus& b : g.buses())
                                       ids.push_back(b.id);
                                   return ids;
                               })
        .def_property_readonly("line_ids",
                               [](const Grid& g) {
                                   std::vector<std::string> ids;
                                   for (const Line& l : g.lines())
                                       ids.push_back(l.id);
                                   return ids;
                               })
        .def_property_readonly("i_limit_pct",
                               [](const Grid& g) { return g.limits().i_limit_pct; })
        .def("to_json", &Grid::to_json_string)
        .def("__repr__", [](const Grid& g) {
            return "<Grid " + std::to_string(g.n_bus()) + " buses, " +
                   std::to_string(g.n_line()) + " lines>";
        });

    m.def("load_grid", &load_grid, py::arg("path"));
    m.def("demo_grid", [](const std::string& name) {
        if (name == "demo3") return fixtures::demo3();
        if (name == "demo9") return fixtures::demo9();
        throw py::value_error("unknown demo grid \"" + name + "\"");
    });

    // ----------------------------------------------------- time series
    py::class_<TimeSeries>(m, "TimeSeries")
        .def_property_readonly("step_count", &TimeSeries::step_count)
        .def_property_readonly("resolution_min", &TimeSeries::resolution_min)
        .def("profile_ids",
             [](const TimeSeries& ts) {
                 std::vector<std::string> ids;
                 for (const auto& [id, col] : ts.columns()) ids.push_back(id);
                 return ids;
             })
        .def("p",
             [](const TimeSeries& ts, const std::string& id) {
                 const auto& v = ts.column(id).p;
                 return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size())
                     .eval();
             })
        .def("q",
             [](const TimeSeries& ts, const std::string& id) {
                 const auto& v = ts.column(id).q;
                 return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size())
                     .eval();
             })
        .def("to_csv", &TimeSeries::to_csv_string)
        .def("save", &TimeSeries::write_csv, py::arg("path"))
        .def("__repr__", [](const TimeSeries& ts) {
            return "<TimeSeries " + std::to_string(ts.step_count()) + " steps>";
        });

    m.def("load_time_series", &load_time_series, py::arg("path"), py::arg("grid"));
    m.def("make_synthetic_year", &fixtures::make_synthetic_year, py::arg("grid"),
          py::arg("steps"), py::arg("seed"), py::arg("resolution_min") = 15);
    m.def(
        "generate_scenarios",
        [](const Grid& g, int count, double noise, std::uint64_t seed,
           double power_factor) {
            ScenarioConfig cfg;
            cfg.count = count;
            cfg.noise_std = noise;
            cfg.seed = seed;
            cfg.load_power_factor = power_factor;
            return generate_scenarios(g, cfg);
        },
        py::arg("grid"), py::arg("count"), py::arg("noise") = 0.1,
        py::arg("seed") = 0, py::arg("power_factor") = 0.95);
    m.def("apply_curtailment", &apply_curtailment, py::arg("grid"), py::arg("ts"),
          py::arg("energy_fraction"));

    // ------------------------------------------------------ power flow
    m.def(
        "build_admittance",
        [](const Grid& g, const std::optional<std::string>& outage) {
            return Eigen::MatrixXcd(build_admittance(g, outage).y);
        },
        py::arg("grid"), py::arg("outage") = py::none());
    m.def("aggregate_bus_injections", &aggregate_bus_injections, py::arg("grid"),
          py::arg("ts"), py::arg("step"));

    py::class_<PowerFlowSolution>(m, "PowerFlowSolution")
        .def_readonly("vm", &PowerFlowSolution::vm)
        .def_readonly("va", &PowerFlowSolution::va)
        .def_readonly("line_loading", &PowerFlowSolution::line_loading)
        .def_readonly("converged", &PowerFlowSolution::converged)
        .def_readonly("iterations", &PowerFlowSolution::iterations)
        .def_readonly("max_mismatch", &PowerFlowSolution::max_mismatch)
        .def_readonly("failure_reason", &PowerFlowSolution::failure_reason);

    m.def(
        "solve_power_flow",
        [](const Grid& g, const TimeSeries& ts, int step,
           const std::optional<std::string>& outage, double tol, int max_iter) {
            PowerFlowOptions opt;
            opt.tolerance = tol;
            opt.max_iterations = max_iter;
            return solve_power_flow(g, build_admittance(g, outage),
                                    aggregate_bus_injections(g, ts, step), opt);
        },
        py::arg("grid"), py::arg("ts"), py::arg("step"),
        py::arg("outage") = py::none(), py::arg("tol") = 1e-8,
        py::arg("max_iter") = 30);

    m.def(
        "classify_state",
        [](const Grid& g, const PowerFlowSolution& sol) {
            const SecurityLabel label = classify_state(g, sol);
            py::list violations;
            for (const Violation& v : label.violated_elements)
                violations.append(py::make_tuple(v.element_id, v.quantity,
                                                 v.value, v.limit));
            return py::make_tuple(label.value, violations);
        },
        py::arg("grid"), py::arg("solution"));

    // ----------------------------------------------------- contingency
    m.def("enumerate_cases", [](const Grid& g) {
        const CaseEnumeration e = enumerate_cases(g);
        py::list cases;
        for (const ContingencyCase& c : e.cases) {
            cases.append(py::make_tuple(
                c.index, c.outage ? py::object(py::str(*c.outage)) : py::none()));
        }
        return py::make_tuple(cases, e.islanding_lines);
    });

    py::class_<SweepResultStore>(m, "SweepResultStore")
        .def_property_readonly("n_cases",
                               [](const SweepResultStore& s) {
                                   return s.cases().size();
                               })
        .def_property_readonly("steps", &SweepResultStore::steps)
        .def_property_readonly("n_bus", &SweepResultStore::n_bus)
        .def_property_readonly("n_line", &SweepResultStore::n_line)
        .def("case_outage",
             [](const SweepResultStore& s, int pos) -> py::object {
                 if (s.cases().at(pos).outage)
                     return py::str(*s.cases().at(pos).outage);
                 return py::none();
             })
        .def("labels",
             [](const SweepResultStore& s) {
                 const LabelMatrix lm = label_matrix(s);
                 return py::make_tuple(lm.labels, lm.converged,
                                       lm.non_converged_count);
             })
        .def("vm",
             [](const SweepResultStore& s, int case_pos, int step_pos) {
                 return s.record(case_pos, step_pos).vm;
             })
        .def("loading",
             [](const SweepResultStore& s, int case_pos, int step_pos) {
                 return s.record(case_pos, step_pos).loading;
             })
        .def("to_jsonl", &SweepResultStore::to_jsonl_string)
        .def("save", &SweepResultStore::save, py::arg("path"))
        .def_static("load", &SweepResultStore::load, py::arg("path"))
        .def("__repr__", [](const SweepResultStore& s) {
            return "<SweepResultStore " + std::to_string(s.cases().size()) +
                   " cases x " + std::to_string(s.steps().size()) + " steps>";
        });

    m.def(
        "run_sweep",
        [](const Grid& g, const TimeSeries& ts,
           const std::optional<std::vector<int>>& steps, bool base_only,
           int workers, double tol, int max_iter) {
            const CaseEnumeration e = enumerate_cases(g);
            std::vector<ContingencyCase> cases =
                base_only ? std::vector<ContingencyCase>{e.cases[0]} : e.cases;
            std::vector<int> use_steps;
            if (steps) {
                use_steps = *steps;
            } else {
                use_steps.resize(ts.step_count());
                for (int i = 0; i < ts.step_count(); ++i) use_steps[i] = i;
            }
            SweepOptions opt;
            opt.workers = workers;
            opt.power_flow.tolerance = tol;
            opt.power_flow.max_iterations = max_iter;
            return run_sweep(g, ts, cases, use_steps, opt);
        },
        py::arg("grid"), py::arg("ts"), py::arg("steps") = py::none(),
        py::arg("base_only") = false, py::arg("workers") = 1,
        py::arg("tol") = 1e-8, py::arg("max_iter") = 30);

    // --------------------------------------------------------- dataset
    py::class_<Dataset>(m, "Dataset")
        .def_readonly("case_index", &Dataset::case_index)
        .def_property_readonly(
            "mode", [](const Dataset& d) { return to_string(d.mode); })
        .def_readonly("feature_names", &Dataset::feature_names)
        .def_readonly("x", &Dataset::x)
        .def_readonly("y_reg", &Dataset::y_reg)
        .def_readonly("y_cls", &Dataset::y_cls)
        .def_readonly("step_ids", &Dataset::step_ids)
        .def_readonly("train_rows", &Dataset::train_rows)
        .def_readonly("test_rows", &Dataset::test_rows)
        .def_readonly("n_bus", &Dataset::n_bus)
        .def_readonly("n_line", &Dataset::n_line)
        .def("save", &Dataset::save, py::arg("path"))
        .def_static("load", &Dataset::load, py::arg("path"))
        .def("__repr__", [](const Dataset& d) {
            return "<Dataset case " + std::to_string(d.case_index) + ", " +
                   std::to_string(d.x.rows()) + " rows, mode " +
                   to_string(d.mode) + ">";
        });

    m.def(
        "build_dataset",
        [](const Grid& g, const TimeSeries& ts, const SweepResultStore& store,
           int case_index, const std::string& mode, double train_fraction,
           std::uint64_t seed, bool smote, int smote_k) {
            DatasetOptions opt;
            opt.train_fraction = train_fraction;
            opt.seed = seed;
            opt.smote = smote;
            opt.smote_k = smote_k;
            return build_dataset(g, ts, store, case_index, mode_from(mode), opt);
        },
        py::arg("grid"), py::arg("ts"), py::arg("store"), py::arg("case_index"),
        py::arg("mode") = "regression", py::arg("train_fraction") = 0.1,
        py::arg("seed") = 0, py::arg("smote") = false, py::arg("smote_k") = 5);

    m.def(
        "split_train_test",
        [](const std::vector<int>& ids, double fraction, std::uint64_t seed) {
            const TrainTestSplit s = split_train_test(ids, fraction, seed);
            return py::make_tuple(s.train_ids, s.test_ids);
        },
        py::arg("ids"), py::arg("train_fraction"), py::arg("seed"));

    m.def(
        "smote_oversample",
        [](const Eigen::MatrixXd& x_min, const Eigen::MatrixXd& x_maj, int k,
           std::uint64_t seed) {
            const SmoteResult r = smote_oversample(x_min, 1, x_maj, -1, k, seed);
            return py::make_tuple(r.x, r.y);
        },
        py::arg("x_minority"), py::arg("x_majority"), py::arg("k") = 5,
        py::arg("seed") = 0);

    // ---------------------------------------------------------- models
    py::class_<SurrogateModel>(m, "SurrogateModel")
        .def_property_readonly(
            "kind", [](const SurrogateModel& s) { return to_string(s.kind); })
        .def_property_readonly(
            "task", [](const SurrogateModel& s) { return to_string(s.task); })
        .def_readonly("case_index", &SurrogateModel::case_index)
        .def("predict", &SurrogateModel::predict_regression, py::arg("x"))
        .def("predict_proba", &SurrogateModel::predict_proba, py::arg("x"))
        .def("save", &SurrogateModel::save, py::arg("path"))
        .def_static("load", &SurrogateModel::load, py::arg("path"))
        .def("__repr__", [](const SurrogateModel& s) {
            return "<SurrogateModel " + to_string(s.kind) + " " +
                   to_string(s.task) + " case " + std::to_string(s.case_index) +
                   ">";
        });

    m.def(
        "train_surrogate",
        [](const Dataset& ds, const std::string& kind, std::uint64_t seed,
           std::vector<int> mlp_hidden, int mlp_epochs, double mlp_lr,
           int forest_trees, int knn_k) {
            TrainConfig cfg;
            cfg.mlp.hidden = std::move(mlp_hidden);
            cfg.mlp.max_epochs = mlp_epochs;
            cfg.mlp.learning_rate = mlp_lr;
            cfg.forest.n_trees = forest_trees;
            cfg.knn_k = knn_k;
            return train_surrogate(ds, model_kind_from_string(kind), cfg, seed);
        },
        py::arg("dataset"), py::arg("kind") = "mlp", py::arg("seed") = 0,
        py::arg("mlp_hidden") = std::vector<int>{100, 100},
        py::arg("mlp_epochs") = 500, py::arg("mlp_lr") = 1e-3,
        py::arg("forest_trees") = 100, py::arg("knn_k") = 5);

    m.def(
        "classify_from_regression",
        [](const Grid& g, const Eigen::MatrixXd& y_hat, double factor) {
            return classify_from_regression(y_hat, g.n_bus(), g.limits(), factor);
        },
        py::arg("grid"), py::arg("y_hat"), py::arg("factor") = 1.0);
    m.def("classify_from_probability", &classify_from_probability, py::arg("p"),
          py::arg("threshold") = 0.2);

    // --------------------------------------------------------- metrics
    m.def(
        "confusion_counts",
        [](const Eigen::VectorXi& pred, const Eigen::VectorXi& truth) {
            const ConfusionCounts c = confusion_counts(pred, truth);
            py::dict d;
            d["tp"] = c.tp;
            d["fp"] = c.fp;
            d["tn"] = c.tn;
            d["fn"] = c.fn;
            return d;
        },
        py::arg("predicted"), py::arg("truth"));
    m.def(
        "compute_metrics",
        [](std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn) {
            ConfusionCounts c;
            c.tp = tp;
            c.fp = fp;
            c.tn = tn;
            c.fn = fn;
            return metrics_dict(compute_metrics(c));
        },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));
    m.def(
        "regression_errors",
        [](const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y_true) {
            return error_stats_dict(regression_errors(y_hat, y_true));
        },
        py::arg("y_hat"), py::arg("y_true"));
    m.def("sorted_annual_curve", &sorted_annual_curve, py::arg("values"));

    // -------------------------------------------------------- pipeline
    m.def(
        "run_pipeline",
        [](const Grid& g, const TimeSeries& ts, double train_fraction,
           std::uint64_t seed, int workers, const std::string& model,
           std::vector<double> thresholds, std::vector<double> factors,
           bool smote, std::optional<double> curtail, bool scenario,
           const std::optional<std::string>& out_dir) {
            PipelineConfig cfg;
            cfg.train_fraction = train_fraction;
            cfg.seed = seed;
            cfg.workers = workers;
            cfg.model = model_kind_from_string(model);
            cfg.thresholds = std::move(thresholds);
            cfg.factors = std::move(factors);
            cfg.with_smote = smote;
            cfg.curtail_fraction = curtail;
            cfg.scenario_study = scenario;
            const PipelineResult r = run_pipeline(g, ts, cfg);
            if (out_dir) write_pipeline_outputs(r, g, ts, cfg, *out_dir);

            py::dict d;
            d["cases"] = r.store.cases().size();
            d["steps"] = r.store.steps().size();
            d["records"] = r.store.records().size();
            d["islanding_excluded"] = r.islanding_lines;
            d["vm_errors"] = error_stats_dict(r.vm_errors);
            d["loading_errors"] = error_stats_dict(r.loading_errors);
            py::list jt;
            for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
                py::dict e;
                e["threshold"] = cfg.thresholds[t];
                e["classification"] =
                    metrics_dict(compute_metrics(r.threshold_counts[t]));
                e["classification_smote"] =
                    metrics_dict(compute_metrics(r.threshold_counts_smote[t]));
                jt.append(e);
            }
            d["thresholds"] = jt;
            py::list jf;
            for (std::size_t f = 0; f < cfg.factors.size(); ++f) {
                py::dict e;
                e["factor"] = cfg.factors[f];
                e["regression"] =
                    metrics_dict(compute_metrics(r.factor_counts[f]));
                jf.append(e);
            }
            d["factors"] = jf;
            if (r.has_curtail) {
                py::dict c;
                c["energy_ratio"] = r.curtailed_energy_ratio;
                c["uncurtailed_regression"] =
                    metrics_dict(compute_metrics(r.uncurt_reg));
                c["curtailed_regression"] =
                    metrics_dict(compute_metrics(r.curt_reg));
                c["uncurtailed_classification"] =
                    metrics_dict(compute_metrics(r.uncurt_cls));
                c["curtailed_classification"] =
                    metrics_dict(compute_metrics(r.curt_cls));
                d["curtailment"] = c;
            }
            if (r.has_scenario) {
                py::dict s;
                s["max_vm_error_time_series"] = r.max_vm_error;
                s["max_vm_error_scenario"] = r.max_vm_error_scenario;
                d["scenario_training"] = s;
            }
            return d;
        },
        py::arg("grid"), py::arg("ts"), py::arg("train_fraction") = 0.1,
        py::arg("seed") = 0, py::arg("workers") = 1, py::arg("model") = "mlp",
        py::arg("thresholds") = std::vector<double>{0.2},
        py::arg("factors") = std::vector<double>{0.94, 0.96, 0.98, 1.0},
        py::arg("smote") = true, py::arg("curtail") = py::none(),
        py::arg("scenario") = false, py::arg("out_dir") = py::none());

#ifdef VERSION_INFO
#define STR2(x) #x
#define STR(x) STR2(x)
    m.attr("__version__") = STR(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
