#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridsurrogate/contingency.hpp"
#include "gridsurrogate/dataset.hpp"
#include "gridsurrogate/metrics.hpp"
#include "gridsurrogate/models.hpp"

namespace gs {

/// The full experiment: (N+1)*T sweep as ground truth, per-case surrogate
/// training on a train fraction, evaluation on the held-out steps, with
/// optional curtailment-generalisation and scenario-training studies.
struct PipelineConfig {
    double train_fraction = 0.1;
    std::uint64_t seed = 0;
    int workers = 1;
    ModelKind model = ModelKind::Mlp;
    std::vector<double> thresholds{0.2};
    std::vector<double> factors{0.94, 0.96, 0.98, 1.0};
    bool with_smote = true;
    int smote_k = 5;
    std::optional<double> curtail_fraction;  // enables the curtailment study
    double curtail_factor = 0.96;            // regression operating point
    double curtail_threshold = 0.2;          // classifier operating point
    bool scenario_study = false;
    double scenario_noise = 0.1;
    PowerFlowOptions power_flow;
    TrainConfig train;
};

struct CaseOutcome {
    int case_index = 0;
    int usable_steps = 0;
    int train_rows = 0;
    int test_rows = 0;
    int train_positives = 0;
    bool classifier_constant = false;  // single-class train split fallback

    ErrorStats vm_errors;       // regression, test split
    ErrorStats loading_errors;  // regression, test split

    std::vector<ConfusionCounts> factor_counts;            // per config factor
    std::vector<ConfusionCounts> threshold_counts;         // classifier
    std::vector<ConfusionCounts> threshold_counts_smote;   // with oversampling

    double max_vm_error = 0.0;           // time-series-trained regressor
    double max_vm_error_scenario = 0.0;  // scenario-trained regressor
};

struct PipelineTimings {
    double sweep_seconds = 0.0;
    double sweep_train_subset_seconds = 0.0;
    double sweep_mean_solve_seconds = 0.0;
    double train_seconds = 0.0;
    double predict_seconds = 0.0;
    double curtail_sweep_seconds = 0.0;
    double scenario_seconds = 0.0;
    double total_seconds = 0.0;
};

struct PipelineResult {
    SweepResultStore store;
    std::vector<std::string> islanding_lines;
    std::vector<CaseOutcome> cases;

    // aggregates over all cases
    std::vector<ConfusionCounts> factor_counts;
    std::vector<ConfusionCounts> threshold_counts;
    std::vector<ConfusionCounts> threshold_counts_smote;
    ErrorStats vm_errors;
    ErrorStats loading_errors;

    // curtailment study (present when configured)
    bool has_curtail = false;
    double curtailed_energy_ratio = 0.0;
    ConfusionCounts uncurt_reg, curt_reg;  // regression @ curtail_factor
    ConfusionCounts uncurt_cls, curt_cls;  // classifier @ curtail_threshold

    // scenario study
    bool has_scenario = false;
    double max_vm_error = 0.0;
    double max_vm_error_scenario = 0.0;

    std::vector<std::pair<std::string, SurrogateModel>> models;
    PipelineTimings timings;
};

PipelineResult run_pipeline(const Grid& grid, const TimeSeries& ts,
                            const PipelineConfig& config);

/// Writes store.jsonl, models/, report.json, metrics.csv and the sorted
/// annual curves under out_dir. report.json carries no wall-clock values;
/// timings go to timings.json (excluded from the byte-identity contract).
void write_pipeline_outputs(const PipelineResult& result, const Grid& grid,
                            const TimeSeries& ts, const PipelineConfig& config,
                            const std::string& out_dir,
                            bool write_timings = true);

}  // namespace gs
