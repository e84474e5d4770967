#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridsurrogate/common.hpp"
#include "gridsurrogate/contingency.hpp"
#include "gridsurrogate/grid.hpp"

namespace gs {

/// Fixed feature ordering: [vm_ref..., va_ref..., vm_gen..., p_bus (all
/// buses)..., q_bus (buses with known reactive injections)...].
struct FeatureLayout {
    std::vector<int> slack_buses;
    std::vector<int> pv_buses;
    std::vector<int> q_buses;  // buses carrying >=1 load or RES injector
    int n_bus = 0;

    static FeatureLayout of(const Grid& grid);

    int size() const {
        return 2 * static_cast<int>(slack_buses.size()) +
               static_cast<int>(pv_buses.size()) + n_bus +
               static_cast<int>(q_buses.size());
    }
    std::vector<std::string> names(const Grid& grid) const;

    bool operator==(const FeatureLayout&) const = default;
};

Eigen::VectorXd extract_features(const Grid& grid, const FeatureLayout& layout,
                                 const TimeSeries& ts, int step);

/// One row per entry of `steps`.
Eigen::MatrixXd extract_feature_matrix(const Grid& grid,
                                       const FeatureLayout& layout,
                                       const TimeSeries& ts,
                                       const std::vector<int>& steps);

struct TrainTestSplit {
    std::vector<int> train_ids;
    std::vector<int> test_ids;
};

/// Uniform shuffled split; |train| = floor(fraction * n). Ids are returned
/// sorted ascending within each side.
TrainTestSplit split_train_test(const std::vector<int>& step_ids,
                                double train_fraction, std::uint64_t seed);

struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  // 0 marks a constant feature (maps to 0)

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    bool operator==(const Scaler&) const = default;
};

/// Per-feature z-score statistics (population std) from training rows.
Scaler fit_scaler(const Eigen::MatrixXd& x_train);

/// Interpolation recipe: row i of the minority set, its chosen neighbour,
/// and the interpolation factor u in [0,1). Planning runs in the space
/// given (scaled); applying the plan is affine-equivariant so the caller
/// may replay it on unscaled rows.
struct SmotePlan {
    std::vector<int> base;
    std::vector<int> neighbour;
    std::vector<double> u;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x_minority) const;
};

SmotePlan smote_plan(const Eigen::MatrixXd& x_minority, int n_synthetic, int k,
                     Rng& rng);

struct SmoteResult {
    Eigen::MatrixXd x;  // minority + synthetic + majority
    Eigen::VectorXi y;  // labels aligned to x
};

/// Balances the two classes to parity by synthesising minority samples.
SmoteResult smote_oversample(const Eigen::MatrixXd& x_minority, int minority_label,
                             const Eigen::MatrixXd& x_majority, int majority_label,
                             int k, std::uint64_t seed);

struct ScenarioConfig {
    int count = 0;
    double noise_std = 0.1;  // fraction of each unit's rated power
    std::uint64_t seed = 0;
    double load_power_factor = 0.95;
};

/// Synthetic injection states drawn from per-kind global scale factors in
/// [0, 1] with per-unit Gaussian noise, clipped to [0, p_max]. Returned as
/// a TimeSeries so the sweep and dataset machinery apply unchanged.
TimeSeries generate_scenarios(const Grid& grid, const ScenarioConfig& config);

/// Caps all RES columns at c * p_max with c chosen by bisection so the
/// summed RES energy drops by `energy_fraction` (1e-4 relative).
TimeSeries apply_curtailment(const Grid& grid, const TimeSeries& ts,
                             double energy_fraction);

enum class DatasetMode { Regression, Classification };

std::string to_string(DatasetMode m);
DatasetMode dataset_mode_from_string(const std::string& s);

/// Supervised dataset for one contingency case. X rows are unscaled; the
/// embedded scaler is fitted on the train rows only. Synthetic SMOTE rows
/// carry step_id -1 and only ever appear in the train split.
struct Dataset {
    int case_index = 0;
    DatasetMode mode = DatasetMode::Regression;
    std::vector<std::string> feature_names;
    int n_bus = 0;
    int n_line = 0;
    Eigen::MatrixXd x;
    Eigen::MatrixXd y_reg;  // [vm..., loading...], regression mode
    Eigen::VectorXi y_cls;  // ±1, classification mode
    std::vector<int> step_ids;
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    Scaler scaler;

    Eigen::MatrixXd rows(const std::vector<int>& idx, const Eigen::MatrixXd& m) const;

    std::string to_jsonl_string() const;
    void save(const std::string& path) const;
    static Dataset load(const std::string& path);
    static Dataset from_jsonl_string(const std::string& text);
};

struct DatasetOptions {
    double train_fraction = 0.1;
    std::uint64_t seed = 0;
    bool smote = false;  // classification only
    int smote_k = 5;
};

Dataset build_dataset(const Grid& grid, const TimeSeries& ts,
                      const SweepResultStore& store, int case_index,
                      DatasetMode mode, const DatasetOptions& options);

/// Non-default single-model variant: rows from every case with the case
/// index appended as one extra feature (case_index field becomes -1).
/// The train/test split is by time step, so a held-out step is unseen
/// across all cases.
Dataset build_multicase_dataset(const Grid& grid, const TimeSeries& ts,
                                const SweepResultStore& store, DatasetMode mode,
                                const DatasetOptions& options);

}  // namespace gs
