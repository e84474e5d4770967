#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridsurrogate/grid.hpp"

namespace gs {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
    std::int64_t correct() const { return tp + tn; }

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

/// Positive class is critical (+1).
ConfusionCounts confusion_counts(const Eigen::VectorXi& predicted,
                                 const Eigen::VectorXi& truth);

/// Ratios with zero denominators are reported absent, never as 0.
struct Metrics {
    ConfusionCounts counts;
    std::optional<double> recall;
    std::optional<double> precision;
    std::optional<double> accuracy;
    std::optional<double> fpr;
    std::optional<double> fnr;
};

Metrics compute_metrics(const ConfusionCounts& counts);

struct ErrorStats {
    double mean_abs = 0.0;
    double max_abs = 0.0;
    double p99_abs = 0.0;  // nearest-rank percentile
};

/// Absolute-error statistics over every entry of the block.
ErrorStats regression_errors(const Eigen::MatrixXd& y_hat,
                             const Eigen::MatrixXd& y_true);

/// Per-threshold metrics for probability scores (predict critical iff
/// p >= threshold).
std::vector<Metrics> threshold_sweep_probability(
    const Eigen::VectorXd& p_critical, const Eigen::VectorXi& truth,
    const std::vector<double>& thresholds);

/// Per-factor metrics for regression outputs classified against
/// factor * i_limit (vm band unscaled).
std::vector<Metrics> threshold_sweep_factor(const Eigen::MatrixXd& y_hat,
                                            int n_bus,
                                            const OperatingLimits& limits,
                                            const Eigen::VectorXi& truth,
                                            const std::vector<double>& factors);

/// Descending sort, the shape of a sorted annual curve.
Eigen::VectorXd sorted_annual_curve(const Eigen::VectorXd& values);

}  // namespace gs
