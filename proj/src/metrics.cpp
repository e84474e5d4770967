#include "gridsurrogate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridsurrogate/models.hpp"

namespace gs {

ConfusionCounts confusion_counts(const Eigen::VectorXi& predicted,
                                 const Eigen::VectorXi& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("confusion_counts: length mismatch (" +
                                    std::to_string(predicted.size()) + " vs " +
                                    std::to_string(truth.size()) + ")");
    ConfusionCounts c;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const int p = predicted[i], t = truth[i];
        if ((p != 1 && p != -1) || (t != 1 && t != -1))
            throw std::invalid_argument("confusion_counts: labels must be -1 or +1");
        if (t == 1)
            (p == 1 ? c.tp : c.fn) += 1;
        else
            (p == 1 ? c.fp : c.tn) += 1;
    }
    return c;
}

Metrics compute_metrics(const ConfusionCounts& c) {
    if (c.total() == 0)
        throw std::invalid_argument("compute_metrics: no samples");
    Metrics m;
    m.counts = c;
    auto ratio = [](std::int64_t num,
                    std::int64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.accuracy = ratio(c.correct(), c.total());
    m.fpr = ratio(c.fp, c.fp + c.tn);
    m.fnr = ratio(c.fn, c.fn + c.tp);
    return m;
}

ErrorStats regression_errors(const Eigen::MatrixXd& y_hat,
                             const Eigen::MatrixXd& y_true) {
    if (y_hat.rows() != y_true.rows() || y_hat.cols() != y_true.cols())
        throw std::invalid_argument("regression_errors: shape mismatch");
    if (y_hat.size() == 0)
        throw std::invalid_argument("regression_errors: empty input");
    std::vector<double> abs_err;
    abs_err.reserve(y_hat.size());
    for (Eigen::Index r = 0; r < y_hat.rows(); ++r)
        for (Eigen::Index c = 0; c < y_hat.cols(); ++c)
            abs_err.push_back(std::abs(y_hat(r, c) - y_true(r, c)));
    std::sort(abs_err.begin(), abs_err.end());
    ErrorStats s;
    s.max_abs = abs_err.back();
    double sum = 0.0;
    for (double e : abs_err) sum += e;
    s.mean_abs = sum / static_cast<double>(abs_err.size());
    // nearest-rank: smallest value with at least 99 % of mass at or below it
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(abs_err.size())));
    s.p99_abs = abs_err[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

std::vector<Metrics> threshold_sweep_probability(
    const Eigen::VectorXd& p_critical, const Eigen::VectorXi& truth,
    const std::vector<double>& thresholds) {
    if (thresholds.empty())
        throw std::invalid_argument("threshold sweep: no thresholds");
    std::vector<Metrics> out;
    out.reserve(thresholds.size());
    for (double thr : thresholds)
        out.push_back(compute_metrics(
            confusion_counts(classify_from_probability(p_critical, thr), truth)));
    return out;
}

std::vector<Metrics> threshold_sweep_factor(const Eigen::MatrixXd& y_hat,
                                            int n_bus,
                                            const OperatingLimits& limits,
                                            const Eigen::VectorXi& truth,
                                            const std::vector<double>& factors) {
    if (factors.empty())
        throw std::invalid_argument("threshold sweep: no factors");
    std::vector<Metrics> out;
    out.reserve(factors.size());
    for (double f : factors)
        out.push_back(compute_metrics(confusion_counts(
            classify_from_regression(y_hat, n_bus, limits, f), truth)));
    return out;
}

Eigen::VectorXd sorted_annual_curve(const Eigen::VectorXd& values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

}  // namespace gs
