#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gridsurrogate/models.hpp"

namespace gs {

namespace {

// Targets arrive as a dense matrix: regression columns as-is,
// classification as {-1,+1} indicator columns so both criteria reduce to
// running sums. Cost is summed SSE (regression) or n * gini
// (classification, where sum of squares of indicators equals the sum).
struct Builder {
    const Eigen::MatrixXd& x;
    const Eigen::MatrixXd& y;
    bool classification;
    TreeConfig config;
    Rng* rng;
    std::vector<TreeNode> nodes;

    double node_cost(double n, const Eigen::VectorXd& sum,
                     const Eigen::VectorXd& sumsq) const {
        if (classification) return n - sum.squaredNorm() / n;
        return (sumsq.array() - sum.array().square() / n).sum();
    }

    int build(std::vector<int>& idx, int begin, int end, int depth) {
        const int n = end - begin;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(y.cols());
        Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(y.cols());
        for (int i = begin; i < end; ++i) {
            sum += y.row(idx[i]);
            sumsq += y.row(idx[i]).array().square().matrix();
        }

        const int node_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[node_id].value = sum / n;

        const double cost_here = node_cost(n, sum, sumsq);
        const bool can_split =
            n >= config.min_samples_split &&
            (config.max_depth < 0 || depth < config.max_depth) &&
            cost_here > 1e-12;
        if (!can_split) return node_id;

        // candidate features: all, or an mtry subset drawn per node
        const int d = static_cast<int>(x.cols());
        std::vector<int> features(d);
        std::iota(features.begin(), features.end(), 0);
        int n_try = d;
        if (config.mtry > 0 && config.mtry < d && rng != nullptr) {
            n_try = config.mtry;
            for (int i = 0; i < n_try; ++i) {
                const std::size_t j = i + rng->below(d - i);
                std::swap(features[i], features[j]);
            }
            std::sort(features.begin(), features.begin() + n_try);
        }

        double best_cost = cost_here - 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<int> order(idx.begin() + begin, idx.begin() + end);
        std::vector<int> best_order;

        for (int fi = 0; fi < n_try; ++fi) {
            const int f = features[fi];
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (x(a, f) != x(b, f)) return x(a, f) < x(b, f);
                return a < b;
            });
            Eigen::VectorXd lsum = Eigen::VectorXd::Zero(y.cols());
            Eigen::VectorXd lsumsq = Eigen::VectorXd::Zero(y.cols());
            for (int i = 1; i < n; ++i) {
                lsum += y.row(order[i - 1]);
                lsumsq += y.row(order[i - 1]).array().square().matrix();
                if (x(order[i - 1], f) == x(order[i], f)) continue;
                if (i < config.min_samples_leaf ||
                    n - i < config.min_samples_leaf)
                    continue;
                const double cost =
                    node_cost(i, lsum, lsumsq) +
                    node_cost(n - i, sum - lsum, sumsq - lsumsq);
                if (cost < best_cost) {
                    best_cost = cost;
                    best_feature = f;
                    best_threshold = 0.5 * (x(order[i - 1], f) + x(order[i], f));
                    best_order = order;
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::copy(best_order.begin(), best_order.end(), idx.begin() + begin);
        int mid = begin;
        while (mid < end && x(idx[mid], best_feature) <= best_threshold) ++mid;

        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        const int left = build(idx, begin, mid, depth + 1);
        nodes[node_id].left = left;
        const int right = build(idx, mid, end, depth + 1);
        nodes[node_id].right = right;
        return node_id;
    }
};

TreeModel train_tree_impl(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          bool classification, const TreeConfig& config,
                          Rng* rng) {
    if (x.rows() == 0) throw std::invalid_argument("tree training: empty input");
    if (x.rows() != y.rows())
        throw std::invalid_argument("tree training: X and Y row counts differ");
    Builder b{x, y, classification, config, rng, {}};
    std::vector<int> idx(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
    b.build(idx, 0, static_cast<int>(idx.size()), 0);
    TreeModel model;
    model.nodes = std::move(b.nodes);
    model.classification = classification;
    model.n_outputs = static_cast<int>(y.cols());
    return model;
}

Eigen::MatrixXd indicator_matrix(const Eigen::VectorXi& y) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(y.size(), 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 1 && y[i] != -1)
            throw std::invalid_argument("classifier labels must be -1 or +1");
        m(i, y[i] > 0 ? 1 : 0) = 1.0;
    }
    return m;
}

}  // namespace

TreeModel train_tree(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const TreeConfig& config, Rng* rng) {
    return train_tree_impl(x, y, false, config, rng);
}

TreeModel train_tree_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                const TreeConfig& config, Rng* rng) {
    return train_tree_impl(x, indicator_matrix(y), true, config, rng);
}

namespace {

const TreeNode& descend(const TreeModel& model, const Eigen::RowVectorXd& row) {
    int at = 0;
    while (model.nodes[at].feature >= 0) {
        const TreeNode& nd = model.nodes[at];
        at = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return model.nodes[at];
}

}  // namespace

Eigen::MatrixXd tree_predict(const TreeModel& model, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), model.n_outputs);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        out.row(r) = descend(model, x.row(r)).value.transpose();
    return out;
}

Eigen::VectorXd tree_predict_proba(const TreeModel& model,
                                   const Eigen::MatrixXd& x) {
    if (!model.classification)
        throw std::invalid_argument("predict_proba needs a classifier tree");
    Eigen::VectorXd p(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        p[r] = descend(model, x.row(r)).value[1];
    return p;
}

namespace {

ForestModel train_forest_impl(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              bool classification, const ForestConfig& config,
                              std::uint64_t seed) {
    if (config.n_trees < 1)
        throw std::invalid_argument("forest needs at least one tree");
    const int d = static_cast<int>(x.cols());
    TreeConfig tree_config = config.tree;
    if (config.mtry >= 0) {
        tree_config.mtry = config.mtry;
    } else {
        tree_config.mtry =
            classification
                ? std::max(1, static_cast<int>(std::floor(std::sqrt(d))))
                : std::max(1, d / 3);
    }
    ForestModel forest;
    forest.classification = classification;
    for (int t = 0; t < config.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        Eigen::MatrixXd xs, ys;
        if (config.bootstrap) {
            const Eigen::Index n = x.rows();
            xs.resize(n, x.cols());
            ys.resize(n, y.cols());
            for (Eigen::Index i = 0; i < n; ++i) {
                const std::size_t j = rng.below(n);
                xs.row(i) = x.row(j);
                ys.row(i) = y.row(j);
            }
        } else {
            xs = x;
            ys = y;
        }
        forest.trees.push_back(
            train_tree_impl(xs, ys, classification, tree_config, &rng));
    }
    return forest;
}

}  // namespace

ForestModel train_forest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const ForestConfig& config, std::uint64_t seed) {
    return train_forest_impl(x, y, false, config, seed);
}

ForestModel train_forest_classifier(const Eigen::MatrixXd& x,
                                    const Eigen::VectorXi& y,
                                    const ForestConfig& config,
                                    std::uint64_t seed) {
    return train_forest_impl(x, indicator_matrix(y), true, config, seed);
}

Eigen::MatrixXd forest_predict(const ForestModel& model,
                               const Eigen::MatrixXd& x) {
    Eigen::MatrixXd sum =
        Eigen::MatrixXd::Zero(x.rows(), model.trees.at(0).n_outputs);
    for (const TreeModel& t : model.trees) sum += tree_predict(t, x);
    return sum / static_cast<double>(model.trees.size());
}

Eigen::VectorXd forest_predict_proba(const ForestModel& model,
                                     const Eigen::MatrixXd& x) {
    if (!model.classification)
        throw std::invalid_argument("predict_proba needs a classifier forest");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.rows());
    for (const TreeModel& t : model.trees) sum += tree_predict_proba(t, x);
    return sum / static_cast<double>(model.trees.size());
}

}  // namespace gs
