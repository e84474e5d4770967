#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "gridsurrogate/models.hpp"

namespace gs {

RidgeModel train_ridge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       double alpha) {
    if (x.rows() == 0) throw std::invalid_argument("ridge: empty input");
    if (!(alpha > 0.0)) throw std::invalid_argument("ridge: alpha must be > 0");
    RidgeModel m;
    m.alpha = alpha;
    m.feature_mean = x.colwise().mean();
    m.target_mean = y.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - m.feature_mean.transpose();
    const Eigen::MatrixXd yc = y.rowwise() - m.target_mean.transpose();
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += alpha;
    m.weights = gram.ldlt().solve(xc.transpose() * yc);
    return m;
}

Eigen::MatrixXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out =
        (x.rowwise() - model.feature_mean.transpose()) * model.weights;
    out.rowwise() += model.target_mean.transpose();
    return out;
}

RidgeModel train_ridge_cv(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          std::vector<double> alphas, int folds,
                          std::uint64_t seed) {
    if (alphas.empty()) throw std::invalid_argument("ridge CV: no alphas given");
    if (folds < 2) throw std::invalid_argument("ridge CV: folds must be >= 2");
    const Eigen::Index n = x.rows();
    if (n < folds) throw std::invalid_argument("ridge CV: fewer rows than folds");
    std::sort(alphas.begin(), alphas.end());  // ties resolve to the smaller alpha

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<double> cv(alphas.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        const Eigen::Index lo = n * f / folds;
        const Eigen::Index hi = n * (f + 1) / folds;
        const Eigen::Index n_hold = hi - lo;
        const Eigen::Index n_fit = n - n_hold;
        Eigen::MatrixXd xf(n_fit, x.cols()), yf(n_fit, y.cols());
        Eigen::MatrixXd xh(n_hold, x.cols()), yh(n_hold, y.cols());
        Eigen::Index at_fit = 0, at_hold = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i >= lo && i < hi) {
                xh.row(at_hold) = x.row(order[i]);
                yh.row(at_hold++) = y.row(order[i]);
            } else {
                xf.row(at_fit) = x.row(order[i]);
                yf.row(at_fit++) = y.row(order[i]);
            }
        }
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const RidgeModel m = train_ridge(xf, yf, alphas[a]);
            cv[a] += (ridge_predict(m, xh) - yh).squaredNorm() /
                     static_cast<double>(n_hold * y.cols());
        }
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < alphas.size(); ++a)
        if (cv[a] < cv[best]) best = a;

    RidgeModel m = train_ridge(x, y, alphas[best]);
    for (double& e : cv) e /= folds;
    m.cv_errors = std::move(cv);
    return m;
}

KnnModel train_knn(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k) {
    if (k < 1 || k > x.rows())
        throw std::invalid_argument("k-NN: k must be in [1, n_train]");
    KnnModel m;
    m.x = x;
    m.y = y;
    m.k = k;
    m.classification = false;
    return m;
}

KnnModel train_knn_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                              int k) {
    if (k < 1 || k > x.rows())
        throw std::invalid_argument("k-NN: k must be in [1, n_train]");
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 1 && y[i] != -1)
            throw std::invalid_argument("classifier labels must be -1 or +1");
    KnnModel m;
    m.x = x;
    m.labels = y;
    m.k = k;
    m.classification = true;
    return m;
}

namespace {

/// k nearest training rows by Euclidean distance; exact distance ties
/// break towards the lower sample index.
std::vector<int> neighbours(const KnnModel& m, const Eigen::RowVectorXd& q) {
    std::vector<std::pair<double, int>> dist(m.x.rows());
    for (Eigen::Index i = 0; i < m.x.rows(); ++i)
        dist[i] = {(m.x.row(i) - q).squaredNorm(), static_cast<int>(i)};
    std::partial_sort(dist.begin(), dist.begin() + m.k, dist.end());
    std::vector<int> out(m.k);
    for (int i = 0; i < m.k; ++i) out[i] = dist[i].second;
    return out;
}

}  // namespace

Eigen::MatrixXd knn_predict(const KnnModel& model, const Eigen::MatrixXd& x) {
    if (model.classification)
        throw std::invalid_argument("knn_predict needs a regression model");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), model.y.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (int i : neighbours(model, x.row(r))) out.row(r) += model.y.row(i);
    }
    return out / static_cast<double>(model.k);
}

Eigen::VectorXd knn_predict_proba(const KnnModel& model,
                                  const Eigen::MatrixXd& x) {
    if (!model.classification)
        throw std::invalid_argument("predict_proba needs a classifier model");
    Eigen::VectorXd p(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        int votes = 0;
        for (int i : neighbours(model, x.row(r))) votes += model.labels[i] > 0;
        p[r] = static_cast<double>(votes) / static_cast<double>(model.k);
    }
    return p;
}

}  // namespace gs
