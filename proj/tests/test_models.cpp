#include <doctest.h>

#include <cmath>

#include <Eigen/QR>

#include "gridsurrogate/models.hpp"

using namespace gs;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng, double lo = -1.0,
                              double hi = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("mlp learns the identity map") {
    Rng rng(101);
    Eigen::MatrixXd x = random_matrix(200, 1, rng, -2.0, 2.0);
    Eigen::MatrixXd y = x;
    MlpConfig cfg;
    cfg.hidden = {32, 32};
    cfg.max_epochs = 400;
    const MlpModel m = train_mlp_regressor(x, y, cfg, 7);
    Eigen::MatrixXd xt = random_matrix(100, 1, rng, -2.0, 2.0);
    const Eigen::MatrixXd yh = mlp_predict(m, xt);
    const double mse = (yh - xt).squaredNorm() / 100.0;
    CHECK(mse < 1e-3);
}

TEST_CASE("mlp separates XOR with a handful of hidden units") {
    // four XOR corners replicated with jitter
    Rng rng(55);
    const double corners[4][3] = {
        {0, 0, -1}, {0, 1, 1}, {1, 0, 1}, {1, 1, -1}};
    Eigen::MatrixXd x(200, 2);
    Eigen::VectorXi y(200);
    for (int i = 0; i < 200; ++i) {
        const auto& c = corners[i % 4];
        x(i, 0) = c[0] + rng.uniform(-0.05, 0.05);
        x(i, 1) = c[1] + rng.uniform(-0.05, 0.05);
        y[i] = static_cast<int>(c[2]);
    }
    MlpConfig cfg;
    cfg.hidden = {8};
    cfg.activation = Activation::Tanh;
    cfg.learning_rate = 5e-3;
    cfg.max_epochs = 800;
    const MlpModel m = train_mlp_classifier(x, y, cfg, 3);
    const Eigen::VectorXd p = mlp_predict_proba(m, x);
    int correct = 0;
    for (int i = 0; i < 200; ++i)
        correct += (p[i] >= 0.5 ? 1 : -1) == y[i];
    CHECK(correct == 200);
}

TEST_CASE("mlp analytic gradients match central differences") {
    // smooth activation configuration per the gradient-check contract
    Rng rng(11);
    Eigen::MatrixXd x = random_matrix(12, 3, rng);
    Eigen::MatrixXd y = random_matrix(12, 2, rng);
    MlpConfig cfg;
    cfg.hidden = {10, 8};  // 126 weights, enough for 100 probes
    cfg.activation = Activation::Tanh;
    cfg.max_epochs = 1;  // init + a single step is enough to leave zero bias
    MlpModel m = train_mlp_regressor(x, y, cfg, 2);
    // gradient check operates in the model's internal standardized frame
    Eigen::MatrixXd y_int = y;
    y_int.rowwise() -= m.target_mean.transpose();
    y_int.array().rowwise() /= m.target_std.transpose().array();

    const MlpGradients g = mlp_loss_gradients(m, x, y_int);
    const double h = 1e-6;
    int checked = 0;
    double max_rel = 0.0;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        for (int i = 0; i < m.weights[l].rows() && checked < 100; ++i) {
            for (int j = 0; j < m.weights[l].cols() && checked < 100; ++j) {
                const double save = m.weights[l](i, j);
                m.weights[l](i, j) = save + h;
                const double lp = mlp_loss_gradients(m, x, y_int).loss;
                m.weights[l](i, j) = save - h;
                const double lm = mlp_loss_gradients(m, x, y_int).loss;
                m.weights[l](i, j) = save;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = g.d_weights[l](i, j);
                const double rel =
                    std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an));
                max_rel = std::max(max_rel, rel);
                ++checked;
            }
        }
    }
    CHECK(checked == 100);
    CHECK(max_rel < 1e-4);
}

TEST_CASE("mlp probability outputs form a distribution") {
    Rng rng(4);
    Eigen::MatrixXd x = random_matrix(40, 3, rng);
    Eigen::VectorXi y(40);
    for (int i = 0; i < 40; ++i) y[i] = x(i, 0) > 0 ? 1 : -1;
    MlpConfig cfg;
    cfg.hidden = {8};
    cfg.max_epochs = 50;
    const MlpModel m = train_mlp_classifier(x, y, cfg, 1);
    const Eigen::VectorXd p = mlp_predict_proba(m, x);
    for (int i = 0; i < 40; ++i) {
        CHECK(p[i] >= 0.0);
        CHECK(p[i] <= 1.0);
        // implied two-class vector [1-p, p] sums to one by construction
        CHECK((1.0 - p[i]) + p[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("batch prediction equals per-sample prediction") {
        for (int i : {0, 7, 23}) {
            const Eigen::VectorXd single = mlp_predict_proba(m, x.row(i));
            CHECK(single[0] == p[i]);
        }
    }
    SUBCASE("single-class training is rejected") {
        Eigen::VectorXi ones = Eigen::VectorXi::Constant(40, 1);
        CHECK_THROWS_AS(train_mlp_classifier(x, ones, cfg, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("mlp training is deterministic in the seed") {
    Rng rng(9);
    Eigen::MatrixXd x = random_matrix(60, 4, rng);
    Eigen::MatrixXd y = random_matrix(60, 2, rng);
    MlpConfig cfg;
    cfg.hidden = {16};
    cfg.max_epochs = 30;
    const MlpModel a = train_mlp_regressor(x, y, cfg, 12);
    const MlpModel b = train_mlp_regressor(x, y, cfg, 12);
    REQUIRE(a.weights.size() == b.weights.size());
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        CHECK(a.weights[l] == b.weights[l]);
    const MlpModel c = train_mlp_regressor(x, y, cfg, 13);
    CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("ridge with vanishing alpha matches the least-squares oracle") {
    Rng rng(21);
    Eigen::MatrixXd x = random_matrix(50, 4, rng);
    Eigen::MatrixXd w_true = random_matrix(4, 2, rng);
    Eigen::MatrixXd y = x * w_true;
    y.array().rowwise() += Eigen::Array<double, 1, 2>{0.5, -1.0};  // intercept
    const RidgeModel m = train_ridge(x, y, 1e-12);

    // independent oracle: least squares on the augmented [X 1] system via QR
    Eigen::MatrixXd aug(50, 5);
    aug.leftCols(4) = x;
    aug.col(4).setOnes();
    const Eigen::MatrixXd w_ols = aug.colPivHouseholderQr().solve(y);
    Eigen::MatrixXd x_test = random_matrix(20, 4, rng);
    Eigen::MatrixXd aug_test(20, 5);
    aug_test.leftCols(4) = x_test;
    aug_test.col(4).setOnes();
    const Eigen::MatrixXd y_ridge = ridge_predict(m, x_test);
    const Eigen::MatrixXd y_ols = aug_test * w_ols;
    CHECK((y_ridge - y_ols).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("ridge optimality residual on the centred normal equations") {
    Rng rng(30);
    Eigen::MatrixXd x = random_matrix(40, 5, rng);
    Eigen::MatrixXd y = random_matrix(40, 3, rng);
    for (double alpha : {1e-3, 1.0, 50.0}) {
        const RidgeModel m = train_ridge(x, y, alpha);
        const Eigen::MatrixXd xc = x.rowwise() - m.feature_mean.transpose();
        const Eigen::MatrixXd yc = y.rowwise() - m.target_mean.transpose();
        const Eigen::MatrixXd lhs =
            (xc.transpose() * xc) * m.weights + alpha * m.weights;
        const Eigen::MatrixXd rhs = xc.transpose() * yc;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("ridge duplicates weights for duplicated target columns") {
    Rng rng(31);
    Eigen::MatrixXd x = random_matrix(30, 3, rng);
    Eigen::MatrixXd y1 = random_matrix(30, 1, rng);
    Eigen::MatrixXd y(30, 2);
    y << y1, y1;
    const RidgeModel m = train_ridge(x, y, 0.5);
    CHECK((m.weights.col(0) - m.weights.col(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ridge CV picks the smallest alpha on noiseless linear data") {
    Rng rng(32);
    Eigen::MatrixXd x = random_matrix(60, 3, rng);
    Eigen::MatrixXd w_true = random_matrix(3, 2, rng);
    Eigen::MatrixXd y = x * w_true;
    const RidgeModel m = train_ridge_cv(x, y, {10.0, 0.01, 0.1, 1.0}, 5, 3);
    CHECK(m.alpha == doctest::Approx(0.01));
    // CV errors grow with alpha on noiseless data
    for (std::size_t i = 1; i < m.cv_errors.size(); ++i)
        CHECK(m.cv_errors[i] >= m.cv_errors[i - 1]);
}

TEST_CASE("depth-1 tree reproduces the brute-force best split") {
    Eigen::MatrixXd x(6, 1);
    x << -2.0, -1.2, -0.4, 0.3, 0.9, 1.7;
    Eigen::MatrixXd y(6, 1);
    y << -1, -1, -1, 1, 1, 1;

    TreeConfig cfg;
    const TreeModel m = train_tree(x, y, cfg);
    REQUIRE(m.nodes.size() == 3);
    const TreeNode& root = m.nodes[0];
    CHECK(root.feature == 0);
    // brute force over all candidate thresholds (midpoints)
    double best_cost = 1e300, best_thr = 0;
    for (int i = 1; i < 6; ++i) {
        const double thr = 0.5 * (x(i - 1, 0) + x(i, 0));
        double sl = 0, sl2 = 0, sr = 0, sr2 = 0;
        int nl = 0, nr = 0;
        for (int j = 0; j < 6; ++j) {
            if (x(j, 0) <= thr) {
                sl += y(j, 0);
                sl2 += y(j, 0) * y(j, 0);
                ++nl;
            } else {
                sr += y(j, 0);
                sr2 += y(j, 0) * y(j, 0);
                ++nr;
            }
        }
        const double cost = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr);
        if (cost < best_cost) {
            best_cost = cost;
            best_thr = thr;
        }
    }
    CHECK(root.threshold == doctest::Approx(best_thr));
    CHECK(root.threshold > -0.4);
    CHECK(root.threshold < 0.3);
    CHECK(m.nodes[root.left].value[0] == doctest::Approx(-1.0));
    CHECK(m.nodes[root.right].value[0] == doctest::Approx(1.0));
}

TEST_CASE("constant targets give a single leaf") {
    Eigen::MatrixXd x(5, 2);
    x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
    Eigen::MatrixXd y = Eigen::MatrixXd::Constant(5, 1, 3.5);
    const TreeModel m = train_tree(x, y, {});
    CHECK(m.nodes.size() == 1);
    CHECK(m.nodes[0].feature == -1);
    CHECK(m.nodes[0].value[0] == doctest::Approx(3.5));
}

TEST_CASE("pure classification nodes stop splitting") {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    Eigen::VectorXi y(4);
    y << 1, 1, 1, 1;
    const TreeModel m = train_tree_classifier(x, y, {});
    CHECK(m.nodes.size() == 1);
    CHECK(m.nodes[0].value[1] == doctest::Approx(1.0));  // p(critical)
}

TEST_CASE("an overfit tree reproduces its training targets") {
    Rng rng(41);
    Eigen::MatrixXd x = random_matrix(30, 3, rng);
    Eigen::MatrixXd y = random_matrix(30, 2, rng);
    const TreeModel m = train_tree(x, y, {});
    const Eigen::MatrixXd yh = tree_predict(m, x);
    CHECK((yh - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-tree forest without bootstrap equals the tree") {
    Rng rng(42);
    Eigen::MatrixXd x = random_matrix(40, 4, rng);
    Eigen::MatrixXd y = random_matrix(40, 2, rng);
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.bootstrap = false;
    cfg.mtry = 0;  // all features
    const ForestModel f = train_forest(x, y, cfg, 5);
    const TreeModel t = train_tree(x, y, cfg.tree);
    Eigen::MatrixXd xt = random_matrix(10, 4, rng);
    CHECK(forest_predict(f, xt) == tree_predict(t, xt));
}

TEST_CASE("forest prediction is exactly the mean of its trees") {
    Rng rng(43);
    Eigen::MatrixXd x = random_matrix(50, 3, rng);
    Eigen::MatrixXd y = random_matrix(50, 2, rng);
    ForestConfig cfg;
    cfg.n_trees = 7;
    const ForestModel f = train_forest(x, y, cfg, 9);
    Eigen::MatrixXd xt = random_matrix(15, 3, rng);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(15, 2);
    for (const TreeModel& t : f.trees) mean += tree_predict(t, xt);
    mean /= 7.0;
    CHECK((forest_predict(f, xt) - mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forest classifier probabilities stay in [0, 1] and seeds repeat") {
    Rng rng(44);
    Eigen::MatrixXd x = random_matrix(60, 3, rng);
    Eigen::VectorXi y(60);
    for (int i = 0; i < 60; ++i) y[i] = x(i, 1) > 0.2 ? 1 : -1;
    ForestConfig cfg;
    cfg.n_trees = 11;
    const ForestModel a = train_forest_classifier(x, y, cfg, 77);
    const ForestModel b = train_forest_classifier(x, y, cfg, 77);
    Eigen::MatrixXd xt = random_matrix(25, 3, rng);
    const Eigen::VectorXd pa = forest_predict_proba(a, xt);
    const Eigen::VectorXd pb = forest_predict_proba(b, xt);
    CHECK(pa == pb);
    for (int i = 0; i < 25; ++i) {
        CHECK(pa[i] >= 0.0);
        CHECK(pa[i] <= 1.0);
    }
}

TEST_CASE("k-NN nearest-neighbour behaviour and tie rule") {
    Eigen::MatrixXd x(4, 1);
    x << 0.0, 1.0, 2.0, 3.0;
    Eigen::VectorXi y(4);
    y << -1, 1, -1, 1;

    SUBCASE("k=1 reproduces training labels") {
        const KnnModel m = train_knn_classifier(x, y, 1);
        const Eigen::VectorXd p = knn_predict_proba(m, x);
        for (int i = 0; i < 4; ++i) CHECK(p[i] == (y[i] > 0 ? 1.0 : 0.0));
    }
    SUBCASE("k=n predicts the global vote everywhere") {
        const KnnModel m = train_knn_classifier(x, y, 4);
        const Eigen::VectorXd p =
            knn_predict_proba(m, Eigen::MatrixXd::Constant(3, 1, 9.0));
        for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(0.5));
    }
    SUBCASE("equidistant query resolves to the lower index") {
        // query 0.5 is equidistant to x0 (label -1) and x1 (label +1)
        const KnnModel m = train_knn_classifier(x, y, 1);
        const Eigen::VectorXd p =
            knn_predict_proba(m, Eigen::MatrixXd::Constant(1, 1, 0.5));
        CHECK(p[0] == 0.0);  // index 0 wins, label -1
    }
    SUBCASE("k beyond the training size is rejected") {
        CHECK_THROWS_AS(train_knn_classifier(x, y, 5), std::invalid_argument);
    }
    SUBCASE("regression k-NN averages neighbours") {
        Eigen::MatrixXd yr(4, 1);
        yr << 0.0, 10.0, 20.0, 30.0;
        const KnnModel m = train_knn(x, yr, 4);
        const Eigen::MatrixXd pred =
            knn_predict(m, Eigen::MatrixXd::Constant(1, 1, 1.5));
        CHECK(pred(0, 0) == doctest::Approx(15.0));
    }
}

TEST_CASE("classify_from_regression applies the factor rule") {
    OperatingLimits limits;  // i_limit 60, band [0.9, 1.1]
    Eigen::MatrixXd y_hat(1, 3);
    y_hat << 1.0, 1.0, 59.9;  // two buses, one line

    SUBCASE("factor 0.94 lowers the effective limit to 56.4") {
        const Eigen::VectorXi l = classify_from_regression(y_hat, 2, limits, 0.94);
        CHECK(l[0] == 1);
    }
    SUBCASE("factor 1.0 keeps 59.9 uncritical") {
        const Eigen::VectorXi l = classify_from_regression(y_hat, 2, limits, 1.0);
        CHECK(l[0] == -1);
    }
    SUBCASE("voltage violations are factor-independent") {
        Eigen::MatrixXd bad = y_hat;
        bad(0, 0) = 0.89;
        CHECK(classify_from_regression(bad, 2, limits, 1.0)[0] == 1);
    }
    SUBCASE("growing factors shrink the critical set") {
        Rng rng(50);
        Eigen::MatrixXd batch(100, 3);
        for (int i = 0; i < 100; ++i) {
            batch(i, 0) = rng.uniform(0.92, 1.08);
            batch(i, 1) = rng.uniform(0.92, 1.08);
            batch(i, 2) = rng.uniform(30.0, 70.0);
        }
        const Eigen::VectorXi small =
            classify_from_regression(batch, 2, limits, 0.94);
        const Eigen::VectorXi large =
            classify_from_regression(batch, 2, limits, 0.98);
        for (int i = 0; i < 100; ++i) {
            if (large[i] == 1) CHECK(small[i] == 1);  // superset
        }
    }
}

TEST_CASE("probability threshold rule is monotone") {
    Eigen::VectorXd p(5);
    p << 0.05, 0.19, 0.2, 0.5, 0.95;
    const Eigen::VectorXi at_02 = classify_from_probability(p, 0.2);
    const Eigen::VectorXi at_05 = classify_from_probability(p, 0.5);
    CHECK(at_02.sum() >= at_05.sum());
    CHECK(at_02[2] == 1);  // >= comparison includes the threshold itself
    CHECK(at_05[2] == -1);
}

TEST_CASE("equal data, config and seed give identical model files") {
    Rng rng(71);
    Eigen::MatrixXd x = random_matrix(80, 5, rng);
    Eigen::MatrixXd y = random_matrix(80, 3, rng);
    Eigen::VectorXi labels(80);
    for (int i = 0; i < 80; ++i) labels[i] = x(i, 0) + x(i, 1) > 0 ? 1 : -1;

    Dataset ds;
    ds.case_index = 0;
    ds.mode = DatasetMode::Regression;
    ds.feature_names = {"a", "b", "c", "d", "e"};
    ds.n_bus = 2;
    ds.n_line = 1;
    ds.x = x;
    ds.y_reg = y;
    ds.y_cls = labels;
    for (int i = 0; i < 80; ++i) {
        ds.step_ids.push_back(i);
        (i < 60 ? ds.train_rows : ds.test_rows).push_back(i);
    }
    ds.scaler = fit_scaler(ds.rows(ds.train_rows, ds.x));

    TrainConfig cfg;
    cfg.mlp.hidden = {12};
    cfg.mlp.max_epochs = 40;
    cfg.forest.n_trees = 5;
    for (ModelKind kind : {ModelKind::Mlp, ModelKind::Ridge, ModelKind::Tree,
                           ModelKind::Forest, ModelKind::Knn}) {
        const SurrogateModel a = train_surrogate(ds, kind, cfg, 31);
        const SurrogateModel b = train_surrogate(ds, kind, cfg, 31);
        CHECK(a.to_json_string() == b.to_json_string());
    }
    ds.mode = DatasetMode::Classification;
    for (ModelKind kind :
         {ModelKind::Mlp, ModelKind::Tree, ModelKind::Forest, ModelKind::Knn}) {
        const SurrogateModel a = train_surrogate(ds, kind, cfg, 33);
        const SurrogateModel b = train_surrogate(ds, kind, cfg, 33);
        CHECK(a.to_json_string() == b.to_json_string());
    }
}

TEST_CASE("lowering the probability threshold grows the critical set") {
    Rng rng(72);
    Eigen::VectorXd p(300);
    for (int i = 0; i < 300; ++i) p[i] = rng.uniform01();
    const std::vector<double> thresholds{0.9, 0.7, 0.5, 0.3, 0.1, 0.01};
    Eigen::VectorXi previous;
    for (double thr : thresholds) {
        const Eigen::VectorXi current = classify_from_probability(p, thr);
        if (previous.size() > 0) {
            // every sample critical at the higher threshold stays critical
            for (int i = 0; i < 300; ++i) {
                if (previous[i] == 1) CHECK(current[i] == 1);
            }
        }
        previous = current;
    }
}

TEST_CASE("surrogate wrapper round-trips through its file format") {
    Rng rng(61);
    Eigen::MatrixXd x = random_matrix(40, 3, rng);

    Dataset ds;
    ds.case_index = 2;
    ds.mode = DatasetMode::Regression;
    ds.feature_names = {"a", "b", "c"};
    ds.n_bus = 1;
    ds.n_line = 1;
    ds.x = x;
    ds.y_reg = random_matrix(40, 2, rng);
    ds.step_ids.resize(40);
    for (int i = 0; i < 40; ++i) ds.step_ids[i] = i;
    for (int i = 0; i < 30; ++i) ds.train_rows.push_back(i);
    for (int i = 30; i < 40; ++i) ds.test_rows.push_back(i);
    ds.scaler = fit_scaler(ds.rows(ds.train_rows, ds.x));

    TrainConfig cfg;
    cfg.mlp.hidden = {8};
    cfg.mlp.max_epochs = 20;
    cfg.forest.n_trees = 3;

    for (ModelKind kind : {ModelKind::Mlp, ModelKind::Ridge, ModelKind::Tree,
                           ModelKind::Forest, ModelKind::Knn}) {
        const SurrogateModel m = train_surrogate(ds, kind, cfg, 5);
        const std::string text = m.to_json_string();
        const SurrogateModel back = SurrogateModel::from_json_string(text);
        CHECK(back.to_json_string() == text);
        const Eigen::MatrixXd xt = random_matrix(5, 3, rng);
        CHECK(m.predict_regression(xt) == back.predict_regression(xt));
    }
    SUBCASE("layout mismatch is rejected") {
        const SurrogateModel m = train_surrogate(ds, ModelKind::Ridge, cfg, 5);
        CHECK_THROWS_AS(m.predict_regression(Eigen::MatrixXd::Zero(2, 5)),
                        std::invalid_argument);
    }
}
