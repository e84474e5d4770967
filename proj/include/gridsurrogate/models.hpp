#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "gridsurrogate/dataset.hpp"

namespace gs {

// ---------------------------------------------------------------- MLP

enum class Activation { Relu, Tanh };

struct MlpConfig {
    std::vector<int> hidden{100, 100};
    Activation activation = Activation::Relu;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 500;
    int patience = 20;              // epochs without validation improvement
    double validation_fraction = 0.1;
};

struct MlpModel {
    std::vector<Eigen::MatrixXd> weights;  // per layer, in x out
    std::vector<Eigen::VectorXd> biases;
    Activation activation = Activation::Relu;
    bool logistic_output = false;
    // regression targets are standardised internally for conditioning;
    // predictions are mapped back. Empty for classifiers.
    Eigen::VectorXd target_mean;
    Eigen::VectorXd target_std;
    std::vector<double> epoch_losses;
};

MlpModel train_mlp_regressor(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const MlpConfig& config, std::uint64_t seed);
MlpModel train_mlp_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                              const MlpConfig& config, std::uint64_t seed);

Eigen::MatrixXd mlp_predict(const MlpModel& model, const Eigen::MatrixXd& x);
Eigen::VectorXd mlp_predict_proba(const MlpModel& model, const Eigen::MatrixXd& x);

struct MlpGradients {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
};

/// Full-batch loss and analytic gradients in the model's internal target
/// frame; the hook the finite-difference check verifies against.
MlpGradients mlp_loss_gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& y_internal);

// ---------------------------------------------------------------- ridge

struct RidgeModel {
    Eigen::MatrixXd weights;      // features x outputs
    Eigen::VectorXd feature_mean; // X and Y are centred for the solve,
    Eigen::VectorXd target_mean;  // which leaves the intercept unpenalised
    double alpha = 0.0;
    std::vector<double> cv_errors;  // mean CV MSE per candidate alpha
};

/// Solves (Xc^T Xc + alpha I) W = Xc^T Yc on the centred system.
RidgeModel train_ridge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       double alpha);
RidgeModel train_ridge_cv(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          std::vector<double> alphas, int folds,
                          std::uint64_t seed);
Eigen::MatrixXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& x);

// ---------------------------------------------------------------- CART

struct TreeConfig {
    int max_depth = -1;        // -1 = unlimited
    int min_samples_leaf = 1;
    int min_samples_split = 2;
    int mtry = 0;              // features tried per split; 0 = all
};

struct TreeNode {
    int feature = -1;          // -1 marks a leaf
    double threshold = 0.0;    // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    Eigen::VectorXd value;     // leaf: mean targets / class distribution [-1, +1]
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // node 0 is the root
    bool classification = false;
    int n_outputs = 0;
};

TreeModel train_tree(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const TreeConfig& config, Rng* rng = nullptr);
TreeModel train_tree_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                const TreeConfig& config, Rng* rng = nullptr);

Eigen::MatrixXd tree_predict(const TreeModel& model, const Eigen::MatrixXd& x);
Eigen::VectorXd tree_predict_proba(const TreeModel& model,
                                   const Eigen::MatrixXd& x);

// -------------------------------------------------------------- forest

struct ForestConfig {
    int n_trees = 100;
    bool bootstrap = true;
    int mtry = -1;  // -1: sqrt(d) classification, d/3 regression
    TreeConfig tree;
};

struct ForestModel {
    std::vector<TreeModel> trees;
    bool classification = false;
};

ForestModel train_forest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const ForestConfig& config, std::uint64_t seed);
ForestModel train_forest_classifier(const Eigen::MatrixXd& x,
                                    const Eigen::VectorXi& y,
                                    const ForestConfig& config,
                                    std::uint64_t seed);

Eigen::MatrixXd forest_predict(const ForestModel& model, const Eigen::MatrixXd& x);
Eigen::VectorXd forest_predict_proba(const ForestModel& model,
                                     const Eigen::MatrixXd& x);

// ---------------------------------------------------------------- k-NN

struct KnnModel {
    Eigen::MatrixXd x;
    Eigen::MatrixXd y;        // regression targets
    Eigen::VectorXi labels;   // classification labels
    int k = 5;
    bool classification = false;
};

KnnModel train_knn(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k);
KnnModel train_knn_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                              int k);
Eigen::MatrixXd knn_predict(const KnnModel& model, const Eigen::MatrixXd& x);
Eigen::VectorXd knn_predict_proba(const KnnModel& model, const Eigen::MatrixXd& x);

// ------------------------------------------------------------- wrapper

enum class ModelKind { Mlp, Ridge, Tree, Forest, Knn };
enum class TaskKind { Regression, Classification };

std::string to_string(ModelKind k);
std::string to_string(TaskKind t);
ModelKind model_kind_from_string(const std::string& s);
TaskKind task_kind_from_string(const std::string& s);

struct TrainConfig {
    MlpConfig mlp;
    ForestConfig forest;
    TreeConfig tree;
    int knn_k = 5;
    std::vector<double> ridge_alphas{0.1, 1.0, 10.0};
    int ridge_folds = 5;
};

/// A trained predictor plus everything needed to apply it: feature layout
/// descriptor, scaler, target column split, version tag.
struct SurrogateModel {
    ModelKind kind = ModelKind::Mlp;
    TaskKind task = TaskKind::Regression;
    int case_index = 0;
    int n_bus = 0;
    int n_line = 0;
    std::vector<std::string> feature_names;
    Scaler scaler;
    std::variant<MlpModel, RidgeModel, TreeModel, ForestModel, KnnModel> impl;

    /// Regression outputs in Eq-layout order [vm..., loading...].
    Eigen::MatrixXd predict_regression(const Eigen::MatrixXd& x_raw) const;
    /// Probability of the critical class.
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x_raw) const;

    std::string to_json_string() const;
    void save(const std::string& path) const;
    static SurrogateModel load(const std::string& path);
    static SurrogateModel from_json_string(const std::string& text);
};

SurrogateModel train_surrogate(const Dataset& dataset, ModelKind kind,
                               const TrainConfig& config, std::uint64_t seed);

/// +1 iff any predicted loading exceeds factor * i_limit_pct or any
/// predicted vm leaves [vm_min, vm_max]. The factor must lie in (0, 1.2].
Eigen::VectorXi classify_from_regression(const Eigen::MatrixXd& y_hat, int n_bus,
                                         const OperatingLimits& limits,
                                         double factor);

/// +1 iff p_critical >= threshold, threshold in (0, 1).
Eigen::VectorXi classify_from_probability(const Eigen::VectorXd& p_critical,
                                          double threshold);

}  // namespace gs
