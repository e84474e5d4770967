#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gridsurrogate/models.hpp"

namespace gs {

using json = nlohmann::ordered_json;

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Ridge: return "ridge";
        case ModelKind::Tree: return "tree";
        case ModelKind::Forest: return "forest";
        case ModelKind::Knn: return "knn";
    }
    return "?";
}

std::string to_string(TaskKind t) {
    return t == TaskKind::Regression ? "regression" : "classification";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "ridge") return ModelKind::Ridge;
    if (s == "tree") return ModelKind::Tree;
    if (s == "forest") return ModelKind::Forest;
    if (s == "knn") return ModelKind::Knn;
    throw ParseError("unknown model kind \"" + s + "\"");
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "regression") return TaskKind::Regression;
    if (s == "classification") return TaskKind::Classification;
    throw ParseError("unknown task kind \"" + s + "\"");
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json vec_to_json(const Eigen::VectorXi& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vecd_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

Eigen::VectorXi veci_from_json(const json& a) {
    Eigen::VectorXi v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<int>();
    return v;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
    if (rows.empty()) return {};
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(r, c) = rows[r][c].get<double>();
    return m;
}

json mlp_to_json(const MlpModel& m) {
    json j;
    j["activation"] = m.activation == Activation::Relu ? "relu" : "tanh";
    j["logistic_output"] = m.logistic_output;
    j["weights"] = json::array();
    for (const auto& w : m.weights) j["weights"].push_back(mat_to_json(w));
    j["biases"] = json::array();
    for (const auto& b : m.biases) j["biases"].push_back(vec_to_json(b));
    j["target_mean"] = vec_to_json(m.target_mean);
    j["target_std"] = vec_to_json(m.target_std);
    return j;
}

MlpModel mlp_from_json(const json& j) {
    MlpModel m;
    m.activation = j.at("activation") == "relu" ? Activation::Relu
                                                : Activation::Tanh;
    m.logistic_output = j.at("logistic_output").get<bool>();
    for (const json& w : j.at("weights")) m.weights.push_back(mat_from_json(w));
    for (const json& b : j.at("biases")) m.biases.push_back(vecd_from_json(b));
    m.target_mean = vecd_from_json(j.at("target_mean"));
    m.target_std = vecd_from_json(j.at("target_std"));
    return m;
}

json ridge_to_json(const RidgeModel& m) {
    return json{{"alpha", m.alpha},
                {"weights", mat_to_json(m.weights)},
                {"feature_mean", vec_to_json(m.feature_mean)},
                {"target_mean", vec_to_json(m.target_mean)}};
}

RidgeModel ridge_from_json(const json& j) {
    RidgeModel m;
    m.alpha = j.at("alpha").get<double>();
    m.weights = mat_from_json(j.at("weights"));
    m.feature_mean = vecd_from_json(j.at("feature_mean"));
    m.target_mean = vecd_from_json(j.at("target_mean"));
    return m;
}

json tree_to_json(const TreeModel& m) {
    json nodes = json::array();
    for (const TreeNode& n : m.nodes) {
        nodes.push_back(json{{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"value", vec_to_json(n.value)}});
    }
    return json{{"classification", m.classification},
                {"n_outputs", m.n_outputs},
                {"nodes", std::move(nodes)}};
}

TreeModel tree_from_json(const json& j) {
    TreeModel m;
    m.classification = j.at("classification").get<bool>();
    m.n_outputs = j.at("n_outputs").get<int>();
    for (const json& n : j.at("nodes")) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.value = vecd_from_json(n.at("value"));
        m.nodes.push_back(std::move(node));
    }
    return m;
}

json forest_to_json(const ForestModel& m) {
    json trees = json::array();
    for (const TreeModel& t : m.trees) trees.push_back(tree_to_json(t));
    return json{{"classification", m.classification}, {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const json& j) {
    ForestModel m;
    m.classification = j.at("classification").get<bool>();
    for (const json& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
    return m;
}

json knn_to_json(const KnnModel& m) {
    return json{{"k", m.k},
                {"classification", m.classification},
                {"x", mat_to_json(m.x)},
                {"y", mat_to_json(m.y)},
                {"labels", vec_to_json(m.labels)}};
}

KnnModel knn_from_json(const json& j) {
    KnnModel m;
    m.k = j.at("k").get<int>();
    m.classification = j.at("classification").get<bool>();
    m.x = mat_from_json(j.at("x"));
    m.y = mat_from_json(j.at("y"));
    m.labels = veci_from_json(j.at("labels"));
    return m;
}

}  // namespace

Eigen::MatrixXd SurrogateModel::predict_regression(
    const Eigen::MatrixXd& x_raw) const {
    if (task != TaskKind::Regression)
        throw std::invalid_argument("predict_regression needs a regression model");
    if (x_raw.cols() != static_cast<Eigen::Index>(feature_names.size()))
        throw std::invalid_argument("feature layout mismatch: expected " +
                                    std::to_string(feature_names.size()) +
                                    " features, got " +
                                    std::to_string(x_raw.cols()));
    const Eigen::MatrixXd x = scaler.apply(x_raw);
    switch (kind) {
        case ModelKind::Mlp: return mlp_predict(std::get<MlpModel>(impl), x);
        case ModelKind::Ridge: return ridge_predict(std::get<RidgeModel>(impl), x);
        case ModelKind::Tree: return tree_predict(std::get<TreeModel>(impl), x);
        case ModelKind::Forest:
            return forest_predict(std::get<ForestModel>(impl), x);
        case ModelKind::Knn: return knn_predict(std::get<KnnModel>(impl), x);
    }
    throw std::logic_error("unreachable");
}

Eigen::VectorXd SurrogateModel::predict_proba(const Eigen::MatrixXd& x_raw) const {
    if (task != TaskKind::Classification)
        throw std::invalid_argument("predict_proba needs a classification model");
    if (x_raw.cols() != static_cast<Eigen::Index>(feature_names.size()))
        throw std::invalid_argument("feature layout mismatch: expected " +
                                    std::to_string(feature_names.size()) +
                                    " features, got " +
                                    std::to_string(x_raw.cols()));
    const Eigen::MatrixXd x = scaler.apply(x_raw);
    switch (kind) {
        case ModelKind::Mlp: return mlp_predict_proba(std::get<MlpModel>(impl), x);
        case ModelKind::Ridge:
            throw std::invalid_argument("ridge has no classification mode");
        case ModelKind::Tree:
            return tree_predict_proba(std::get<TreeModel>(impl), x);
        case ModelKind::Forest:
            return forest_predict_proba(std::get<ForestModel>(impl), x);
        case ModelKind::Knn: return knn_predict_proba(std::get<KnnModel>(impl), x);
    }
    throw std::logic_error("unreachable");
}

std::string SurrogateModel::to_json_string() const {
    json j;
    j["format_version"] = 1;
    j["kind"] = to_string(kind);
    j["task"] = to_string(task);
    j["case"] = case_index;
    j["n_bus"] = n_bus;
    j["n_line"] = n_line;
    j["feature_names"] = feature_names;
    j["scaler"] = json{
        {"mean", std::vector<double>(scaler.mean.begin(), scaler.mean.end())},
        {"std", std::vector<double>(scaler.std.begin(), scaler.std.end())}};
    switch (kind) {
        case ModelKind::Mlp: j["model"] = mlp_to_json(std::get<MlpModel>(impl)); break;
        case ModelKind::Ridge:
            j["model"] = ridge_to_json(std::get<RidgeModel>(impl));
            break;
        case ModelKind::Tree:
            j["model"] = tree_to_json(std::get<TreeModel>(impl));
            break;
        case ModelKind::Forest:
            j["model"] = forest_to_json(std::get<ForestModel>(impl));
            break;
        case ModelKind::Knn: j["model"] = knn_to_json(std::get<KnnModel>(impl)); break;
    }
    return j.dump();
}

void SurrogateModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << to_json_string() << "\n";
}

SurrogateModel SurrogateModel::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    SurrogateModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.task = task_kind_from_string(j.at("task").get<std::string>());
    m.case_index = j.at("case").get<int>();
    m.n_bus = j.at("n_bus").get<int>();
    m.n_line = j.at("n_line").get<int>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto mean = j.at("scaler").at("mean").get<std::vector<double>>();
    const auto sd = j.at("scaler").at("std").get<std::vector<double>>();
    m.scaler.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    m.scaler.std = Eigen::Map<const Eigen::VectorXd>(sd.data(), sd.size());
    const json& body = j.at("model");
    switch (m.kind) {
        case ModelKind::Mlp: m.impl = mlp_from_json(body); break;
        case ModelKind::Ridge: m.impl = ridge_from_json(body); break;
        case ModelKind::Tree: m.impl = tree_from_json(body); break;
        case ModelKind::Forest: m.impl = forest_from_json(body); break;
        case ModelKind::Knn: m.impl = knn_from_json(body); break;
    }
    return m;
}

SurrogateModel SurrogateModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

SurrogateModel train_surrogate(const Dataset& dataset, ModelKind kind,
                               const TrainConfig& config, std::uint64_t seed) {
    SurrogateModel m;
    m.kind = kind;
    m.task = dataset.mode == DatasetMode::Regression ? TaskKind::Regression
                                                     : TaskKind::Classification;
    m.case_index = dataset.case_index;
    m.n_bus = dataset.n_bus;
    m.n_line = dataset.n_line;
    m.feature_names = dataset.feature_names;
    m.scaler = dataset.scaler;

    const Eigen::MatrixXd x =
        m.scaler.apply(dataset.rows(dataset.train_rows, dataset.x));
    if (m.task == TaskKind::Regression) {
        const Eigen::MatrixXd y = dataset.rows(dataset.train_rows, dataset.y_reg);
        switch (kind) {
            case ModelKind::Mlp:
                m.impl = train_mlp_regressor(x, y, config.mlp, seed);
                break;
            case ModelKind::Ridge:
                m.impl = train_ridge_cv(x, y, config.ridge_alphas,
                                        config.ridge_folds, seed);
                break;
            case ModelKind::Tree: m.impl = train_tree(x, y, config.tree); break;
            case ModelKind::Forest:
                m.impl = train_forest(x, y, config.forest, seed);
                break;
            case ModelKind::Knn: m.impl = train_knn(x, y, config.knn_k); break;
        }
    } else {
        Eigen::VectorXi y(dataset.train_rows.size());
        for (std::size_t i = 0; i < dataset.train_rows.size(); ++i)
            y[i] = dataset.y_cls[dataset.train_rows[i]];
        switch (kind) {
            case ModelKind::Mlp:
                m.impl = train_mlp_classifier(x, y, config.mlp, seed);
                break;
            case ModelKind::Ridge:
                throw std::invalid_argument("ridge has no classification mode");
            case ModelKind::Tree:
                m.impl = train_tree_classifier(x, y, config.tree);
                break;
            case ModelKind::Forest:
                m.impl = train_forest_classifier(x, y, config.forest, seed);
                break;
            case ModelKind::Knn:
                m.impl = train_knn_classifier(x, y, config.knn_k);
                break;
        }
    }
    return m;
}

Eigen::VectorXi classify_from_regression(const Eigen::MatrixXd& y_hat, int n_bus,
                                         const OperatingLimits& limits,
                                         double factor) {
    if (!(factor > 0.0 && factor <= 1.2))
        throw std::invalid_argument("loading factor must be in (0, 1.2]");
    if (y_hat.cols() < n_bus)
        throw std::invalid_argument("prediction matrix narrower than n_bus");
    Eigen::VectorXi labels(y_hat.rows());
    const double loading_limit = factor * limits.i_limit_pct;
    for (Eigen::Index r = 0; r < y_hat.rows(); ++r) {
        bool critical = false;
        for (Eigen::Index c = 0; c < n_bus && !critical; ++c) {
            const double v = y_hat(r, c);
            critical = v < limits.vm_min || v > limits.vm_max;
        }
        for (Eigen::Index c = n_bus; c < y_hat.cols() && !critical; ++c)
            critical = y_hat(r, c) > loading_limit;
        labels[r] = critical ? 1 : -1;
    }
    return labels;
}

Eigen::VectorXi classify_from_probability(const Eigen::VectorXd& p_critical,
                                          double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("probability threshold must be in (0, 1)");
    Eigen::VectorXi labels(p_critical.size());
    for (Eigen::Index i = 0; i < p_critical.size(); ++i)
        labels[i] = p_critical[i] >= threshold ? 1 : -1;
    return labels;
}

}  // namespace gs
