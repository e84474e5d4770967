#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gridsurrogate/models.hpp"

namespace gs {

namespace {

void apply_activation(Activation act, Eigen::MatrixXd& z) {
    if (act == Activation::Relu)
        z = z.cwiseMax(0.0);
    else
        z = z.array().tanh();
}

// derivative expressed through the activation output a
Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& a) {
    if (act == Activation::Relu)
        return (a.array() > 0.0).cast<double>();
    return 1.0 - a.array().square();
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

struct Workspace {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input batch
    std::vector<Eigen::MatrixXd> deltas;
};

void forward(const MlpModel& m, const Eigen::MatrixXd& x, Workspace& ws) {
    const std::size_t n_layers = m.weights.size();
    ws.acts.resize(n_layers + 1);
    ws.acts[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = ws.acts[l] * m.weights[l];
        z.rowwise() += m.biases[l].transpose();
        if (l + 1 < n_layers)
            apply_activation(m.activation, z);
        else if (m.logistic_output)
            z = sigmoid(z);
        ws.acts[l + 1] = std::move(z);
    }
}

/// Mean loss over the batch and gradients w.r.t. output pre-activation,
/// already divided by batch size. `y` holds standardised targets for
/// regression or {0,1} columns for the logistic head.
double output_loss_delta(const MlpModel& m, const Eigen::MatrixXd& out,
                         const Eigen::MatrixXd& y, Eigen::MatrixXd& delta) {
    const double n = static_cast<double>(out.rows());
    if (m.logistic_output) {
        // binary cross-entropy; delta through the sigmoid is p - y
        delta = (out - y) / n;
        const double eps = 1e-12;
        const Eigen::ArrayXXd p = out.array().min(1.0 - eps).max(eps);
        return -(y.array() * p.log() + (1.0 - y.array()) * (1.0 - p).log())
                    .sum() /
               n;
    }
    const double d = static_cast<double>(out.cols());
    delta = (out - y) / (n * d);
    return 0.5 * (out - y).squaredNorm() / (n * d);
}

struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

double backward(const MlpModel& m, const Eigen::MatrixXd& x,
                const Eigen::MatrixXd& y, Workspace& ws, Gradients& g) {
    forward(m, x, ws);
    const std::size_t n_layers = m.weights.size();
    Eigen::MatrixXd delta;
    const double loss = output_loss_delta(m, ws.acts[n_layers], y, delta);
    for (std::size_t l = n_layers; l-- > 0;) {
        g.w[l].noalias() = ws.acts[l].transpose() * delta;
        g.b[l] = delta.colwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = delta * m.weights[l].transpose();
            delta = back.cwiseProduct(activation_grad(m.activation, ws.acts[l]));
        }
    }
    return loss;
}

double evaluate_loss(const MlpModel& m, const Eigen::MatrixXd& x,
                     const Eigen::MatrixXd& y) {
    Workspace ws;
    forward(m, x, ws);
    Eigen::MatrixXd delta;
    return output_loss_delta(m, ws.acts.back(), y, delta);
}

MlpModel init_model(int n_in, int n_out, bool logistic, const MlpConfig& config,
                    Rng& rng) {
    MlpModel m;
    m.activation = config.activation;
    m.logistic_output = logistic;
    std::vector<int> dims;
    dims.push_back(n_in);
    for (int h : config.hidden) dims.push_back(h);
    dims.push_back(n_out);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fi = dims[l], fo = dims[l + 1];
        const double limit = std::sqrt(6.0 / (fi + fo));
        Eigen::MatrixXd w(fi, fo);
        for (int i = 0; i < fi; ++i)
            for (int j = 0; j < fo; ++j) w(i, j) = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(fo));
    }
    return m;
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long t = 0;

    explicit AdamState(const MlpModel& m) {
        for (const auto& w : m.weights) {
            mw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
            vw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        }
        for (const auto& b : m.biases) {
            mb.push_back(Eigen::VectorXd::Zero(b.size()));
            vb.push_back(Eigen::VectorXd::Zero(b.size()));
        }
    }

    void step(MlpModel& m, const Gradients& g, double lr) {
        static constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            mw[l] = b1 * mw[l] + (1.0 - b1) * g.w[l];
            vw[l] = b2 * vw[l] + (1.0 - b2) * g.w[l].cwiseProduct(g.w[l]);
            m.weights[l].array() -=
                lr * (mw[l].array() / c1) /
                ((vw[l].array() / c2).sqrt() + eps);
            mb[l] = b1 * mb[l] + (1.0 - b1) * g.b[l];
            vb[l] = b2 * vb[l] + (1.0 - b2) * g.b[l].cwiseProduct(g.b[l]);
            m.biases[l].array() -=
                lr * (mb[l].array() / c1) /
                ((vb[l].array() / c2).sqrt() + eps);
        }
    }
};

MlpModel train_mlp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                   bool logistic, const MlpConfig& config, std::uint64_t seed) {
    if (x.rows() == 0) throw std::invalid_argument("MLP training: empty input");
    if (x.rows() != y.rows())
        throw std::invalid_argument("MLP training: X and Y row counts differ");

    Rng rng(seed);
    MlpModel model = init_model(static_cast<int>(x.cols()),
                                static_cast<int>(y.cols()), logistic, config, rng);

    // deterministic validation slice for the early-stop rule
    std::vector<int> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const int n_val = static_cast<int>(
        std::floor(config.validation_fraction * static_cast<double>(x.rows())));
    const int n_train = static_cast<int>(x.rows()) - n_val;
    if (n_train <= 0) throw std::invalid_argument("MLP training: no training rows");

    Eigen::MatrixXd x_train(n_train, x.cols()), y_train(n_train, y.cols());
    Eigen::MatrixXd x_val(n_val, x.cols()), y_val(n_val, y.cols());
    for (int i = 0; i < n_train; ++i) {
        x_train.row(i) = x.row(order[n_val + i]);
        y_train.row(i) = y.row(order[n_val + i]);
    }
    for (int i = 0; i < n_val; ++i) {
        x_val.row(i) = x.row(order[i]);
        y_val.row(i) = y.row(order[i]);
    }

    Gradients grads;
    for (const auto& w : model.weights) {
        grads.w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        grads.b.push_back(Eigen::VectorXd::Zero(w.cols()));
    }
    AdamState adam(model);
    Workspace ws;

    std::vector<int> batch_order(n_train);
    std::iota(batch_order.begin(), batch_order.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    int stall = 0;
    std::vector<Eigen::MatrixXd> best_w = model.weights;
    std::vector<Eigen::VectorXd> best_b = model.biases;

    const int batch = std::max(1, config.batch_size);
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(batch_order);
        double epoch_loss = 0.0;
        int seen = 0;
        for (int start = 0; start < n_train; start += batch) {
            const int bs = std::min(batch, n_train - start);
            Eigen::MatrixXd xb(bs, x.cols()), yb(bs, y.cols());
            for (int i = 0; i < bs; ++i) {
                xb.row(i) = x_train.row(batch_order[start + i]);
                yb.row(i) = y_train.row(batch_order[start + i]);
            }
            const double loss = backward(model, xb, yb, ws, grads);
            if (!std::isfinite(loss))
                throw std::runtime_error("MLP training: non-finite loss at epoch " +
                                         std::to_string(epoch));
            adam.step(model, grads, config.learning_rate);
            epoch_loss += loss * bs;
            seen += bs;
        }
        model.epoch_losses.push_back(epoch_loss / seen);

        if (n_val > 0) {
            const double val = evaluate_loss(model, x_val, y_val);
            if (val < best_val - 1e-10) {
                best_val = val;
                best_w = model.weights;
                best_b = model.biases;
                stall = 0;
            } else if (++stall >= config.patience) {
                break;
            }
        }
    }
    if (n_val > 0) {
        model.weights = std::move(best_w);
        model.biases = std::move(best_b);
    }
    return model;
}

}  // namespace

MlpModel train_mlp_regressor(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const MlpConfig& config, std::uint64_t seed) {
    if (y.rows() < 1) throw std::invalid_argument("MLP training: empty input");
    Eigen::VectorXd mean = y.colwise().mean();
    Eigen::MatrixXd centered = y.rowwise() - mean.transpose();
    Eigen::VectorXd std =
        (centered.array().square().colwise().mean()).sqrt();
    for (Eigen::Index c = 0; c < std.size(); ++c)
        if (std[c] <= 0.0) std[c] = 1.0;
    Eigen::MatrixXd y_internal = centered.array().rowwise() /
                                 std.transpose().array();
    MlpModel m = train_mlp(x, y_internal, false, config, seed);
    m.target_mean = std::move(mean);
    m.target_std = std::move(std);
    return m;
}

MlpModel train_mlp_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                              const MlpConfig& config, std::uint64_t seed) {
    if (y.size() == 0) throw std::invalid_argument("MLP training: empty input");
    int n_pos = 0;
    Eigen::MatrixXd y01(y.size(), 1);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 1 && y[i] != -1)
            throw std::invalid_argument("classifier labels must be -1 or +1");
        y01(i, 0) = y[i] > 0 ? 1.0 : 0.0;
        n_pos += y[i] > 0;
    }
    if (n_pos == 0 || n_pos == y.size())
        throw std::invalid_argument(
            "classifier training needs at least one sample per class");
    return train_mlp(x, y01, true, config, seed);
}

Eigen::MatrixXd mlp_predict(const MlpModel& model, const Eigen::MatrixXd& x) {
    Workspace ws;
    forward(model, x, ws);
    Eigen::MatrixXd out = ws.acts.back();
    if (!model.logistic_output && model.target_mean.size() > 0) {
        out = out.array().rowwise() * model.target_std.transpose().array();
        out.rowwise() += model.target_mean.transpose();
    }
    return out;
}

Eigen::VectorXd mlp_predict_proba(const MlpModel& model,
                                  const Eigen::MatrixXd& x) {
    if (!model.logistic_output)
        throw std::invalid_argument("predict_proba needs a classifier model");
    Workspace ws;
    forward(model, x, ws);
    return ws.acts.back().col(0);
}

MlpGradients mlp_loss_gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& y_internal) {
    Gradients g;
    for (const auto& w : model.weights) {
        g.w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        g.b.push_back(Eigen::VectorXd::Zero(w.cols()));
    }
    Workspace ws;
    MlpGradients out;
    out.loss = backward(model, x, y_internal, ws, g);
    out.d_weights = std::move(g.w);
    out.d_biases = std::move(g.b);
    return out;
}

}  // namespace gs
