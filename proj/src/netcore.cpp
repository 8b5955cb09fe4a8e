#include "taskquant/netcore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace taskquant {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& pre) {
    switch (act) {
        case Activation::Identity:
            return pre;
        case Activation::Tanh:
            return pre.array().tanh().matrix();
        case Activation::Softmax:
            return softmax_rows(pre);
    }
    throw std::invalid_argument("netcore: unknown activation");
}

}  // namespace

DenseLayer make_dense_layer(Eigen::Index out_dim, Eigen::Index in_dim, Activation activation, Rng& rng) {
    require(out_dim >= 1 && in_dim >= 1, "make_dense_layer: dimensions must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    DenseLayer layer;
    layer.weights.resize(out_dim, in_dim);
    for (Eigen::Index i = 0; i < out_dim; ++i)
        for (Eigen::Index j = 0; j < in_dim; ++j) layer.weights(i, j) = rng.uniform(-bound, bound);
    layer.biases = Eigen::VectorXd::Zero(out_dim);
    layer.activation = activation;
    return layer;
}

ForwardTrace forward(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& input) {
    require(!layers.empty(), "forward: empty layer list");
    require(input.cols() == layers.front().in_dim(), "forward: input dimension mismatch");

    ForwardTrace trace;
    trace.input = input;
    trace.layers.reserve(layers.size());
    const Eigen::MatrixXd* current = &trace.input;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const DenseLayer& layer = layers[k];
        require(current->cols() == layer.in_dim(), "forward: layer dimension mismatch at layer " + std::to_string(k));
        require(layer.activation != Activation::Softmax || k + 1 == layers.size(),
                "forward: softmax only allowed as the final transform");
        LayerTrace lt;
        lt.pre = (*current) * layer.weights.transpose();
        lt.pre.rowwise() += layer.biases.transpose();
        lt.post = apply_activation(layer.activation, lt.pre);
        trace.layers.push_back(std::move(lt));
        current = &trace.layers.back().post;
    }
    return trace;
}

BackwardResult backward(const std::vector<DenseLayer>& layers, const ForwardTrace& trace,
                        const Eigen::MatrixXd& output_gradient) {
    require(trace.layers.size() == layers.size(), "backward: trace does not match layer list");
    require(output_gradient.rows() == trace.input.rows() && output_gradient.cols() == layers.back().out_dim(),
            "backward: output gradient shape mismatch");

    BackwardResult result;
    result.layers.resize(layers.size());

    Eigen::MatrixXd grad = output_gradient;  // dL/d(post) of the current layer
    for (std::size_t k = layers.size(); k-- > 0;) {
        const DenseLayer& layer = layers[k];
        const LayerTrace& lt = trace.layers[k];
        require(lt.post.cols() == layer.out_dim() && lt.post.rows() == trace.input.rows(),
                "backward: stale trace at layer " + std::to_string(k));

        Eigen::MatrixXd dz;
        switch (layer.activation) {
            case Activation::Identity:
                dz = std::move(grad);
                break;
            case Activation::Tanh:
                dz = (grad.array() * (1.0 - lt.post.array().square())).matrix();
                break;
            case Activation::Softmax:
                // caller provides dL/d(logits) directly (combined form)
                dz = std::move(grad);
                break;
        }

        const Eigen::MatrixXd& layer_input = (k == 0) ? trace.input : trace.layers[k - 1].post;
        result.layers[k].weights = dz.transpose() * layer_input;
        result.layers[k].biases = dz.colwise().sum().transpose();
        grad = dz * layer.weights;
    }
    result.input_gradient = std::move(grad);
    return result;
}

LossValue mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
    require(predictions.rows() == targets.rows() && predictions.cols() == targets.cols(),
            "mse_loss: shape mismatch");
    require(predictions.rows() >= 1, "mse_loss: empty batch");
    const double t = static_cast<double>(predictions.rows());
    const Eigen::MatrixXd diff = predictions - targets;
    LossValue loss;
    loss.value = diff.array().square().sum() / t;
    loss.gradient = (2.0 / t) * diff;
    return loss;
}

LossValue cross_entropy_loss(const Eigen::MatrixXd& probabilities, const std::vector<int>& target_indices) {
    require(probabilities.rows() >= 1, "cross_entropy_loss: empty batch");
    require(static_cast<std::size_t>(probabilities.rows()) == target_indices.size(),
            "cross_entropy_loss: target count mismatch");
    const Eigen::Index t = probabilities.rows();
    const Eigen::Index classes = probabilities.cols();

    LossValue loss;
    loss.gradient = probabilities / static_cast<double>(t);
    double total = 0.0;
    for (Eigen::Index j = 0; j < t; ++j) {
        const double row_sum = probabilities.row(j).sum();
        require(std::abs(row_sum - 1.0) <= 1e-9, "cross_entropy_loss: probability row does not sum to 1");
        const int target = target_indices[static_cast<std::size_t>(j)];
        require(target >= 0 && target < classes, "cross_entropy_loss: target index out of range");
        const double p = probabilities(j, target);
        require(p > 0.0, "cross_entropy_loss: zero probability at target (broken softmax)");
        total -= std::log(p);
        loss.gradient(j, target) -= 1.0 / static_cast<double>(t);
    }
    loss.value = total / static_cast<double>(t);
    return loss;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
    const double shift = v.maxCoeff();
    Eigen::ArrayXd e = (v.array() - shift).exp();
    return (e / e.sum()).matrix();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        const double shift = m.row(j).maxCoeff();
        Eigen::ArrayXd e = (m.row(j).transpose().array() - shift).exp();
        out.row(j) = (e / e.sum()).matrix().transpose();
    }
    return out;
}

void sgd_step(std::vector<DenseLayer>& layers, const std::vector<LayerGradients>& gradients,
              double learning_rate) {
    require(learning_rate >= 0.0, "sgd_step: negative learning rate");
    require(layers.size() == gradients.size(), "sgd_step: gradient count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        require(gradients[k].weights.rows() == layers[k].weights.rows() &&
                    gradients[k].weights.cols() == layers[k].weights.cols(),
                "sgd_step: gradient shape mismatch");
        layers[k].weights -= learning_rate * gradients[k].weights;
        layers[k].biases -= learning_rate * gradients[k].biases;
    }
}

}  // namespace taskquant
