#ifndef TASKQUANT_NETCORE_HPP
#define TASKQUANT_NETCORE_HPP

#include <Eigen/Dense>
#include <vector>

#include "taskquant/rng.hpp"

namespace taskquant {

enum class Activation { Identity, Tanh, Softmax };

// One fully-connected layer. Softmax is only valid as the final transform of
// a classification stack.
struct DenseLayer {
    Eigen::MatrixXd weights;  // out_dim x in_dim
    Eigen::VectorXd biases;   // out_dim
    Activation activation = Activation::Identity;

    Eigen::Index in_dim() const { return weights.cols(); }
    Eigen::Index out_dim() const { return weights.rows(); }
};

// Zero biases, weights i.i.d. uniform on [-sqrt(6/(in+out)), +sqrt(6/(in+out))].
DenseLayer make_dense_layer(Eigen::Index out_dim, Eigen::Index in_dim, Activation activation, Rng& rng);

// Training pairs. Rows of `inputs` are samples; estimation targets are rows of
// `targets`, classification targets are `class_targets` indices.
struct Batch {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
    std::vector<int> class_targets;

    Eigen::Index count() const { return inputs.rows(); }
};

struct LayerTrace {
    Eigen::MatrixXd pre;   // batch x out, pre-activation
    Eigen::MatrixXd post;  // batch x out
};

// Everything backward() needs: the stack input plus per-layer pre/post
// activations. The final post matrix is the network output.
struct ForwardTrace {
    Eigen::MatrixXd input;  // batch x in
    std::vector<LayerTrace> layers;

    const Eigen::MatrixXd& output() const { return layers.back().post; }
};

// Rows are samples. Throws std::invalid_argument on dimension mismatch.
ForwardTrace forward(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& input);

struct LayerGradients {
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;
};

struct BackwardResult {
    std::vector<LayerGradients> layers;
    Eigen::MatrixXd input_gradient;  // batch x in
};

// output_gradient is dL/d(output) for identity/tanh outputs. When the final
// layer is Softmax the caller passes dL/d(logits) instead (the combined
// softmax + cross-entropy form produced by cross_entropy_loss).
BackwardResult backward(const std::vector<DenseLayer>& layers, const ForwardTrace& trace,
                        const Eigen::MatrixXd& output_gradient);

struct LossValue {
    double value = 0.0;
    Eigen::MatrixXd gradient;  // same shape as predictions
};

// (1/t) * sum_j ||s_j - shat_j||^2 over batch rows; gradient w.r.t. predictions.
LossValue mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

// -(1/t) * sum_j log p_j[target_j]. The gradient is w.r.t. the pre-softmax
// logits, (p - onehot)/t rowwise; feed it to backward() through a Softmax layer.
LossValue cross_entropy_loss(const Eigen::MatrixXd& probabilities, const std::vector<int>& target_indices);

Eigen::VectorXd softmax(const Eigen::VectorXd& v);
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& m);

void sgd_step(std::vector<DenseLayer>& layers, const std::vector<LayerGradients>& gradients,
              double learning_rate);

}  // namespace taskquant

#endif
