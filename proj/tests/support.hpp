#ifndef TASKQUANT_TESTS_SUPPORT_HPP
#define TASKQUANT_TESTS_SUPPORT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "taskquant/hybrid.hpp"

namespace tsupport {

inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// analytic-vs-finite-difference agreement; the absolute escape covers the
// FD noise floor on saturated near-zero gradients
inline bool grad_close(double analytic, double fd, double rtol, double atol) {
    return rel_err(analytic, fd) < rtol || std::abs(analytic - fd) < atol;
}

// central finite difference of a scalar function
inline double central_diff(const std::function<double(double)>& f, double x, double eps = 1e-5) {
    return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

// Loss of a hybrid network on a fixed batch as a pure function of the
// parameters, for finite-difference checks. Dither is unused (soft mode only).
inline double hybrid_loss(const taskquant::HybridNetwork& net, const taskquant::Batch& batch) {
    taskquant::Rng rng(0);
    const taskquant::HybridTrace trace = taskquant::forward_train(net, batch.inputs, rng);
    if (net.head == taskquant::TaskHead::Estimation)
        return taskquant::mse_loss(trace.output(), batch.targets).value;
    return taskquant::cross_entropy_loss(trace.output(), batch.class_targets).value;
}

// Max relative error between analytic gradients and central finite
// differences over every trainable parameter of the hybrid network.
inline double hybrid_grad_max_rel_err(taskquant::HybridNetwork net, const taskquant::Batch& batch,
                                      double eps = 1e-5) {
    taskquant::Rng rng(0);
    const taskquant::HybridTrace trace = taskquant::forward_train(net, batch.inputs, rng);
    const taskquant::LossValue loss =
        (net.head == taskquant::TaskHead::Estimation)
            ? taskquant::mse_loss(trace.output(), batch.targets)
            : taskquant::cross_entropy_loss(trace.output(), batch.class_targets);
    const taskquant::HybridGradients grads = taskquant::backward_train(net, trace, loss.gradient);

    double worst = 0.0;
    auto check = [&](double* param, double analytic) {
        const double saved = *param;
        *param = saved + eps;
        const double up = hybrid_loss(net, batch);
        *param = saved - eps;
        const double down = hybrid_loss(net, batch);
        *param = saved;
        const double fd = (up - down) / (2.0 * eps);
        if (std::abs(analytic - fd) >= 1e-8) worst = std::max(worst, rel_err(analytic, fd));
    };

    auto check_layers = [&](std::vector<taskquant::DenseLayer>& layers,
                            const std::vector<taskquant::LayerGradients>& lg) {
        for (std::size_t k = 0; k < layers.size(); ++k) {
            for (Eigen::Index i = 0; i < layers[k].weights.size(); ++i)
                check(layers[k].weights.data() + i, lg[k].weights.data()[i]);
            for (Eigen::Index i = 0; i < layers[k].biases.size(); ++i)
                check(layers[k].biases.data() + i, lg[k].biases(i));
        }
    };
    check_layers(net.analog, grads.analog);
    check_layers(net.digital, grads.digital);
    if (net.bank.mode == taskquant::BankMode::Soft) {
        for (Eigen::Index i = 0; i < net.bank.soft.amplitudes.size(); ++i)
            check(net.bank.soft.amplitudes.data() + i, grads.amplitudes(i));
        for (Eigen::Index i = 0; i < net.bank.soft.shifts.size(); ++i)
            check(net.bank.soft.shifts.data() + i, grads.shifts(i));
    }
    return worst;
}

// small random hybrid net + batch for gradient checks
struct GradCase {
    taskquant::HybridNetwork net;
    taskquant::Batch batch;
};

inline GradCase make_grad_case(taskquant::TaskHead head, std::uint64_t seed) {
    using namespace taskquant;
    Rng rng(seed);
    const int n = 6, p = 3, hidden = 8;
    const int n_s = (head == TaskHead::Estimation) ? 4 : 2;

    GradCase gc;
    gc.net.head = head;
    gc.net.analog.push_back(make_dense_layer(hidden, n, Activation::Tanh, rng));
    gc.net.analog.push_back(make_dense_layer(p, hidden, Activation::Identity, rng));
    gc.net.digital.push_back(make_dense_layer(hidden, p, Activation::Tanh, rng));
    if (head == TaskHead::Estimation)
        gc.net.digital.push_back(make_dense_layer(n_s, hidden, Activation::Identity, rng));
    else
        gc.net.digital.push_back(make_dense_layer(1 << n_s, hidden, Activation::Softmax, rng));
    gc.net.bank.lane_count = p;
    gc.net.bank.mode = BankMode::Soft;
    gc.net.bank.soft = init_soft_params(4);
    gc.net.validate();

    const int count = 5;
    gc.batch.inputs.resize(count, n);
    for (Eigen::Index i = 0; i < gc.batch.inputs.size(); ++i) gc.batch.inputs.data()[i] = rng.normal();
    if (head == TaskHead::Estimation) {
        gc.batch.targets.resize(count, n_s);
        for (Eigen::Index i = 0; i < gc.batch.targets.size(); ++i) gc.batch.targets.data()[i] = rng.normal();
    } else {
        for (int i = 0; i < count; ++i)
            gc.batch.class_targets.push_back(static_cast<int>(rng.below(1u << n_s)));
    }
    return gc;
}

}  // namespace tsupport

#endif
