#include "taskquant/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace taskquant {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

Eigen::MatrixXd soft_quantize_batch(const Eigen::MatrixXd& z, const SoftQuantizerParams& p) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < p.amplitudes.size(); ++i)
        acc += p.amplitudes(i) * (p.slopes(i) * z.array() - p.shifts(i)).tanh();
    return acc.matrix();
}

Eigen::MatrixXd hard_apply_batch(const Eigen::MatrixXd& z, const HardQuantizer& q) {
    Eigen::MatrixXd out(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        for (Eigen::Index c = 0; c < z.cols(); ++c) out(r, c) = hard_apply(q, z(r, c));
    return out;
}

}  // namespace

void HybridNetwork::validate() const {
    require(!analog.empty() && !digital.empty(), "hybrid: analog and digital stacks must be nonempty");
    require(bank.lane_count >= 1, "hybrid: bank needs at least one lane");

    // the bank is the only cut between the stacks; widths must agree on both sides
    Eigen::Index dim = analog.front().in_dim();
    for (const DenseLayer& layer : analog) {
        require(layer.in_dim() == dim, "hybrid: analog layer dimension mismatch");
        require(layer.activation != Activation::Softmax, "hybrid: softmax not allowed in the analog stack");
        dim = layer.out_dim();
    }
    require(dim == bank.lane_count, "hybrid: analog output width must equal the lane count");
    dim = bank.lane_count;
    for (std::size_t k = 0; k < digital.size(); ++k) {
        require(digital[k].in_dim() == dim, "hybrid: digital layer dimension mismatch");
        dim = digital[k].out_dim();
        const bool last = (k + 1 == digital.size());
        if (digital[k].activation == Activation::Softmax)
            require(last && head == TaskHead::Classification,
                    "hybrid: softmax only as the final classification transform");
        if (last && head == TaskHead::Classification)
            require(digital[k].activation == Activation::Softmax,
                    "hybrid: classification head requires a softmax output layer");
    }

    if (bank.mode == BankMode::Soft) {
        check_soft_params(bank.soft);
    } else {
        require(bank.hard.levels.size() >= 1, "hybrid: deployed bank has no levels");
        if (bank.mode == BankMode::PassingGradient)
            require(bank.hard.uniform_width > 0.0, "hybrid: passing-gradient bank must be uniform");
    }
}

HybridTrace forward_train(const HybridNetwork& net, const Eigen::MatrixXd& x, Rng& rng) {
    HybridTrace trace;
    trace.analog = forward(net.analog, x);
    const Eigen::MatrixXd& z = trace.analog.output();

    switch (net.bank.mode) {
        case BankMode::Soft:
            trace.bank_out = soft_quantize_batch(z, net.bank.soft);
            break;
        case BankMode::PassingGradient: {
            trace.bank_out = z;
            for (Eigen::Index r = 0; r < z.rows(); ++r)
                for (Eigen::Index c = 0; c < z.cols(); ++c)
                    trace.bank_out(r, c) += dither_noise(net.bank.hard, rng);
            break;
        }
        case BankMode::Hard:
            throw std::invalid_argument("forward_train: hard quantizer requested during training");
    }

    trace.digital = forward(net.digital, trace.bank_out);
    return trace;
}

Eigen::MatrixXd forward_deploy(const HybridNetwork& net, const Eigen::MatrixXd& x) {
    require(net.bank.mode != BankMode::Soft, "forward_deploy: bank still in soft mode");
    const ForwardTrace analog = forward(net.analog, x);
    const Eigen::MatrixXd quantized = hard_apply_batch(analog.output(), net.bank.hard);
    return forward(net.digital, quantized).output();
}

HybridGradients backward_train(const HybridNetwork& net, const HybridTrace& trace,
                               const Eigen::MatrixXd& output_gradient) {
    HybridGradients grads;
    const Eigen::Index terms = net.bank.mode == BankMode::Soft ? net.bank.soft.amplitudes.size() : 0;

    BackwardResult digital = backward(net.digital, trace.digital, output_gradient);
    Eigen::MatrixXd bank_grad = std::move(digital.input_gradient);  // dL/d(bank_out)
    grads.digital = std::move(digital.layers);

    Eigen::MatrixXd z_grad;
    if (net.bank.mode == BankMode::Soft) {
        const SoftQuantizerParams& p = net.bank.soft;
        const Eigen::ArrayXXd z = trace.bank_in().array();
        const Eigen::ArrayXXd g = bank_grad.array();
        grads.amplitudes.resize(terms);
        grads.shifts.resize(terms);
        Eigen::ArrayXXd dz = Eigen::ArrayXXd::Zero(z.rows(), z.cols());
        for (Eigen::Index i = 0; i < terms; ++i) {
            const Eigen::ArrayXXd th = (p.slopes(i) * z - p.shifts(i)).tanh();
            const Eigen::ArrayXXd s2 = 1.0 - th.square();
            grads.amplitudes(i) = (g * th).sum();               // lanes share one parameter set
            grads.shifts(i) = (g * (-p.amplitudes(i)) * s2).sum();
            dz += p.amplitudes(i) * p.slopes(i) * s2;
        }
        z_grad = (g * dz).matrix();
    } else {
        // passing gradient: the stage backpropagates as identity
        grads.amplitudes = Eigen::VectorXd::Zero(0);
        grads.shifts = Eigen::VectorXd::Zero(0);
        z_grad = std::move(bank_grad);
    }

    BackwardResult analog = backward(net.analog, trace.analog, z_grad);
    grads.analog = std::move(analog.layers);
    return grads;
}

void apply_gradients(HybridNetwork& net, const HybridGradients& g, double learning_rate) {
    sgd_step(net.analog, g.analog, learning_rate);
    sgd_step(net.digital, g.digital, learning_rate);
    if (net.bank.mode == BankMode::Soft && net.bank.trainable && g.amplitudes.size() > 0) {
        net.bank.soft.amplitudes -= learning_rate * g.amplitudes;
        net.bank.soft.shifts -= learning_rate * g.shifts;
    }
}

TrainResult train(HybridNetwork& net, const Batch& data, const TrainConfig& config) {
    net.validate();
    require(config.epochs >= 1, "train: epochs must be >= 1");
    require(config.batch_size >= 1, "train: batch size must be >= 1");
    require(data.count() >= 1, "train: empty training set");
    require(config.mode != BankMode::Hard, "train: hard quantizer mode is deployment-only");
    require(config.mode == net.bank.mode, "train: config mode does not match the bank");
    if (net.head == TaskHead::Estimation)
        require(data.targets.rows() == data.count() && data.targets.cols() == net.output_dim(),
                "train: estimation targets do not match the head");
    else
        require(static_cast<Eigen::Index>(data.class_targets.size()) == data.count(),
                "train: classification targets do not match the head");

    Rng shuffle_rng(mix_seed(config.seed, 0x5u));
    Rng dither_rng(mix_seed(config.seed, 0xDu));
    const Eigen::Index count = data.count();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    TrainResult result;
    result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (epoch > 0 && net.bank.mode == BankMode::Soft)
            net.bank.soft = anneal(net.bank.soft, 1, config.annealing);

        for (Eigen::Index i = count - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)))]);

        double loss_sum = 0.0;
        for (Eigen::Index start = 0; start < count; start += config.batch_size) {
            const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, count - start);
            Eigen::MatrixXd inputs(size, data.inputs.cols());
            Eigen::MatrixXd targets;
            std::vector<int> class_targets;
            if (net.head == TaskHead::Estimation) targets.resize(size, data.targets.cols());
            else class_targets.resize(static_cast<std::size_t>(size));
            for (Eigen::Index r = 0; r < size; ++r) {
                const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
                inputs.row(r) = data.inputs.row(src);
                if (net.head == TaskHead::Estimation) targets.row(r) = data.targets.row(src);
                else class_targets[static_cast<std::size_t>(r)] = data.class_targets[static_cast<std::size_t>(src)];
            }

            const HybridTrace trace = forward_train(net, inputs, dither_rng);
            const LossValue loss = (net.head == TaskHead::Estimation)
                                       ? mse_loss(trace.output(), targets)
                                       : cross_entropy_loss(trace.output(), class_targets);
            if (!std::isfinite(loss.value))
                throw TrainingDivergence("train: non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch offset " + std::to_string(start));
            loss_sum += loss.value * static_cast<double>(size);

            const HybridGradients grads = backward_train(net, trace, loss.gradient);
            apply_gradients(net, grads, config.learning_rate);
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(count));
    }

    if (net.bank.mode == BankMode::Soft) harden_bank(net);
    return result;
}

void harden_bank(HybridNetwork& net) {
    require(net.bank.mode == BankMode::Soft, "harden_bank: bank is not soft");
    net.bank.hard = harden(net.bank.soft);
    net.bank.mode = BankMode::Hard;
}

Eigen::VectorXd index_to_bpsk(int index, int n_users) {
    require(n_users >= 1 && n_users < 31, "index_to_bpsk: bad user count");
    require(index >= 0 && index < (1 << n_users), "index_to_bpsk: index out of range");
    Eigen::VectorXd s(n_users);
    for (int k = 0; k < n_users; ++k) s(k) = ((index >> k) & 1) ? 1.0 : -1.0;
    return s;
}

int bpsk_to_index(const Eigen::VectorXd& s) {
    int index = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) > 0.0) index |= 1 << k;
    return index;
}

Eigen::VectorXd classify(const HybridNetwork& net, const Eigen::VectorXd& x) {
    require(net.head == TaskHead::Classification, "classify: estimation head");
    const Eigen::MatrixXd probs = forward_deploy(net, x.transpose());
    const Eigen::Index classes = probs.cols();
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < classes; ++k)
        if (probs(0, k) > probs(0, best)) best = k;  // ties keep the lowest index
    const int n_users = static_cast<int>(std::lround(std::log2(static_cast<double>(classes))));
    require((Eigen::Index{1} << n_users) == classes, "classify: class count is not a power of two");
    return index_to_bpsk(static_cast<int>(best), n_users);
}

}  // namespace taskquant
