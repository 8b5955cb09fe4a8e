#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "taskquant/baselines.hpp"
#include "taskquant/hybrid.hpp"
#include "taskquant/mimo.hpp"

using namespace taskquant;

namespace {

HybridNetwork soft_linear_net(int n, int p, int n_s, int resolution, std::uint64_t seed) {
    Rng rng(seed);
    HybridNetwork net;
    net.head = TaskHead::Estimation;
    net.analog.push_back(make_dense_layer(p, n, Activation::Identity, rng));
    net.digital.push_back(make_dense_layer(n_s, p, Activation::Identity, rng));
    net.bank.lane_count = p;
    net.bank.mode = BankMode::Soft;
    net.bank.soft = init_soft_params(resolution);
    net.validate();
    return net;
}

}  // namespace

TEST_CASE("forward_train soft: zero analog weights feed 0 to every lane") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 4, 1);
    net.analog[0].weights.setZero();
    net.analog[0].biases.setZero();
    Rng rng(0);
    Eigen::MatrixXd x(2, 4);
    x << 1, -2, 3, 0.5, 0, 7, -1, 2;
    const HybridTrace trace = forward_train(net, x, rng);
    const double at_zero = soft_quantize(0.0, net.bank.soft);
    CHECK((trace.bank_out.array() - at_zero).abs().maxCoeff() == 0.0);
}

TEST_CASE("forward_train passing: degenerate dither equals no quantizer at all") {
    Rng rng(2);
    HybridNetwork net;
    net.head = TaskHead::Estimation;
    net.analog.push_back(make_dense_layer(3, 4, Activation::Tanh, rng));
    net.digital.push_back(make_dense_layer(2, 3, Activation::Identity, rng));
    net.bank.lane_count = 3;
    net.bank.mode = BankMode::PassingGradient;
    net.bank.hard = uniform_quantizer(-2, 2, 4);
    net.bank.hard.uniform_width = 1e-300;  // noise support collapses to ~0

    Eigen::MatrixXd x(2, 4);
    x << 0.3, -0.8, 1.1, 0.2, -0.4, 0.9, 2.0, 0;
    Rng dither(7);
    const HybridTrace trace = forward_train(net, x, dither);
    const Eigen::MatrixXd plain = forward(net.digital, forward(net.analog, x).output()).output();
    CHECK((trace.output() - plain).cwiseAbs().maxCoeff() < 1e-250);
}

TEST_CASE("forward_train: hard mode during training is an error") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 4, 3);
    harden_bank(net);
    Rng rng(0);
    CHECK_THROWS_AS((void)forward_train(net, Eigen::MatrixXd::Zero(1, 4), rng), std::invalid_argument);
}

TEST_CASE("end-to-end gradients match finite differences for both heads") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const tsupport::GradCase est = tsupport::make_grad_case(TaskHead::Estimation, 100 + seed);
        CHECK(tsupport::hybrid_grad_max_rel_err(est.net, est.batch) < 1e-4);
        const tsupport::GradCase cls = tsupport::make_grad_case(TaskHead::Classification, 200 + seed);
        CHECK(tsupport::hybrid_grad_max_rel_err(cls.net, cls.batch) < 1e-4);
    }
}

TEST_CASE("forward_deploy: soft bank is an error, hardened sign bank is sign-invariant") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 2, 5);
    CHECK_THROWS_AS((void)forward_deploy(net, Eigen::MatrixXd::Zero(1, 4)), std::invalid_argument);

    harden_bank(net);
    Eigen::MatrixXd x(1, 4);
    x << 0.5, -0.25, 1.0, 2.0;
    const Eigen::MatrixXd z = forward(net.analog, x).output();
    const Eigen::MatrixXd base = forward_deploy(net, x);
    // scaling the input scales z but keeps its sign pattern: deploy output frozen
    for (double scale : {0.5, 1.7, 10.0}) {
        const Eigen::MatrixXd scaled = forward_deploy(net, scale * x);
        const Eigen::MatrixXd z2 = forward(net.analog, scale * x).output();
        REQUIRE((z.array().sign() == z2.array().sign()).all());
        CHECK((scaled - base).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("forward_deploy: repeated calls are bit-identical") {
    HybridNetwork net = soft_linear_net(5, 4, 3, 4, 6);
    harden_bank(net);
    Rng rng(9);
    Eigen::MatrixXd x(3, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Eigen::MatrixXd a = forward_deploy(net, x);
    const Eigen::MatrixXd b = forward_deploy(net, x);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deploy converges to the soft map as slopes grow with co-scaling") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 4, 7);
    Rng rng(0);
    Eigen::MatrixXd x(4, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();

    HybridNetwork sharp = net;
    sharp.bank.soft = anneal(net.bank.soft, 40, {1.5, true});
    const HybridTrace soft_trace = forward_train(sharp, x, rng);

    harden_bank(sharp);
    const Eigen::MatrixXd deployed = forward_deploy(sharp, x);
    CHECK((deployed - soft_trace.output()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("passing-gradient deployment equals digital net on uniform-quantized z") {
    Rng rng(12);
    HybridNetwork net;
    net.head = TaskHead::Estimation;
    net.analog.push_back(make_dense_layer(3, 4, Activation::Tanh, rng));
    net.digital.push_back(make_dense_layer(2, 3, Activation::Identity, rng));
    net.bank.lane_count = 3;
    net.bank.mode = BankMode::PassingGradient;
    net.bank.hard = uniform_quantizer(-2, 2, 4);

    Eigen::MatrixXd x(2, 4);
    x << 0.3, -0.8, 1.1, 0.2, -0.4, 0.9, 2.0, 0;
    const Eigen::MatrixXd z = forward(net.analog, x).output();
    Eigen::MatrixXd quantized = z;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        quantized.data()[i] = hard_apply(net.bank.hard, z.data()[i]);
    const Eigen::MatrixXd expected = forward(net.digital, quantized).output();
    CHECK((forward_deploy(net, x) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train: zero learning rate leaves the loss history constant") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 4, 21);
    Rng rng(3);
    Batch data;
    data.inputs.resize(64, 4);
    data.targets.resize(64, 2);
    for (Eigen::Index i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < data.targets.size(); ++i) data.targets.data()[i] = rng.normal();

    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 64;  // full batch so shuffling cannot reorder losses
    cfg.learning_rate = 0.0;
    cfg.seed = 5;
    const TrainResult result = train(net, data, cfg);
    for (double loss : result.epoch_loss) CHECK(loss == result.epoch_loss.front());
}

TEST_CASE("train: near-identity bank converges to the least-squares loss") {
    // s = A x + noise with a linear net; closed-form least squares is the target
    Rng rng(31);
    const int n = 4, n_s = 2, count = 256;
    Eigen::MatrixXd map_true(n_s, n);
    for (Eigen::Index i = 0; i < map_true.size(); ++i) map_true.data()[i] = rng.normal();
    Batch data;
    data.inputs.resize(count, n);
    data.targets.resize(count, n_s);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < n; ++j) data.inputs(i, j) = rng.normal();
        for (int j = 0; j < n_s; ++j)
            data.targets(i, j) = (map_true.row(j) * data.inputs.row(i).transpose()).value() + 0.1 * rng.normal();
    }

    // normal-equation oracle for the best linear fit (no bias used by the net path)
    const Eigen::MatrixXd gram = data.inputs.transpose() * data.inputs;
    const Eigen::MatrixXd best = gram.ldlt().solve(data.inputs.transpose() * data.targets);
    const double ls_loss =
        (data.inputs * best - data.targets).array().square().sum() / static_cast<double>(count);

    HybridNetwork net;
    net.head = TaskHead::Estimation;
    Rng init(77);
    net.analog.push_back(make_dense_layer(n, n, Activation::Identity, init));
    net.digital.push_back(make_dense_layer(n_s, n, Activation::Identity, init));
    net.bank.lane_count = n;
    net.bank.mode = BankMode::PassingGradient;
    net.bank.hard = uniform_quantizer(-2, 2, 4);
    net.bank.hard.uniform_width = 1e-300;  // identity bank stub

    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 32;
    cfg.learning_rate = 0.05;
    cfg.mode = BankMode::PassingGradient;
    cfg.seed = 8;
    const TrainResult result = train(net, data, cfg);
    CHECK(result.epoch_loss.back() < 1.01 * ls_loss);
    CHECK(result.epoch_loss.back() > 0.8 * ls_loss);
}

TEST_CASE("train: detection toy reaches small BER after hardening") {
    // two antennas, one user, high SNR; the MAP oracle would be near error-free
    DetectionScenario sc;
    sc.n_antennas = 2;
    sc.n_users = 1;
    sc.channel.resize(2, 1);
    sc.channel << 0.8, 0.6;
    sc.noise_var = 0.02;

    const Batch data = gen_detection(sc, 2000, 99, CsiMode::Exact);
    Rng init(5);
    HybridNetwork net;
    net.head = TaskHead::Classification;
    net.analog.push_back(make_dense_layer(8, 2, Activation::Tanh, init));
    net.analog.push_back(make_dense_layer(2, 8, Activation::Identity, init));
    net.digital.push_back(make_dense_layer(8, 2, Activation::Tanh, init));
    net.digital.push_back(make_dense_layer(2, 8, Activation::Softmax, init));
    net.bank.lane_count = 2;
    net.bank.mode = BankMode::Soft;
    net.bank.soft = init_soft_params(4);
    net.validate();

    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.05;
    cfg.seed = 123;
    train(net, data, cfg);
    CHECK(net.bank.mode == BankMode::Hard);  // hardened and frozen after training

    const Batch fresh = gen_detection(sc, 10000, 777, CsiMode::Exact);
    int errors = 0;
    for (int i = 0; i < 10000; ++i) {
        const Eigen::VectorXd decided = classify(net, fresh.inputs.row(i).transpose());
        if ((decided(0) > 0) != (fresh.targets(i, 0) > 0)) ++errors;
    }
    CHECK(errors < 100);  // BER < 1e-2
}

TEST_CASE("train: divergence aborts with a diagnostic") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 4, 22);
    Rng rng(3);
    Batch data;
    data.inputs.resize(32, 4);
    data.targets.resize(32, 2);
    for (Eigen::Index i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = rng.normal() * 100.0;
    for (Eigen::Index i = 0; i < data.targets.size(); ++i) data.targets.data()[i] = rng.normal();
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e6;  // blow up
    CHECK_THROWS_AS((void)train(net, data, cfg), TrainingDivergence);
}

TEST_CASE("classify: index enumeration and tie-break") {
    CHECK((index_to_bpsk(0, 2) - (Eigen::VectorXd(2) << -1, -1).finished()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((index_to_bpsk(3, 2) - (Eigen::VectorXd(2) << 1, 1).finished()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(bpsk_to_index(index_to_bpsk(5, 3)) == 5);

    // a network emitting exactly uniform probabilities ties; lowest index wins
    Rng rng(17);
    HybridNetwork net;
    net.head = TaskHead::Classification;
    net.analog.push_back(make_dense_layer(2, 3, Activation::Identity, rng));
    net.digital.push_back(make_dense_layer(4, 2, Activation::Softmax, rng));
    net.digital[0].weights.setZero();
    net.digital[0].biases.setZero();
    net.bank.lane_count = 2;
    net.bank.mode = BankMode::Soft;
    net.bank.soft = init_soft_params(2);
    harden_bank(net);
    const Eigen::VectorXd decided = classify(net, (Eigen::VectorXd(3) << 0.4, -0.2, 0.9).finished());
    CHECK(bpsk_to_index(decided) == 0);
}

TEST_CASE("mode separation: passing-gradient quantizer gradients are exactly zero") {
    Rng rng(41);
    HybridNetwork net;
    net.head = TaskHead::Estimation;
    net.analog.push_back(make_dense_layer(3, 4, Activation::Tanh, rng));
    net.digital.push_back(make_dense_layer(2, 3, Activation::Identity, rng));
    net.bank.lane_count = 3;
    net.bank.mode = BankMode::PassingGradient;
    net.bank.hard = uniform_quantizer(-2, 2, 4);

    Eigen::MatrixXd x(2, 4), g(2, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    Rng dither(3);
    const HybridTrace trace = forward_train(net, x, dither);
    const HybridGradients grads = backward_train(net, trace, g);
    CHECK(grads.amplitudes.cwiseAbs().sum() == 0.0);
    CHECK(grads.shifts.cwiseAbs().sum() == 0.0);

    // soft mode on the same data generally produces nonzero quantizer gradients
    HybridNetwork soft = net;
    soft.bank.mode = BankMode::Soft;
    soft.bank.soft = init_soft_params(4);
    const HybridTrace strace = forward_train(soft, x, dither);
    const HybridGradients sgrads = backward_train(soft, strace, g);
    CHECK(sgrads.amplitudes.cwiseAbs().sum() > 0.0);
    CHECK(sgrads.shifts.cwiseAbs().sum() > 0.0);
}

TEST_CASE("hardening preserves everything but the bank") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 4, 55);
    const Eigen::MatrixXd analog_before = net.analog[0].weights;
    const Eigen::MatrixXd digital_before = net.digital[0].weights;
    harden_bank(net);
    CHECK(net.bank.mode == BankMode::Hard);
    CHECK((net.analog[0].weights - analog_before).cwiseAbs().maxCoeff() == 0.0);
    CHECK((net.digital[0].weights - digital_before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validate: the bank is the only cut between the stacks") {
    HybridNetwork net = soft_linear_net(4, 3, 2, 4, 60);
    net.bank.lane_count = 5;  // analog no longer feeds the bank exactly
    CHECK_THROWS_AS(net.validate(), std::invalid_argument);

    HybridNetwork net2 = soft_linear_net(4, 3, 2, 4, 61);
    net2.digital[0].weights.resize(2, 7);  // digital expects wider input than the bank
    CHECK_THROWS_AS(net2.validate(), std::invalid_argument);
}
