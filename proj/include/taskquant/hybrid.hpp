#ifndef TASKQUANT_HYBRID_HPP
#define TASKQUANT_HYBRID_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "taskquant/netcore.hpp"
#include "taskquant/quantizer.hpp"

namespace taskquant {

enum class TaskHead { Estimation, Classification };

// Analog stack -> bank of p identical scalar quantizer lanes -> digital stack.
// Strictly sequential: every analog value passes through the bank (no skip
// connections by construction).
struct HybridNetwork {
    std::vector<DenseLayer> analog;
    QuantizerBank bank;
    std::vector<DenseLayer> digital;
    TaskHead head = TaskHead::Estimation;

    Eigen::Index input_dim() const { return analog.front().in_dim(); }
    Eigen::Index output_dim() const { return digital.back().out_dim(); }

    // Dimension chain, bank width, and head/softmax placement.
    void validate() const;
};

struct HybridTrace {
    ForwardTrace analog;
    Eigen::MatrixXd bank_out;  // batch x p
    ForwardTrace digital;

    const Eigen::MatrixXd& bank_in() const { return analog.output(); }
    const Eigen::MatrixXd& output() const { return digital.output(); }
};

// Training-time forward. Soft mode applies the smooth quantizer elementwise;
// passing-gradient mode adds per-lane dither to the analog output. Hard mode
// is a deployment-only notion and throws here.
HybridTrace forward_train(const HybridNetwork& net, const Eigen::MatrixXd& x, Rng& rng);

// Deployment forward through the hardened (or uniform) quantizer. Pure and
// deterministic; throws while the bank is still soft.
Eigen::MatrixXd forward_deploy(const HybridNetwork& net, const Eigen::MatrixXd& x);

struct HybridGradients {
    std::vector<LayerGradients> analog;
    std::vector<LayerGradients> digital;
    Eigen::VectorXd amplitudes;  // dL/da, zero in passing-gradient mode
    Eigen::VectorXd shifts;      // dL/db, zero in passing-gradient mode
};

// output_gradient follows the same convention as netcore::backward. In
// passing-gradient mode the bank stage backpropagates as identity.
HybridGradients backward_train(const HybridNetwork& net, const HybridTrace& trace,
                               const Eigen::MatrixXd& output_gradient);

void apply_gradients(HybridNetwork& net, const HybridGradients& g, double learning_rate);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 128;
    double learning_rate = 0.01;
    BankMode mode = BankMode::Soft;  // Soft or PassingGradient
    AnnealSchedule annealing;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean training loss per epoch
};

struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mini-batch SGD over shuffled data. Soft-to-hard runs harden and freeze the
// bank after the final epoch. Non-finite loss aborts with TrainingDivergence.
TrainResult train(HybridNetwork& net, const Batch& data, const TrainConfig& config);

// Replaces the learned activation with the scalar quantizer it approximates.
void harden_bank(HybridNetwork& net);

// argmax of the deployed class probabilities, ties to the lowest index,
// decoded by the fixed binary enumeration (bit k of the index is user k,
// 0 -> -1, 1 -> +1).
Eigen::VectorXd classify(const HybridNetwork& net, const Eigen::VectorXd& x);

Eigen::VectorXd index_to_bpsk(int index, int n_users);
int bpsk_to_index(const Eigen::VectorXd& s);

}  // namespace taskquant

#endif
