#include "taskquant/mimo.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "taskquant/hybrid.hpp"
#include "taskquant/rng.hpp"

namespace taskquant {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

// i.i.d. zero-mean unit-variance complex normal entries (variance 1/2 per
// real component)
Eigen::MatrixXcd complex_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            m(r, c) = std::complex<double>(rng.normal() * kInvSqrt2, rng.normal() * kInvSqrt2);
    return m;
}

}  // namespace

void ChannelEstScenario::validate() const {
    require(n_users >= 1 && n_antennas >= 1, "channel-est scenario: dimensions must be positive");
    require(pilot_len >= n_users, "channel-est scenario: pilot length must be >= user count");
    require(snr >= 0.0, "channel-est scenario: negative SNR");
    require(pilots.rows() == pilot_len && pilots.cols() == n_users, "channel-est scenario: pilot shape mismatch");
    const Eigen::MatrixXcd gram = pilots.adjoint() * pilots;
    const Eigen::MatrixXcd expected =
        Eigen::MatrixXcd::Identity(n_users, n_users) * static_cast<double>(pilot_len);
    require((gram - expected).cwiseAbs().maxCoeff() < 1e-9, "channel-est scenario: pilots are not orthogonal");
}

void DetectionScenario::validate() const {
    require(n_users >= 1 && n_antennas >= 1, "detection scenario: dimensions must be positive");
    require(channel.rows() == n_antennas && channel.cols() == n_users, "detection scenario: channel shape mismatch");
    require(noise_var > 0.0, "detection scenario: noise variance must be positive");
}

Eigen::MatrixXcd dft_pilots(int pilot_len, int n_users) {
    require(pilot_len >= n_users && n_users >= 1, "dft_pilots: need pilot length >= user count >= 1");
    Eigen::MatrixXcd pilots(pilot_len, n_users);
    for (int k = 0; k < pilot_len; ++k)
        for (int l = 0; l < n_users; ++l) {
            const double phase = -2.0 * std::numbers::pi * k * l / pilot_len;
            pilots(k, l) = std::complex<double>(std::cos(phase), std::sin(phase));
        }
    return pilots;
}

ChannelEstScenario make_channel_est_scenario(int n_users, int n_antennas, int pilot_len, double snr) {
    ChannelEstScenario sc;
    sc.n_users = n_users;
    sc.n_antennas = n_antennas;
    sc.pilot_len = pilot_len;
    sc.snr = snr;
    sc.pilots = dft_pilots(pilot_len, n_users);
    sc.validate();
    return sc;
}

Eigen::VectorXd real_embed(const Eigen::VectorXcd& v) {
    Eigen::VectorXd out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

Eigen::VectorXcd complex_unembed(const Eigen::VectorXd& v) {
    require(v.size() % 2 == 0, "complex_unembed: odd length");
    const Eigen::Index half = v.size() / 2;
    Eigen::VectorXcd out(half);
    out.real() = v.head(half);
    out.imag() = v.tail(half);
    return out;
}

Batch gen_channel_est(const ChannelEstScenario& sc, int count, std::uint64_t seed, SnrMode mode) {
    sc.validate();
    require(count >= 1, "gen_channel_est: count must be >= 1");

    Batch batch;
    batch.inputs.resize(count, sc.obs_dim());
    batch.targets.resize(count, sc.target_dim());

    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        const double power = (mode == SnrMode::Uniform) ? rng.uniform(1.0, 10.0) : sc.snr;
        // y = sqrt(P) (Phi kron I) h + w == vec(sqrt(P) H Phi^T + W), h = vec(H)
        const Eigen::MatrixXcd h_mat = complex_normal(sc.n_antennas, sc.n_users, rng);
        const Eigen::MatrixXcd w_mat = complex_normal(sc.n_antennas, sc.pilot_len, rng);
        const Eigen::MatrixXcd y_mat = std::sqrt(power) * h_mat * sc.pilots.transpose() + w_mat;

        batch.targets.row(i) = real_embed(Eigen::VectorXcd(h_mat.reshaped())).transpose();
        batch.inputs.row(i) = real_embed(Eigen::VectorXcd(y_mat.reshaped())).transpose();
    }
    return batch;
}

Batch gen_detection(const DetectionScenario& sc, int count, std::uint64_t seed, CsiMode mode,
                    bool squared_variance) {
    sc.validate();
    require(count >= 1, "gen_detection: count must be >= 1");
    const double sigma_w = std::sqrt(sc.noise_var);

    Batch batch;
    batch.inputs.resize(count, sc.n_antennas);
    batch.targets.resize(count, sc.n_users);
    batch.class_targets.resize(static_cast<std::size_t>(count));

    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        Eigen::VectorXd symbols(sc.n_users);
        for (int u = 0; u < sc.n_users; ++u) symbols(u) = rng.sign();

        Eigen::MatrixXd channel = sc.channel;
        if (mode == CsiMode::Perturbed) {
            for (Eigen::Index c = 0; c < channel.cols(); ++c)
                for (Eigen::Index r = 0; r < channel.rows(); ++r) {
                    const double mag = std::abs(sc.channel(r, c));
                    const double var = squared_variance ? 0.04 * mag * mag : 0.2 * mag;
                    channel(r, c) += rng.normal() * std::sqrt(var);
                }
        }

        Eigen::VectorXd noise(sc.n_antennas);
        for (int a = 0; a < sc.n_antennas; ++a) noise(a) = rng.normal() * sigma_w;

        batch.inputs.row(i) = (channel * symbols + noise).transpose();
        batch.targets.row(i) = symbols.transpose();
        batch.class_targets[static_cast<std::size_t>(i)] = bpsk_to_index(symbols);
    }
    return batch;
}

Eigen::MatrixXd random_channel(int n_antennas, int n_users, std::uint64_t seed) {
    require(n_antennas >= 1 && n_users >= 1, "random_channel: dimensions must be positive");
    Rng rng(seed);
    Eigen::MatrixXd channel(n_antennas, n_users);
    for (Eigen::Index c = 0; c < channel.cols(); ++c)
        for (Eigen::Index r = 0; r < channel.rows(); ++r) channel(r, c) = rng.normal();
    return channel;
}

void write_dataset_csv(const Batch& batch, std::ostream& out) {
    char buf[32];
    for (Eigen::Index j = 0; j < batch.targets.cols(); ++j) out << (j ? ",s_" : "s_") << j;
    for (Eigen::Index j = 0; j < batch.inputs.cols(); ++j) out << ",x_" << j;
    out << "\n";
    for (Eigen::Index i = 0; i < batch.count(); ++i) {
        for (Eigen::Index j = 0; j < batch.targets.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", batch.targets(i, j));
            out << (j ? "," : "") << buf;
        }
        for (Eigen::Index j = 0; j < batch.inputs.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", batch.inputs(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
}

}  // namespace taskquant
