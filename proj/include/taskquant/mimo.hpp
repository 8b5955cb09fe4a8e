#ifndef TASKQUANT_MIMO_HPP
#define TASKQUANT_MIMO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>

#include "taskquant/netcore.hpp"

namespace taskquant {

// Pilot-based uplink channel estimation: y = sqrt(P) (Phi kron I_{n_t}) h + w
// with h, w i.i.d. unit-variance complex normal. Targets and observations are
// the real embeddings of h and y.
struct ChannelEstScenario {
    int n_users = 0;     // n_u
    int n_antennas = 0;  // n_t
    int pilot_len = 0;   // tau >= n_u
    double snr = 1.0;    // P, linear
    Eigen::MatrixXcd pilots;  // tau x n_u, Phi^H Phi = tau * I

    int obs_dim() const { return 2 * pilot_len * n_antennas; }     // n
    int target_dim() const { return 2 * n_users * n_antennas; }    // n_s
    double pilot_ratio() const { return static_cast<double>(pilot_len) / n_users; }  // rho

    void validate() const;
};

ChannelEstScenario make_channel_est_scenario(int n_users, int n_antennas, int pilot_len, double snr);

// Real-valued multiuser detection: x = H s + w, s in {-1,+1}^{n_u},
// w ~ N(0, sigma_w^2 I).
struct DetectionScenario {
    int n_antennas = 0;  // n_t = observation dim
    int n_users = 0;     // n_s
    Eigen::MatrixXd channel;  // n_t x n_u
    double noise_var = 1.0;   // sigma_w^2 > 0

    void validate() const;
};

// First n_u columns of the tau-point DFT matrix, kernel exp(-j 2 pi k l / tau);
// Phi^H Phi = tau * I exactly.
Eigen::MatrixXcd dft_pilots(int pilot_len, int n_users);

// [Re(v); Im(v)], length doubles; linear and invertible.
Eigen::VectorXd real_embed(const Eigen::VectorXcd& v);
Eigen::VectorXcd complex_unembed(const Eigen::VectorXd& v);

enum class SnrMode { Fixed, Uniform };      // Uniform redraws P ~ U[1,10] per sample
enum class CsiMode { Exact, Perturbed };    // Perturbed corrupts H per sample

// Sample i is a pure function of (seed, i); batches may be produced in parallel.
Batch gen_channel_est(const ChannelEstScenario& sc, int count, std::uint64_t seed, SnrMode mode);

// Perturbed mode draws E_ij ~ N(0, var) fresh per sample with
// var = 0.2*|H_ij| (literal reading) or (0.2*|H_ij|)^2 when squared_variance.
Batch gen_detection(const DetectionScenario& sc, int count, std::uint64_t seed, CsiMode mode,
                    bool squared_variance = false);

// i.i.d. standard normal entries, fixed per experiment from the master seed.
Eigen::MatrixXd random_channel(int n_antennas, int n_users, std::uint64_t seed);

// CSV dump: header s_0..s_{n_s-1},x_0..x_{n-1}, one row per sample.
void write_dataset_csv(const Batch& batch, std::ostream& out);

}  // namespace taskquant

#endif
