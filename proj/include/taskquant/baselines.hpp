#ifndef TASKQUANT_BASELINES_HPP
#define TASKQUANT_BASELINES_HPP

#include <Eigen/Dense>

#include "taskquant/quantizer.hpp"

namespace taskquant {

// Per-real-component MMSE of pilot-based channel estimation without
// quantization constraints: 1 / (2 (1 + P tau)).
double mmse_bound(double snr, double pilot_len);

// Indirect rate-distortion limit, achievable with optimal vector quantization:
// eta_opt = eta_mmse + P tau / (2 (1 + P tau)) * 2^(-2 rho R).
double fundamental_limit(double snr, double pilot_len, double pilot_ratio, double rate);

// Standard normal CDF, |error| < 1e-12.
double normal_cdf(double z);

// Exhaustive MAP over {-1,+1}^{n_u} (uniform prior, Gaussian noise), i.e.
// argmin ||x - H s||^2; ties go to the lowest enumeration index. Refuses
// n_u > 24.
Eigen::VectorXd map_detect(const Eigen::VectorXd& x, const Eigen::MatrixXd& channel, double sigma_w);

// Per-dimension cell of an elementwise quantizer's observed output; extreme
// cells are half-infinite.
struct CellObservation {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

CellObservation observe_cells(const HardQuantizer& q, const Eigen::VectorXd& x);

// log prod_i [ G((u_i - (Hs)_i)/sigma) - G((l_i - (Hs)_i)/sigma) ], each
// factor's log floored at -745. This factorization is the exact posterior for
// elementwise quantization of i.i.d. Gaussian noise.
double cell_log_likelihood(const CellObservation& cells, const Eigen::MatrixXd& channel,
                           double sigma_w, const Eigen::VectorXd& symbols);

// MAP from the quantized observation; ties to the lowest enumeration index.
Eigen::VectorXd quantized_map_detect(const CellObservation& cells, const Eigen::MatrixXd& channel,
                                     double sigma_w);

}  // namespace taskquant

#endif
