#ifndef TASKQUANT_HARNESS_HPP
#define TASKQUANT_HARNESS_HPP

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "taskquant/baselines.hpp"
#include "taskquant/config.hpp"
#include "taskquant/hybrid.hpp"
#include "taskquant/mimo.hpp"

namespace taskquant {

struct MetricValue {
    double value = 0.0;
    double stderr_ = 0.0;  // Monte Carlo standard error
};

// Per-component empirical MSE, (1/n_s) E||s - shat||^2, over a deployed
// estimation network.
MetricValue evaluate_mse(const HybridNetwork& net, const Batch& test_pairs);

using Detector = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Fraction of wrong user bits over n_u * trials fresh samples. The sample
// stream is a pure function of the seed, so different detectors evaluated
// with the same seed see identical channels and noise.
MetricValue evaluate_ber(const Detector& detector, const DetectionScenario& sc, int trials,
                         std::uint64_t seed);

struct SweepRow {
    double sweep_var = 0.0;
    std::string variant;
    std::string metric;
    double value = 0.0;
    double stderr_ = 0.0;
    std::uint64_t seed = 0;
    std::string config_digest;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

// Architecture builders (widths and layer counts per the experiment designs).
HybridNetwork make_estimation_network(int obs_dim, int target_dim, const LanePlan& plan,
                                      TrainMode mode, std::uint64_t seed);
HybridNetwork make_detection_network(int obs_dim, int n_users, const LanePlan& plan,
                                     TrainMode mode, std::uint64_t seed, int hidden_width = 32);

// MSE vs per-lane resolution sweep with MMSE and fundamental-limit columns;
// optional SNR-uncertainty training variant.
SweepResult run_channel_est_sweep(const ExperimentConfig& cfg);

// BER sweep over SNR (singleton rate grid) or rate (singleton SNR grid):
// soft-to-hard, passing-gradient, uniform soft-to-hard ablation, MAP and
// quantized MAP; optional CSI-uncertainty variants.
SweepResult run_detection_sweep(const ExperimentConfig& cfg);

// Bounds and model-based detectors only (no training).
SweepResult run_baseline_sweep(const ExperimentConfig& cfg);

// Single-model paths backing the train/eval CLI subcommands; both use the
// first grid point of the config.
HybridNetwork train_single(const ExperimentConfig& cfg, TrainResult* history = nullptr);
SweepResult eval_single(const ExperimentConfig& cfg, const HybridNetwork& net);

// Header sweep_var,variant,metric,value,stderr,seed,config_digest; rows
// ordered by (sweep var, variant, metric); values printed with 17 significant
// digits so a parse-back recovers them exactly.
void emit_csv(const SweepResult& result, std::ostream& out);
void emit_csv(const SweepResult& result, const std::string& path);

}  // namespace taskquant

#endif
