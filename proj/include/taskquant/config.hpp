#ifndef TASKQUANT_CONFIG_HPP
#define TASKQUANT_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskquant/hybrid.hpp"
#include "taskquant/mimo.hpp"

namespace taskquant {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentTask { ChannelEstimation, Detection };
enum class TrainMode { SoftToHard, PassingGradient, UniformSoft };

// One flat experiment description, parsed from `key = value` lines
// (# comments, comma-separated lists). Defaults reproduce the reference
// experiments at desk scale.
struct ExperimentConfig {
    ExperimentTask task = ExperimentTask::ChannelEstimation;

    // scenario
    int n_users = 4;
    int n_antennas = 10;      // 12 for detection
    int pilot_len = 12;
    double snr = 4.0;         // channel estimation P, linear

    // grids
    std::vector<int> mtilde_grid = {2, 4, 8, 16};   // channel estimation
    std::vector<double> rate_grid = {1.0};          // detection
    std::vector<double> snr_db_grid = {6, 8, 10, 12, 14};

    // training regimes
    TrainMode mode = TrainMode::SoftToHard;
    CsiMode csi = CsiMode::Exact;
    bool csi_squared_variance = false;
    bool snr_uncertainty = false;

    int train_size = 0;       // 0 = task default (2^15 / 5000)
    int eval_size = 0;        // 0 = task default (2^10 realizations / 20000 trials)

    TrainConfig train;        // epochs 0 = task default (100 / 200)
    std::uint64_t seed = 1;
    std::string out_path;

    // resolved dimensions
    int obs_dim() const;
    int target_dim() const;

    void apply_task_defaults();
    void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical serialization of every field; equal configs produce equal text.
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a hash of the canonical serialization, 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

const char* to_string(ExperimentTask task);
const char* to_string(TrainMode mode);

}  // namespace taskquant

#endif
