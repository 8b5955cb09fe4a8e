#ifndef TASKQUANT_QUANTIZER_HPP
#define TASKQUANT_QUANTIZER_HPP

#include <Eigen/Dense>

#include "taskquant/rng.hpp"

namespace taskquant {

// Trainable smooth quantization activation:
//   q(x) = sum_i a_i * tanh(c_i * x - b_i),  i = 1 .. M-1.
// Amplitudes and shifts are learned; slopes stay fixed (or are annealed).
struct SoftQuantizerParams {
    Eigen::VectorXd amplitudes;  // a, length M-1
    Eigen::VectorXd shifts;      // b, length M-1
    Eigen::VectorXd slopes;      // c, length M-1, all > 0

    int resolution() const { return static_cast<int>(amplitudes.size()) + 1; }
};

// Thresholds b_i/c_i uniformly partition [lo, hi]; a_i = (hi-lo)/2 / (M-1) * 2
// so the output range matches [lo, hi]; c_i = 8/cell_width.
SoftQuantizerParams init_soft_params(int resolution, double lo = -2.0, double hi = 2.0);

void check_soft_params(const SoftQuantizerParams& p);

// Deployed scalar continuous-to-discrete map: sorted thresholds and one
// representation level per cell. uniform_width > 0 marks equal-width cells
// (set by uniform_quantizer); required by dither_noise.
struct HardQuantizer {
    Eigen::VectorXd thresholds;  // strictly increasing, length L-1
    Eigen::VectorXd levels;      // length L
    double uniform_width = 0.0;
};

double soft_quantize(double x, const SoftQuantizerParams& p);

struct SoftQuantizeGrads {
    double dx = 0.0;
    Eigen::VectorXd da;
    Eigen::VectorXd db;
};

// dq/dx = sum a_i c_i sech^2(c_i x - b_i); dq/da_i = tanh(c_i x - b_i);
// dq/db_i = -a_i sech^2(c_i x - b_i).
SoftQuantizeGrads soft_quantize_grads(double x, const SoftQuantizerParams& p);

// Thresholds are the sorted b_i/c_i. The extreme levels are -sum(a) and
// +sum(a); each interior level is the soft map evaluated at the midpoint of
// its cell. Coinciding thresholds are merged (cell vanishes) with a warning.
HardQuantizer harden(const SoftQuantizerParams& p);

// Region convention from the hardened rule: x <= t_1 -> lowest level,
// t_i < x <= t_{i+1} -> level i, x > t_last -> highest level.
double hard_apply(const HardQuantizer& q, double x);

// Index of the cell x falls into (same boundary convention as hard_apply).
int hard_cell_index(const HardQuantizer& q, double x);

// level_count equal-width cells over [lo, hi]; representation value is the
// cell midpoint; inputs outside the support saturate.
HardQuantizer uniform_quantizer(double lo, double hi, int level_count);

struct AnnealSchedule {
    double gamma = 1.0;          // slope growth factor per epoch, >= 1
    bool co_scale_shifts = true; // scale b with c so thresholds b/c stay put
};

// Returns base params with c_i (and b_i when co-scaled) multiplied by gamma^epoch.
SoftQuantizerParams anneal(const SoftQuantizerParams& base, int epoch, const AnnealSchedule& schedule);

// Additive noise model of a uniform quantizer: one sample uniform on
// [-width/2, +width/2]. Hard error for non-uniform quantizers.
double dither_noise(const HardQuantizer& q, Rng& rng);

enum class TaskKind { Estimation, Detection };

// Splitting a log2(M) = n*R bit budget across identical scalar lanes:
// estimation uses p = n_s lanes, detection p = floor(n_s * R); each lane gets
// resolution floor(2^(n R / p)), clamped to >= 2 (excess is reported, never
// silent).
struct LanePlan {
    int lanes = 0;               // p
    int resolution = 0;          // per-lane level count
    double nominal_rate = 0.0;   // requested R, bits per input dimension
    double effective_rate = 0.0; // p * log2(resolution) / n
    bool clamped = false;
};

LanePlan lane_plan(int n, int n_s, double rate, TaskKind task);

enum class BankMode { Soft, Hard, PassingGradient };

// p identical lanes sharing one parameter set. Soft mode holds trainable
// params; Hard and PassingGradient hold a deployed HardQuantizer.
struct QuantizerBank {
    int lane_count = 0;
    BankMode mode = BankMode::Soft;
    bool trainable = true;  // false freezes a, b (uniform soft-to-hard ablation)
    SoftQuantizerParams soft;
    HardQuantizer hard;
};

}  // namespace taskquant

#endif
