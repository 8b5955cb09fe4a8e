#include "taskquant/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace taskquant {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

inline double sech2(double u) {
    const double t = std::tanh(u);
    return 1.0 - t * t;
}

}  // namespace

void check_soft_params(const SoftQuantizerParams& p) {
    require(p.amplitudes.size() >= 1, "soft quantizer: needs at least one tanh term (resolution >= 2)");
    require(p.shifts.size() == p.amplitudes.size() && p.slopes.size() == p.amplitudes.size(),
            "soft quantizer: amplitude/shift/slope lengths differ");
    require((p.slopes.array() > 0.0).all(), "soft quantizer: slopes must be positive");
}

SoftQuantizerParams init_soft_params(int resolution, double lo, double hi) {
    require(resolution >= 2, "init_soft_params: resolution must be >= 2");
    require(lo < hi, "init_soft_params: empty support");
    const int terms = resolution - 1;
    const double width = (hi - lo) / resolution;  // initial cell width
    const double slope = 8.0 / width;

    SoftQuantizerParams p;
    p.amplitudes = Eigen::VectorXd::Constant(terms, (hi - lo) / 2.0 / terms);
    p.shifts.resize(terms);
    p.slopes = Eigen::VectorXd::Constant(terms, slope);
    for (int i = 0; i < terms; ++i) {
        const double threshold = lo + (hi - lo) * (i + 1) / resolution;
        p.shifts(i) = slope * threshold;  // threshold = b_i / c_i
    }
    return p;
}

double soft_quantize(double x, const SoftQuantizerParams& p) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.amplitudes.size(); ++i)
        acc += p.amplitudes(i) * std::tanh(p.slopes(i) * x - p.shifts(i));
    return acc;
}

SoftQuantizeGrads soft_quantize_grads(double x, const SoftQuantizerParams& p) {
    const Eigen::Index terms = p.amplitudes.size();
    SoftQuantizeGrads g;
    g.da.resize(terms);
    g.db.resize(terms);
    for (Eigen::Index i = 0; i < terms; ++i) {
        const double u = p.slopes(i) * x - p.shifts(i);
        const double th = std::tanh(u);
        const double s2 = 1.0 - th * th;
        g.da(i) = th;
        g.db(i) = -p.amplitudes(i) * s2;
        g.dx += p.amplitudes(i) * p.slopes(i) * s2;
    }
    return g;
}

HardQuantizer harden(const SoftQuantizerParams& p) {
    check_soft_params(p);
    const Eigen::Index terms = p.amplitudes.size();

    // sort parameters by their threshold b_i/c_i and re-index
    std::vector<Eigen::Index> order(static_cast<std::size_t>(terms));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return p.shifts(a) / p.slopes(a) < p.shifts(b) / p.slopes(b);
    });

    std::vector<double> thresholds;
    thresholds.reserve(static_cast<std::size_t>(terms));
    bool merged = false;
    for (Eigen::Index k = 0; k < terms; ++k) {
        const double t = p.shifts(order[static_cast<std::size_t>(k)]) / p.slopes(order[static_cast<std::size_t>(k)]);
        if (!thresholds.empty()) {
            const double prev = thresholds.back();
            if (t - prev <= 1e-12 * std::max({1.0, std::abs(t), std::abs(prev)})) {
                merged = true;
                continue;  // zero-width cell vanishes
            }
        }
        thresholds.push_back(t);
    }
    if (merged)
        std::cerr << "taskquant: harden: duplicate thresholds merged, quantizer degenerates to "
                  << thresholds.size() + 1 << " levels\n";

    const double amplitude_sum = p.amplitudes.sum();
    HardQuantizer q;
    q.thresholds = Eigen::Map<const Eigen::VectorXd>(thresholds.data(),
                                                     static_cast<Eigen::Index>(thresholds.size()));
    q.levels.resize(q.thresholds.size() + 1);
    q.levels(0) = -amplitude_sum;
    q.levels(q.levels.size() - 1) = amplitude_sum;
    for (Eigen::Index k = 0; k + 1 < q.thresholds.size(); ++k)
        q.levels(k + 1) = soft_quantize(0.5 * (q.thresholds(k) + q.thresholds(k + 1)), p);
    return q;
}

int hard_cell_index(const HardQuantizer& q, double x) {
    // boundary points belong to the lower cell: count thresholds strictly < x
    const double* begin = q.thresholds.data();
    const double* end = begin + q.thresholds.size();
    return static_cast<int>(std::lower_bound(begin, end, x) - begin);
}

double hard_apply(const HardQuantizer& q, double x) {
    require(q.levels.size() >= 1, "hard_apply: empty quantizer");
    return q.levels(hard_cell_index(q, x));
}

HardQuantizer uniform_quantizer(double lo, double hi, int level_count) {
    require(level_count >= 1, "uniform_quantizer: need at least one level");
    require(lo < hi, "uniform_quantizer: empty support");
    const double width = (hi - lo) / level_count;
    HardQuantizer q;
    q.thresholds.resize(level_count - 1);
    q.levels.resize(level_count);
    for (int k = 0; k + 1 < level_count; ++k) q.thresholds(k) = lo + width * (k + 1);
    for (int k = 0; k < level_count; ++k) q.levels(k) = lo + width * (k + 0.5);
    q.uniform_width = width;
    return q;
}

SoftQuantizerParams anneal(const SoftQuantizerParams& base, int epoch, const AnnealSchedule& schedule) {
    require(schedule.gamma >= 1.0, "anneal: schedule factor must be >= 1");
    require(epoch >= 0, "anneal: negative epoch");
    SoftQuantizerParams p = base;
    if (schedule.gamma == 1.0 || epoch == 0) return p;
    const double factor = std::pow(schedule.gamma, epoch);
    p.slopes *= factor;
    if (schedule.co_scale_shifts) p.shifts *= factor;  // keeps thresholds b/c fixed
    return p;
}

double dither_noise(const HardQuantizer& q, Rng& rng) {
    require(q.uniform_width > 0.0, "dither_noise: defined for uniform quantizers only");
    return rng.uniform(-0.5 * q.uniform_width, 0.5 * q.uniform_width);
}

LanePlan lane_plan(int n, int n_s, double rate, TaskKind task) {
    require(n >= 1 && n_s >= 1, "lane_plan: dimensions must be positive");
    require(rate > 0.0, "lane_plan: rate must be positive");

    LanePlan plan;
    plan.nominal_rate = rate;
    plan.lanes = (task == TaskKind::Estimation)
                     ? n_s
                     : static_cast<int>(std::floor(static_cast<double>(n_s) * rate));
    if (plan.lanes == 0) throw std::invalid_argument("lane_plan: zero quantizer lanes at this rate");

    const double bits_per_lane = static_cast<double>(n) * rate / plan.lanes;
    plan.resolution = static_cast<int>(std::floor(std::exp2(bits_per_lane)));
    if (plan.resolution < 2) {
        plan.resolution = 2;
        plan.clamped = true;
    }
    plan.effective_rate = plan.lanes * std::log2(static_cast<double>(plan.resolution)) / n;
    return plan;
}

}  // namespace taskquant
