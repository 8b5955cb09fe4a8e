#include "taskquant/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace taskquant {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

constexpr double kLogFloor = -745.0;  // smallest representable double exponent
constexpr double kInvSqrt2 = 0.70710678118654752440;

// P(a < Z <= b) for standard normal Z, stable in both tails.
double normal_interval(double a, double b) {
    if (!(b > a)) return 0.0;
    if (a >= 0.0)  // both in the upper tail: difference of complementary CDFs
        return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
    if (b <= 0.0)
        return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
    return normal_cdf(b) - normal_cdf(a);
}

}  // namespace

double mmse_bound(double snr, double pilot_len) {
    require(snr >= 0.0 && pilot_len >= 1.0, "mmse_bound: invalid inputs");
    return 1.0 / (2.0 * (1.0 + snr * pilot_len));
}

double fundamental_limit(double snr, double pilot_len, double pilot_ratio, double rate) {
    require(snr >= 0.0 && pilot_len >= 1.0 && pilot_ratio >= 1.0 && rate >= 0.0,
            "fundamental_limit: invalid inputs");
    const double pt = snr * pilot_len;
    return mmse_bound(snr, pilot_len) + pt / (2.0 * (1.0 + pt)) * std::exp2(-2.0 * pilot_ratio * rate);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

Eigen::VectorXd map_detect(const Eigen::VectorXd& x, const Eigen::MatrixXd& channel, double sigma_w) {
    require(sigma_w > 0.0, "map_detect: noise level must be positive");
    require(channel.rows() == x.size(), "map_detect: observation/channel mismatch");
    const int n_users = static_cast<int>(channel.cols());
    require(n_users >= 1 && n_users <= 24, "map_detect: refusing enumeration beyond 24 users");

    // Gaussian likelihood with a uniform prior reduces to nearest codeword
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    Eigen::VectorXd candidate(n_users);
    for (int index = 0; index < (1 << n_users); ++index) {
        for (int k = 0; k < n_users; ++k) candidate(k) = ((index >> k) & 1) ? 1.0 : -1.0;
        const double dist = (x - channel * candidate).squaredNorm();
        if (dist < best_dist) {  // strict: ties keep the lowest index
            best_dist = dist;
            best = index;
        }
    }
    for (int k = 0; k < n_users; ++k) candidate(k) = ((best >> k) & 1) ? 1.0 : -1.0;
    return candidate;
}

CellObservation observe_cells(const HardQuantizer& q, const Eigen::VectorXd& x) {
    const double inf = std::numeric_limits<double>::infinity();
    CellObservation cells;
    cells.lower.resize(x.size());
    cells.upper.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const int k = hard_cell_index(q, x(i));
        cells.lower(i) = (k == 0) ? -inf : q.thresholds(k - 1);
        cells.upper(i) = (k == q.thresholds.size()) ? inf : q.thresholds(k);
    }
    return cells;
}

double cell_log_likelihood(const CellObservation& cells, const Eigen::MatrixXd& channel,
                           double sigma_w, const Eigen::VectorXd& symbols) {
    require(sigma_w > 0.0, "cell_log_likelihood: noise level must be positive");
    require(cells.lower.size() == channel.rows() && cells.upper.size() == channel.rows(),
            "cell_log_likelihood: cell/channel mismatch");
    const Eigen::VectorXd mean = channel * symbols;
    double total = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        require(cells.lower(i) < cells.upper(i), "cell_log_likelihood: empty cell");
        const double p = normal_interval((cells.lower(i) - mean(i)) / sigma_w,
                                         (cells.upper(i) - mean(i)) / sigma_w);
        const double lp = std::log(p);
        total += (lp > kLogFloor) ? lp : kLogFloor;
    }
    return total;
}

Eigen::VectorXd quantized_map_detect(const CellObservation& cells, const Eigen::MatrixXd& channel,
                                     double sigma_w) {
    const int n_users = static_cast<int>(channel.cols());
    require(n_users >= 1 && n_users <= 24, "quantized_map_detect: refusing enumeration beyond 24 users");

    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd candidate(n_users);
    for (int index = 0; index < (1 << n_users); ++index) {
        for (int k = 0; k < n_users; ++k) candidate(k) = ((index >> k) & 1) ? 1.0 : -1.0;
        const double score = cell_log_likelihood(cells, channel, sigma_w, candidate);
        if (score > best_score) {
            best_score = score;
            best = index;
        }
    }
    for (int k = 0; k < n_users; ++k) candidate(k) = ((best >> k) & 1) ? 1.0 : -1.0;
    return candidate;
}

}  // namespace taskquant
