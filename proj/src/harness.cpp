#include "taskquant/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>

namespace taskquant {

namespace {

// seed stream tags
constexpr std::uint64_t kTagChannel = 0x11;
constexpr std::uint64_t kTagTrainData = 0x22;
constexpr std::uint64_t kTagEvalData = 0x33;
constexpr std::uint64_t kTagInit = 0x44;
constexpr std::uint64_t kTagSgd = 0x55;
constexpr std::uint64_t kTagCsiTrain = 0x66;
constexpr std::uint64_t kTagCsiMap = 0x77;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

LanePlan plan_from_resolution(int n, int n_s, int resolution) {
    LanePlan plan;
    plan.lanes = n_s;
    plan.resolution = resolution;
    plan.effective_rate = n_s * std::log2(static_cast<double>(resolution)) / n;
    plan.nominal_rate = plan.effective_rate;
    return plan;
}

QuantizerBank make_bank(const LanePlan& plan, TrainMode mode) {
    QuantizerBank bank;
    bank.lane_count = plan.lanes;
    switch (mode) {
        case TrainMode::SoftToHard:
            bank.mode = BankMode::Soft;
            bank.trainable = true;
            bank.soft = init_soft_params(plan.resolution);
            break;
        case TrainMode::UniformSoft:
            bank.mode = BankMode::Soft;
            bank.trainable = false;  // a, b stay at the uniform partition
            bank.soft = init_soft_params(plan.resolution);
            break;
        case TrainMode::PassingGradient:
            bank.mode = BankMode::PassingGradient;
            bank.hard = uniform_quantizer(-2.0, 2.0, plan.resolution);
            break;
    }
    return bank;
}

BankMode bank_mode_of(TrainMode mode) {
    return mode == TrainMode::PassingGradient ? BankMode::PassingGradient : BankMode::Soft;
}

struct RowSink {
    SweepResult& result;
    double sweep_var;
    std::uint64_t seed;
    const std::string& digest;

    void add(const std::string& variant, const std::string& metric, double value, double stderr_ = 0.0) {
        result.rows.push_back({sweep_var, variant, metric, value, stderr_, seed, digest});
    }
    void add_plan(const LanePlan& plan) {
        add("lane-plan", "lanes", plan.lanes);
        add("lane-plan", "resolution", plan.resolution);
        add("lane-plan", "nominal_rate", plan.nominal_rate);
        add("lane-plan", "effective_rate", plan.effective_rate);
        if (plan.clamped) add("lane-plan", "clamped", 1.0);
    }
};

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

MetricValue evaluate_mse(const HybridNetwork& net, const Batch& test_pairs) {
    require(net.head == TaskHead::Estimation, "evaluate_mse: estimation head required");
    require(test_pairs.count() >= 1, "evaluate_mse: empty test set");
    const Eigen::MatrixXd predictions = forward_deploy(net, test_pairs.inputs);
    const Eigen::Index count = test_pairs.count();
    const double dims = static_cast<double>(test_pairs.targets.cols());

    const Eigen::VectorXd per_sample =
        (predictions - test_pairs.targets).array().square().matrix().rowwise().sum() / dims;
    MetricValue mv;
    mv.value = per_sample.mean();
    if (count > 1) {
        const double var = (per_sample.array() - mv.value).square().sum() / static_cast<double>(count - 1);
        mv.stderr_ = std::sqrt(var / static_cast<double>(count));
    }
    return mv;
}

MetricValue evaluate_ber(const Detector& detector, const DetectionScenario& sc, int trials,
                         std::uint64_t seed) {
    require(trials >= 1, "evaluate_ber: trials must be >= 1");
    const Batch eval = gen_detection(sc, trials, seed, CsiMode::Exact);
    const double users = static_cast<double>(sc.n_users);

    Eigen::VectorXd per_trial(trials);
    for (int i = 0; i < trials; ++i) {
        const Eigen::VectorXd decided = detector(eval.inputs.row(i).transpose());
        require(decided.size() == sc.n_users, "evaluate_ber: detector output size mismatch");
        int wrong = 0;
        for (int u = 0; u < sc.n_users; ++u)
            if ((decided(u) > 0.0) != (eval.targets(i, u) > 0.0)) ++wrong;
        per_trial(i) = wrong / users;
    }
    MetricValue mv;
    mv.value = per_trial.mean();
    if (trials > 1) {
        const double var = (per_trial.array() - mv.value).square().sum() / static_cast<double>(trials - 1);
        mv.stderr_ = std::sqrt(var / static_cast<double>(trials));
    }
    return mv;
}

HybridNetwork make_estimation_network(int obs_dim, int target_dim, const LanePlan& plan,
                                      TrainMode mode, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kTagInit));
    HybridNetwork net;
    net.head = TaskHead::Estimation;
    // linear analog and digital stages; the quantizer is the only nonlinearity
    net.analog.push_back(make_dense_layer(plan.lanes, obs_dim, Activation::Identity, rng));
    net.digital.push_back(make_dense_layer(target_dim, plan.lanes, Activation::Identity, rng));
    net.bank = make_bank(plan, mode);
    net.validate();
    return net;
}

HybridNetwork make_detection_network(int obs_dim, int n_users, const LanePlan& plan,
                                     TrainMode mode, std::uint64_t seed, int hidden_width) {
    Rng rng(mix_seed(seed, kTagInit));
    HybridNetwork net;
    net.head = TaskHead::Classification;
    net.analog.push_back(make_dense_layer(hidden_width, obs_dim, Activation::Tanh, rng));
    net.analog.push_back(make_dense_layer(plan.lanes, hidden_width, Activation::Identity, rng));
    net.digital.push_back(make_dense_layer(hidden_width, plan.lanes, Activation::Tanh, rng));
    net.digital.push_back(make_dense_layer(1 << n_users, hidden_width, Activation::Softmax, rng));
    net.bank = make_bank(plan, mode);
    net.validate();
    return net;
}

SweepResult run_channel_est_sweep(const ExperimentConfig& cfg) {
    require(cfg.task == ExperimentTask::ChannelEstimation, "run_channel_est_sweep: wrong task");
    cfg.validate();
    const std::string digest = config_digest(cfg);
    const ChannelEstScenario sc =
        make_channel_est_scenario(cfg.n_users, cfg.n_antennas, cfg.pilot_len, cfg.snr);
    const int n = sc.obs_dim();
    const int n_s = sc.target_dim();

    SweepResult result;
    for (std::size_t g = 0; g < cfg.mtilde_grid.size(); ++g) {
        const int mtilde = cfg.mtilde_grid[g];
        const LanePlan plan = plan_from_resolution(n, n_s, mtilde);
        RowSink sink{result, static_cast<double>(mtilde), cfg.seed, digest};
        sink.add_plan(plan);
        sink.add("mmse", "eta", mmse_bound(cfg.snr, cfg.pilot_len));
        sink.add("fundamental-limit", "eta_opt",
                 fundamental_limit(cfg.snr, cfg.pilot_len, sc.pilot_ratio(), plan.effective_rate));

        const Batch eval_set =
            gen_channel_est(sc, cfg.eval_size, mix_seed(cfg.seed, kTagEvalData, g), SnrMode::Fixed);

        auto train_variant = [&](const std::string& variant, SnrMode snr_mode) {
            TrainConfig tc = cfg.train;
            tc.mode = BankMode::Soft;
            tc.seed = mix_seed(cfg.seed, kTagSgd, g);
            HybridNetwork net = make_estimation_network(n, n_s, plan, TrainMode::SoftToHard,
                                                        mix_seed(cfg.seed, kTagInit, g));
            const Batch data =
                gen_channel_est(sc, cfg.train_size, mix_seed(cfg.seed, kTagTrainData, g), snr_mode);
            try {
                train(net, data, tc);
            } catch (const TrainingDivergence&) {
                sink.add(variant, "failed", 1.0);
                return;
            }
            const MetricValue mse = evaluate_mse(net, eval_set);
            sink.add(variant, "mse", mse.value, mse.stderr_);
        };

        train_variant("soft-to-hard", SnrMode::Fixed);
        if (cfg.snr_uncertainty) train_variant("soft-to-hard-snr-unc", SnrMode::Uniform);
    }
    return result;
}

namespace {

struct DetectionGridPoint {
    double rate;
    double snr_db;
    double sweep_var;
    std::size_t index;
};

std::vector<DetectionGridPoint> detection_grid(const ExperimentConfig& cfg) {
    std::vector<DetectionGridPoint> grid;
    const bool sweep_rate = cfg.rate_grid.size() > 1;
    std::size_t index = 0;
    for (double rate : cfg.rate_grid)
        for (double snr_db : cfg.snr_db_grid) {
            grid.push_back({rate, snr_db, sweep_rate ? rate : snr_db, index});
            ++index;
        }
    return grid;
}

DetectionScenario detection_scenario(const ExperimentConfig& cfg, double snr_db) {
    DetectionScenario sc;
    sc.n_antennas = cfg.n_antennas;
    sc.n_users = cfg.n_users;
    // unit average per-user gain so SNR = 1/sigma_w^2 matches the operating curves
    sc.channel = random_channel(cfg.n_antennas, cfg.n_users, mix_seed(cfg.seed, kTagChannel)) /
                 std::sqrt(static_cast<double>(cfg.n_antennas));
    sc.noise_var = std::pow(10.0, -snr_db / 10.0);
    sc.validate();
    return sc;
}

Detector map_detector(const DetectionScenario& sc) {
    const Eigen::MatrixXd channel = sc.channel;
    const double sigma_w = std::sqrt(sc.noise_var);
    return [channel, sigma_w](const Eigen::VectorXd& x) { return map_detect(x, channel, sigma_w); };
}

Detector quantized_map_detector(const DetectionScenario& sc, double rate) {
    const int levels = std::max(1, static_cast<int>(std::floor(std::exp2(rate))));
    const HardQuantizer q = uniform_quantizer(-2.0, 2.0, levels);
    const Eigen::MatrixXd channel = sc.channel;
    const double sigma_w = std::sqrt(sc.noise_var);
    return [q, channel, sigma_w](const Eigen::VectorXd& x) {
        return quantized_map_detect(observe_cells(q, x), channel, sigma_w);
    };
}

// MAP operating on a noisy channel estimate, redrawn per trial
Detector map_csi_detector(const DetectionScenario& sc, std::uint64_t seed, bool squared_variance) {
    const Eigen::MatrixXd channel = sc.channel;
    const double sigma_w = std::sqrt(sc.noise_var);
    auto rng = std::make_shared<Rng>(seed);
    return [channel, sigma_w, rng, squared_variance](const Eigen::VectorXd& x) {
        Eigen::MatrixXd noisy = channel;
        for (Eigen::Index c = 0; c < noisy.cols(); ++c)
            for (Eigen::Index r = 0; r < noisy.rows(); ++r) {
                const double mag = std::abs(channel(r, c));
                const double var = squared_variance ? 0.04 * mag * mag : 0.2 * mag;
                noisy(r, c) += rng->normal() * std::sqrt(var);
            }
        return map_detect(x, noisy, sigma_w);
    };
}

}  // namespace

SweepResult run_detection_sweep(const ExperimentConfig& cfg) {
    require(cfg.task == ExperimentTask::Detection, "run_detection_sweep: wrong task");
    cfg.validate();
    const std::string digest = config_digest(cfg);

    SweepResult result;
    for (const DetectionGridPoint& point : detection_grid(cfg)) {
        const DetectionScenario sc = detection_scenario(cfg, point.snr_db);
        const LanePlan plan = lane_plan(cfg.n_antennas, cfg.n_users, point.rate, TaskKind::Detection);
        RowSink sink{result, point.sweep_var, cfg.seed, digest};
        sink.add_plan(plan);

        const std::uint64_t eval_seed = mix_seed(cfg.seed, kTagEvalData, point.index);
        auto ber_row = [&](const std::string& variant, const Detector& detector) {
            const MetricValue ber = evaluate_ber(detector, sc, cfg.eval_size, eval_seed);
            sink.add(variant, "ber", ber.value, ber.stderr_);
        };

        ber_row("map", map_detector(sc));
        ber_row("qmap", quantized_map_detector(sc, point.rate));

        auto train_variant = [&](const std::string& variant, TrainMode mode, CsiMode csi,
                                 std::uint64_t data_tag) {
            TrainConfig tc = cfg.train;
            tc.mode = bank_mode_of(mode);
            tc.seed = mix_seed(cfg.seed, kTagSgd, point.index);
            HybridNetwork net = make_detection_network(cfg.n_antennas, cfg.n_users, plan, mode,
                                                       mix_seed(cfg.seed, kTagInit, point.index));
            const Batch data = gen_detection(sc, cfg.train_size, mix_seed(cfg.seed, data_tag, point.index),
                                             csi, cfg.csi_squared_variance);
            try {
                train(net, data, tc);
            } catch (const TrainingDivergence&) {
                sink.add(variant, "failed", 1.0);
                return;
            }
            ber_row(variant, [net](const Eigen::VectorXd& x) { return classify(net, x); });
        };

        train_variant("soft-to-hard", TrainMode::SoftToHard, CsiMode::Exact, kTagTrainData);
        train_variant("passing-gradient", TrainMode::PassingGradient, CsiMode::Exact, kTagTrainData);
        train_variant("uniform-soft", TrainMode::UniformSoft, CsiMode::Exact, kTagTrainData);

        if (cfg.csi == CsiMode::Perturbed) {
            train_variant("soft-to-hard-csi", TrainMode::SoftToHard, CsiMode::Perturbed, kTagCsiTrain);
            ber_row("map-csi", map_csi_detector(sc, mix_seed(cfg.seed, kTagCsiMap, point.index),
                                                cfg.csi_squared_variance));
        }
    }
    return result;
}

SweepResult run_baseline_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string digest = config_digest(cfg);
    SweepResult result;

    if (cfg.task == ExperimentTask::ChannelEstimation) {
        const ChannelEstScenario sc =
            make_channel_est_scenario(cfg.n_users, cfg.n_antennas, cfg.pilot_len, cfg.snr);
        for (int mtilde : cfg.mtilde_grid) {
            const LanePlan plan = plan_from_resolution(sc.obs_dim(), sc.target_dim(), mtilde);
            RowSink sink{result, static_cast<double>(mtilde), cfg.seed, digest};
            sink.add_plan(plan);
            sink.add("mmse", "eta", mmse_bound(cfg.snr, cfg.pilot_len));
            sink.add("fundamental-limit", "eta_opt",
                     fundamental_limit(cfg.snr, cfg.pilot_len, sc.pilot_ratio(), plan.effective_rate));
        }
        return result;
    }

    for (const DetectionGridPoint& point : detection_grid(cfg)) {
        const DetectionScenario sc = detection_scenario(cfg, point.snr_db);
        const LanePlan plan = lane_plan(cfg.n_antennas, cfg.n_users, point.rate, TaskKind::Detection);
        RowSink sink{result, point.sweep_var, cfg.seed, digest};
        sink.add_plan(plan);
        const std::uint64_t eval_seed = mix_seed(cfg.seed, kTagEvalData, point.index);
        const MetricValue map_ber = evaluate_ber(map_detector(sc), sc, cfg.eval_size, eval_seed);
        sink.add("map", "ber", map_ber.value, map_ber.stderr_);
        const MetricValue qmap_ber =
            evaluate_ber(quantized_map_detector(sc, point.rate), sc, cfg.eval_size, eval_seed);
        sink.add("qmap", "ber", qmap_ber.value, qmap_ber.stderr_);
    }
    return result;
}

HybridNetwork train_single(const ExperimentConfig& cfg, TrainResult* history) {
    cfg.validate();
    TrainConfig tc = cfg.train;
    tc.mode = bank_mode_of(cfg.mode);
    tc.seed = mix_seed(cfg.seed, kTagSgd, 0);

    HybridNetwork net;
    Batch data;
    if (cfg.task == ExperimentTask::ChannelEstimation) {
        const ChannelEstScenario sc =
            make_channel_est_scenario(cfg.n_users, cfg.n_antennas, cfg.pilot_len, cfg.snr);
        const LanePlan plan = plan_from_resolution(sc.obs_dim(), sc.target_dim(), cfg.mtilde_grid.front());
        net = make_estimation_network(sc.obs_dim(), sc.target_dim(), plan, cfg.mode,
                                      mix_seed(cfg.seed, kTagInit, 0));
        data = gen_channel_est(sc, cfg.train_size, mix_seed(cfg.seed, kTagTrainData, 0),
                               cfg.snr_uncertainty ? SnrMode::Uniform : SnrMode::Fixed);
    } else {
        const DetectionScenario sc = detection_scenario(cfg, cfg.snr_db_grid.front());
        const LanePlan plan =
            lane_plan(cfg.n_antennas, cfg.n_users, cfg.rate_grid.front(), TaskKind::Detection);
        net = make_detection_network(cfg.n_antennas, cfg.n_users, plan, cfg.mode,
                                     mix_seed(cfg.seed, kTagInit, 0));
        data = gen_detection(sc, cfg.train_size, mix_seed(cfg.seed, kTagTrainData, 0), cfg.csi,
                             cfg.csi_squared_variance);
    }
    const TrainResult tr = train(net, data, tc);
    if (history) *history = tr;
    return net;
}

SweepResult eval_single(const ExperimentConfig& cfg, const HybridNetwork& net) {
    cfg.validate();
    const std::string digest = config_digest(cfg);
    SweepResult result;
    if (cfg.task == ExperimentTask::ChannelEstimation) {
        const ChannelEstScenario sc =
            make_channel_est_scenario(cfg.n_users, cfg.n_antennas, cfg.pilot_len, cfg.snr);
        RowSink sink{result, static_cast<double>(cfg.mtilde_grid.front()), cfg.seed, digest};
        const Batch eval_set =
            gen_channel_est(sc, cfg.eval_size, mix_seed(cfg.seed, kTagEvalData, 0), SnrMode::Fixed);
        const MetricValue mse = evaluate_mse(net, eval_set);
        sink.add(to_string(cfg.mode), "mse", mse.value, mse.stderr_);
    } else {
        const DetectionScenario sc = detection_scenario(cfg, cfg.snr_db_grid.front());
        RowSink sink{result, cfg.snr_db_grid.front(), cfg.seed, digest};
        const MetricValue ber =
            evaluate_ber([&net](const Eigen::VectorXd& x) { return classify(net, x); }, sc,
                         cfg.eval_size, mix_seed(cfg.seed, kTagEvalData, 0));
        sink.add(to_string(cfg.mode), "ber", ber.value, ber.stderr_);
    }
    return result;
}

void emit_csv(const SweepResult& result, std::ostream& out) {
    std::vector<const SweepRow*> rows;
    rows.reserve(result.rows.size());
    for (const SweepRow& row : result.rows) rows.push_back(&row);
    std::sort(rows.begin(), rows.end(), [](const SweepRow* a, const SweepRow* b) {
        return std::tie(a->sweep_var, a->variant, a->metric) < std::tie(b->sweep_var, b->variant, b->metric);
    });

    out << "sweep_var,variant,metric,value,stderr,seed,config_digest\n";
    for (const SweepRow* row : rows)
        out << format_value(row->sweep_var) << ',' << row->variant << ',' << row->metric << ','
            << format_value(row->value) << ',' << format_value(row->stderr_) << ',' << row->seed << ','
            << row->config_digest << '\n';
}

void emit_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_csv: cannot open '" + path + "'");
    emit_csv(result, out);
    out.flush();
    if (!out.good()) throw std::runtime_error("emit_csv: write failure on '" + path + "'");
}

}  // namespace taskquant
