#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>

#include "taskquant/checkpoint.hpp"
#include "taskquant/config.hpp"
#include "taskquant/harness.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_path;
    std::string checkpoint_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string mode;
    std::string csi;
    bool snr_uncertainty = false;
    int count = 0;
};

taskquant::ExperimentConfig load_config(const CliOptions& opt) {
    using namespace taskquant;
    ExperimentConfig cfg = parse_config_file(opt.config_path);
    if (opt.seed_set) {
        cfg.seed = opt.seed;
        cfg.train.seed = opt.seed;
    }
    if (!opt.out_path.empty()) cfg.out_path = opt.out_path;
    if (!opt.mode.empty()) {
        if (opt.mode == "soft") cfg.mode = TrainMode::SoftToHard;
        else if (opt.mode == "passing") cfg.mode = TrainMode::PassingGradient;
        else if (opt.mode == "uniform-soft") cfg.mode = TrainMode::UniformSoft;
        else throw ConfigError("unknown --mode '" + opt.mode + "'");
    }
    if (!opt.csi.empty()) {
        if (opt.csi == "exact") cfg.csi = CsiMode::Exact;
        else if (opt.csi == "perturbed") cfg.csi = CsiMode::Perturbed;
        else throw ConfigError("unknown --csi '" + opt.csi + "'");
    }
    if (opt.snr_uncertainty) cfg.snr_uncertainty = true;
    cfg.validate();
    return cfg;
}

void write_csv(const taskquant::SweepResult& result, const std::string& path) {
    if (path.empty()) taskquant::emit_csv(result, std::cout);
    else taskquant::emit_csv(result, path);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace taskquant;

    CLI::App app{"task-based quantization with scalar ADCs: training and experiment harness"};
    app.require_subcommand(1);
    CliOptions opt;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* config = sub->add_option("--config", opt.config_path, "experiment config file");
        if (needs_config) config->required();
        sub->add_option("--seed", opt.seed, "override the master seed")->each([&](const std::string&) {
            opt.seed_set = true;
        });
        sub->add_option("--out", opt.out_path, "output path (default: config 'out' or stdout)");
        sub->add_option("--mode", opt.mode, "training mode: soft|passing|uniform-soft");
        sub->add_option("--csi", opt.csi, "training CSI: exact|perturbed");
        sub->add_flag("--snr-uncertainty", opt.snr_uncertainty, "train with P ~ U[1,10] per sample");
    };

    CLI::App* gen = app.add_subcommand("gen", "dump a generated dataset as CSV");
    add_common(gen, true);
    gen->add_option("--count", opt.count, "number of samples (default: train_size)");

    CLI::App* train_cmd = app.add_subcommand("train", "train a single model and write a checkpoint");
    add_common(train_cmd, true);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on fresh data");
    add_common(eval_cmd, true);
    eval_cmd->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run a full experiment sweep and emit CSV");
    add_common(sweep, true);

    CLI::App* baseline = app.add_subcommand("baseline", "bounds and model-based detector curves only");
    add_common(baseline, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const ExperimentConfig cfg = load_config(opt);

        if (app.got_subcommand(gen)) {
            const int count = opt.count > 0 ? opt.count : cfg.train_size;
            Batch batch;
            if (cfg.task == ExperimentTask::ChannelEstimation) {
                const ChannelEstScenario sc =
                    make_channel_est_scenario(cfg.n_users, cfg.n_antennas, cfg.pilot_len, cfg.snr);
                batch = gen_channel_est(sc, count, cfg.seed,
                                        cfg.snr_uncertainty ? SnrMode::Uniform : SnrMode::Fixed);
            } else {
                DetectionScenario sc;
                sc.n_antennas = cfg.n_antennas;
                sc.n_users = cfg.n_users;
                sc.channel = random_channel(cfg.n_antennas, cfg.n_users, mix_seed(cfg.seed, 0x11)) /
                             std::sqrt(static_cast<double>(cfg.n_antennas));
                sc.noise_var = std::pow(10.0, -cfg.snr_db_grid.front() / 10.0);
                batch = gen_detection(sc, count, cfg.seed, cfg.csi, cfg.csi_squared_variance);
            }
            if (cfg.out_path.empty()) {
                write_dataset_csv(batch, std::cout);
            } else {
                std::ofstream out(cfg.out_path);
                if (!out) throw std::runtime_error("cannot open '" + cfg.out_path + "'");
                write_dataset_csv(batch, out);
            }
        } else if (app.got_subcommand(train_cmd)) {
            TrainResult history;
            const HybridNetwork net = train_single(cfg, &history);
            const std::string path = cfg.out_path.empty() ? "model.ckpt" : cfg.out_path;
            save_checkpoint(net, path);
            std::cout << "checkpoint " << path << " final-loss " << history.epoch_loss.back() << "\n";
        } else if (app.got_subcommand(eval_cmd)) {
            const HybridNetwork net = load_checkpoint(opt.checkpoint_path);
            write_csv(eval_single(cfg, net), cfg.out_path);
        } else if (app.got_subcommand(sweep)) {
            const SweepResult result = (cfg.task == ExperimentTask::ChannelEstimation)
                                           ? run_channel_est_sweep(cfg)
                                           : run_detection_sweep(cfg);
            write_csv(result, cfg.out_path);
        } else if (app.got_subcommand(baseline)) {
            write_csv(run_baseline_sweep(cfg), cfg.out_path);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const TrainingDivergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
