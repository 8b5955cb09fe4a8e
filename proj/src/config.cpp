#include "taskquant/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace taskquant {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': " + value);
    }
    if (pos != value.size()) throw ConfigError("config: trailing junk in '" + key + "': " + value);
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': " + value);
    }
    if (pos != value.size()) throw ConfigError("config: trailing junk in '" + key + "': " + value);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("config: bad boolean for '" + key + "': " + value);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(trim(item));
    return items;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

int ExperimentConfig::obs_dim() const {
    return task == ExperimentTask::ChannelEstimation ? 2 * pilot_len * n_antennas : n_antennas;
}

int ExperimentConfig::target_dim() const {
    return task == ExperimentTask::ChannelEstimation ? 2 * n_users * n_antennas : n_users;
}

void ExperimentConfig::apply_task_defaults() {
    const bool estimation = (task == ExperimentTask::ChannelEstimation);
    if (train_size == 0) train_size = estimation ? (1 << 15) : 5000;
    if (eval_size == 0) eval_size = estimation ? (1 << 10) : 20000;
    if (train.epochs == 0) train.epochs = estimation ? 100 : 200;
    if (train.learning_rate == 0.0) train.learning_rate = estimation ? 0.05 : 0.05;
}

void ExperimentConfig::validate() const {
    if (n_users < 1 || n_antennas < 1) throw ConfigError("config: dimensions must be positive");
    if (train_size < 1) throw ConfigError("config: train_size must be >= 1");
    if (eval_size < 1) throw ConfigError("config: eval_size must be >= 1");
    if (train.epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (train.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (train.learning_rate < 0.0) throw ConfigError("config: learning_rate must be >= 0");
    if (train.annealing.gamma < 1.0) throw ConfigError("config: anneal_gamma must be >= 1");
    if (task == ExperimentTask::ChannelEstimation) {
        if (pilot_len < n_users) throw ConfigError("config: pilot_len must be >= n_users");
        if (snr < 0.0) throw ConfigError("config: snr must be >= 0");
        if (mtilde_grid.empty()) throw ConfigError("config: mtilde_grid must be nonempty");
        for (int m : mtilde_grid)
            if (m < 2) throw ConfigError("config: mtilde_grid entries must be >= 2");
    } else {
        if (rate_grid.empty() || snr_db_grid.empty())
            throw ConfigError("config: rate_grid and snr_db_grid must be nonempty");
        if (rate_grid.size() > 1 && snr_db_grid.size() > 1)
            throw ConfigError("config: detection sweeps fix one axis; make rate_grid or snr_db_grid a single value");
        for (double r : rate_grid)
            if (r <= 0.0) throw ConfigError("config: rates must be positive");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    cfg.train.epochs = 0;         // 0 = fill from task defaults
    cfg.train.learning_rate = 0.0;
    std::set<std::string> seen;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config: empty key or value at line " + std::to_string(lineno));
        if (!seen.insert(key).second)
            throw ConfigError("config: duplicate key '" + key + "'");

        if (key == "task") {
            if (value == "channel-est") cfg.task = ExperimentTask::ChannelEstimation;
            else if (value == "detection") cfg.task = ExperimentTask::Detection;
            else throw ConfigError("config: unknown task '" + value + "'");
        } else if (key == "n_users") {
            cfg.n_users = static_cast<int>(parse_int(key, value));
        } else if (key == "n_antennas") {
            cfg.n_antennas = static_cast<int>(parse_int(key, value));
        } else if (key == "pilot_len") {
            cfg.pilot_len = static_cast<int>(parse_int(key, value));
        } else if (key == "snr") {
            cfg.snr = parse_double(key, value);
        } else if (key == "mtilde_grid") {
            cfg.mtilde_grid.clear();
            for (const std::string& item : split_list(value))
                cfg.mtilde_grid.push_back(static_cast<int>(parse_int(key, item)));
        } else if (key == "rate_grid") {
            cfg.rate_grid.clear();
            for (const std::string& item : split_list(value)) cfg.rate_grid.push_back(parse_double(key, item));
        } else if (key == "snr_db_grid") {
            cfg.snr_db_grid.clear();
            for (const std::string& item : split_list(value)) cfg.snr_db_grid.push_back(parse_double(key, item));
        } else if (key == "mode") {
            if (value == "soft") cfg.mode = TrainMode::SoftToHard;
            else if (value == "passing") cfg.mode = TrainMode::PassingGradient;
            else if (value == "uniform-soft") cfg.mode = TrainMode::UniformSoft;
            else throw ConfigError("config: unknown mode '" + value + "'");
        } else if (key == "csi") {
            if (value == "exact") cfg.csi = CsiMode::Exact;
            else if (value == "perturbed") cfg.csi = CsiMode::Perturbed;
            else throw ConfigError("config: unknown csi mode '" + value + "'");
        } else if (key == "csi_squared_variance") {
            cfg.csi_squared_variance = parse_bool(key, value);
        } else if (key == "snr_uncertainty") {
            cfg.snr_uncertainty = parse_bool(key, value);
        } else if (key == "train_size") {
            cfg.train_size = static_cast<int>(parse_int(key, value));
        } else if (key == "eval_size") {
            cfg.eval_size = static_cast<int>(parse_int(key, value));
        } else if (key == "epochs") {
            cfg.train.epochs = static_cast<int>(parse_int(key, value));
        } else if (key == "batch_size") {
            cfg.train.batch_size = static_cast<int>(parse_int(key, value));
        } else if (key == "learning_rate") {
            cfg.train.learning_rate = parse_double(key, value);
        } else if (key == "anneal_gamma") {
            cfg.train.annealing.gamma = parse_double(key, value);
        } else if (key == "anneal_co_scale") {
            cfg.train.annealing.co_scale_shifts = parse_bool(key, value);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "out") {
            cfg.out_path = value;
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }

    if (cfg.task == ExperimentTask::Detection && !seen.count("n_antennas")) cfg.n_antennas = 12;
    cfg.apply_task_defaults();
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(in);
}

const char* to_string(ExperimentTask task) {
    return task == ExperimentTask::ChannelEstimation ? "channel-est" : "detection";
}

const char* to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::SoftToHard: return "soft";
        case TrainMode::PassingGradient: return "passing";
        case TrainMode::UniformSoft: return "uniform-soft";
    }
    return "?";
}

std::string canonical_config(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["task"] = to_string(cfg.task);
    kv["n_users"] = std::to_string(cfg.n_users);
    kv["n_antennas"] = std::to_string(cfg.n_antennas);
    kv["pilot_len"] = std::to_string(cfg.pilot_len);
    kv["snr"] = fmt(cfg.snr);
    std::string list;
    for (std::size_t i = 0; i < cfg.mtilde_grid.size(); ++i)
        list += (i ? "," : "") + std::to_string(cfg.mtilde_grid[i]);
    kv["mtilde_grid"] = list;
    list.clear();
    for (std::size_t i = 0; i < cfg.rate_grid.size(); ++i) list += (i ? "," : "") + fmt(cfg.rate_grid[i]);
    kv["rate_grid"] = list;
    list.clear();
    for (std::size_t i = 0; i < cfg.snr_db_grid.size(); ++i) list += (i ? "," : "") + fmt(cfg.snr_db_grid[i]);
    kv["snr_db_grid"] = list;
    kv["mode"] = to_string(cfg.mode);
    kv["csi"] = cfg.csi == CsiMode::Exact ? "exact" : "perturbed";
    kv["csi_squared_variance"] = cfg.csi_squared_variance ? "true" : "false";
    kv["snr_uncertainty"] = cfg.snr_uncertainty ? "true" : "false";
    kv["train_size"] = std::to_string(cfg.train_size);
    kv["eval_size"] = std::to_string(cfg.eval_size);
    kv["epochs"] = std::to_string(cfg.train.epochs);
    kv["batch_size"] = std::to_string(cfg.train.batch_size);
    kv["learning_rate"] = fmt(cfg.train.learning_rate);
    kv["anneal_gamma"] = fmt(cfg.train.annealing.gamma);
    kv["anneal_co_scale"] = cfg.train.annealing.co_scale_shifts ? "true" : "false";
    kv["seed"] = std::to_string(cfg.seed);

    std::string out;
    for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
    return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
    const std::string text = canonical_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace taskquant
