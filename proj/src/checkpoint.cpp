#include "taskquant/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace taskquant {

namespace {

constexpr const char* kMagic = "taskquant-checkpoint";
constexpr int kVersion = 1;

void fail(const std::string& what) { throw std::runtime_error("checkpoint: " + what); }

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Softmax: return "softmax";
    }
    fail("unknown activation");
    return "";
}

Activation parse_activation(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "tanh") return Activation::Tanh;
    if (s == "softmax") return Activation::Softmax;
    fail("unknown activation '" + s + "'");
    return Activation::Identity;
}

const char* mode_name(BankMode m) {
    switch (m) {
        case BankMode::Soft: return "soft";
        case BankMode::Hard: return "hard";
        case BankMode::PassingGradient: return "passing";
    }
    fail("unknown bank mode");
    return "";
}

BankMode parse_mode(const std::string& s) {
    if (s == "soft") return BankMode::Soft;
    if (s == "hard") return BankMode::Hard;
    if (s == "passing") return BankMode::PassingGradient;
    fail("unknown bank mode '" + s + "'");
    return BankMode::Soft;
}

void write_values(std::ostream& out, const char* tag, const double* data, Eigen::Index count) {
    out << tag;
    char buf[32];
    for (Eigen::Index i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", data[i]);
        out << ' ' << buf;
    }
    out << '\n';
}

void read_values(std::istream& in, const char* tag, double* data, Eigen::Index count) {
    std::string word;
    if (!(in >> word) || word != tag) fail(std::string("expected '") + tag + "' section");
    for (Eigen::Index i = 0; i < count; ++i)
        if (!(in >> data[i])) fail(std::string("truncated '") + tag + "' section");
}

void write_layers(std::ostream& out, const char* tag, const std::vector<DenseLayer>& layers) {
    out << tag << ' ' << layers.size() << '\n';
    for (const DenseLayer& layer : layers) {
        out << "layer " << layer.out_dim() << ' ' << layer.in_dim() << ' '
            << activation_name(layer.activation) << '\n';
        // row-major weight dump
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = layer.weights;
        write_values(out, "W", rm.data(), rm.size());
        write_values(out, "b", layer.biases.data(), layer.biases.size());
    }
}

std::vector<DenseLayer> read_layers(std::istream& in, const char* tag) {
    std::string word;
    std::size_t count = 0;
    if (!(in >> word) || word != tag || !(in >> count)) fail(std::string("expected '") + tag + "' section");
    std::vector<DenseLayer> layers(count);
    for (DenseLayer& layer : layers) {
        Eigen::Index out_dim = 0, in_dim = 0;
        if (!(in >> word) || word != "layer" || !(in >> out_dim >> in_dim >> word))
            fail("malformed layer header");
        layer.activation = parse_activation(word);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(out_dim, in_dim);
        read_values(in, "W", rm.data(), rm.size());
        layer.weights = rm;
        layer.biases.resize(out_dim);
        read_values(in, "b", layer.biases.data(), out_dim);
    }
    return layers;
}

}  // namespace

void save_checkpoint(const HybridNetwork& net, std::ostream& out) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "head " << (net.head == TaskHead::Estimation ? "estimation" : "classification") << '\n';
    write_layers(out, "analog", net.analog);

    out << "bank " << net.bank.lane_count << ' ' << mode_name(net.bank.mode) << ' '
        << (net.bank.trainable ? 1 : 0) << '\n';
    out << "soft " << net.bank.soft.amplitudes.size() << '\n';
    write_values(out, "a", net.bank.soft.amplitudes.data(), net.bank.soft.amplitudes.size());
    write_values(out, "b", net.bank.soft.shifts.data(), net.bank.soft.shifts.size());
    write_values(out, "c", net.bank.soft.slopes.data(), net.bank.soft.slopes.size());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", net.bank.hard.uniform_width);
    out << "hard " << net.bank.hard.levels.size() << ' ' << buf << '\n';
    write_values(out, "t", net.bank.hard.thresholds.data(), net.bank.hard.thresholds.size());
    write_values(out, "l", net.bank.hard.levels.data(), net.bank.hard.levels.size());

    write_layers(out, "digital", net.digital);
    out << "end\n";
}

void save_checkpoint(const HybridNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot open '" + path + "' for writing");
    save_checkpoint(net, out);
    if (!out.good()) fail("write failure on '" + path + "'");
}

HybridNetwork load_checkpoint(std::istream& in) {
    std::string word;
    int version = 0;
    if (!(in >> word) || word != kMagic || !(in >> version)) fail("bad header");
    if (version != kVersion) fail("unsupported version " + std::to_string(version));

    HybridNetwork net;
    if (!(in >> word) || word != "head" || !(in >> word)) fail("missing head");
    if (word == "estimation") net.head = TaskHead::Estimation;
    else if (word == "classification") net.head = TaskHead::Classification;
    else fail("unknown head '" + word + "'");

    net.analog = read_layers(in, "analog");

    int trainable = 1;
    if (!(in >> word) || word != "bank" || !(in >> net.bank.lane_count >> word >> trainable))
        fail("malformed bank header");
    net.bank.mode = parse_mode(word);
    net.bank.trainable = trainable != 0;

    Eigen::Index terms = 0;
    if (!(in >> word) || word != "soft" || !(in >> terms)) fail("malformed soft section");
    net.bank.soft.amplitudes.resize(terms);
    net.bank.soft.shifts.resize(terms);
    net.bank.soft.slopes.resize(terms);
    read_values(in, "a", net.bank.soft.amplitudes.data(), terms);
    read_values(in, "b", net.bank.soft.shifts.data(), terms);
    read_values(in, "c", net.bank.soft.slopes.data(), terms);

    Eigen::Index level_count = 0;
    if (!(in >> word) || word != "hard" || !(in >> level_count >> net.bank.hard.uniform_width))
        fail("malformed hard section");
    net.bank.hard.thresholds.resize(level_count > 0 ? level_count - 1 : 0);
    net.bank.hard.levels.resize(level_count);
    read_values(in, "t", net.bank.hard.thresholds.data(), net.bank.hard.thresholds.size());
    read_values(in, "l", net.bank.hard.levels.data(), level_count);

    net.digital = read_layers(in, "digital");
    if (!(in >> word) || word != "end") fail("missing end marker");
    net.validate();
    return net;
}

HybridNetwork load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    return load_checkpoint(in);
}

}  // namespace taskquant
