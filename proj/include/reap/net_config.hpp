#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reap/multiplier.hpp"

namespace reap {

enum class LayerKind : std::uint8_t { Conv2d, MaxPool, FullyConnected, Tanh, Softmax };

enum class QuantMode : std::uint8_t { None, UniformK, Posit82 };

struct LayerDesc {
    LayerKind kind = LayerKind::Conv2d;
    int out_ch = 0;  // Conv2d
    int kernel = 0;  // Conv2d
    int stride = 1;  // Conv2d
    int units = 0;   // FullyConnected
    // Per-layer quantization override; -1 inherits the network-wide mode.
    int quant_override = -1;

    bool has_quant_override() const { return quant_override >= 0; }
    QuantMode quant_mode() const { return static_cast<QuantMode>(quant_override); }
};

struct TrainConfig {
    double eta = 0.05;
    int epochs = 5;
    int batch_size = 64;
    std::uint32_t seed = 1;
    int qat_start_epoch = 3;  // epochs [0, qat_start) run fp32, the rest fake-quant
    double lr_decay = 0.5;    // per-epoch multiplier
    int quant_bits = 8;       // k for uniform quantization
};

struct NetworkSpec {
    std::vector<LayerDesc> layers;
    QuantMode quant_mode = QuantMode::Posit82;
    MultiplierSpec multiplier = make_dralm();
    TrainConfig train;
    int chunk = 32;        // dot-product request length for approximate inference
    bool wide_acc = false; // retain the wide accumulator between chunks
    bool approx_qat_forward = false;  // opt-in fully approximate QAT forward
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

NetworkSpec parse_network_spec(const std::string& json_text);
NetworkSpec load_network_spec(const std::string& path);

// The MNIST reference recipe: LeNet-5 style stack, posit(8,2) QAT.
NetworkSpec mnist_reference_spec();

}  // namespace reap
