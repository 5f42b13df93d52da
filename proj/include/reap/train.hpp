#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reap/mnist.hpp"
#include "reap/nn.hpp"

namespace reap {

struct EpochMetrics {
    int epoch = 0;
    std::string phase;  // "fp32" or "qat"
    double lr = 0.0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> epochs;
    double final_test_accuracy = 0.0;  // in the final phase's mode
};

LayerContext make_context(const NetworkSpec& spec, RunMode mode);

// Warm-up epochs in fp32, then fake-quant (QAT) epochs; deterministic for a
// fixed seed in single-worker mode. Per-epoch lines go to `log` when set.
TrainResult train(Network<float>& net, const MnistSet& train_set,
                  const MnistSet& test_set, const NetworkSpec& spec,
                  std::ostream* log = nullptr, int eval_threads = 1);

// Top-1 accuracy over the whole set in the given mode. Parallel evaluation
// clones the network per thread and reduces integer counts, so the result is
// identical for every thread count.
double evaluate(const Network<float>& net, const MnistSet& set, RunMode mode,
                const NetworkSpec& spec, int threads = 1);

// Checkpoint: magic REAPNN1, parameterized-layer count, then per-tensor
// shape + raw little-endian 32-bit weights.
void save_checkpoint(Network<float>& net, const std::string& path);
void load_checkpoint(Network<float>& net, const std::string& path);

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace reap
