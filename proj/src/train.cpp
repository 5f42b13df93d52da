#include "reap/train.hpp"

#include <cstring>
#include <fstream>
#include <ostream>
#include <thread>

namespace reap {

namespace {

Tensor<float> sample_tensor(const MnistSet& set, int index) {
    Tensor<float> x({1, set.rows, set.cols});
    std::memcpy(x.data.data(), set.image(index), x.size() * sizeof(float));
    return x;
}

int argmax(const Tensor<float>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

void fisher_yates(std::vector<int>& perm, std::mt19937& rng) {
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng() % i]);
}

}  // namespace

LayerContext make_context(const NetworkSpec& spec, RunMode mode) {
    LayerContext ctx;
    ctx.mode = mode;
    ctx.qmode = spec.quant_mode;
    ctx.quant_bits = spec.train.quant_bits;
    ctx.multiplier = spec.multiplier;
    ctx.chunk = spec.chunk;
    ctx.wide_acc = spec.wide_acc;
    return ctx;
}

double evaluate(const Network<float>& net, const MnistSet& set, RunMode mode,
                const NetworkSpec& spec, int threads) {
    const LayerContext ctx = make_context(spec, mode);
    threads = std::max(1, std::min<int>(threads, set.count));

    auto count_range = [&](Network<float>& n, int begin, int end) {
        n.prepare(ctx);
        long correct = 0;
        for (int i = begin; i < end; ++i) {
            Tensor<float> x = sample_tensor(set, i);
            Tensor<float> z = n.forward_logits(x, ctx);
            if (argmax(z) == set.labels[i]) ++correct;
        }
        return correct;
    };

    if (threads == 1) {
        Network<float> local = net.clone();
        return static_cast<double>(count_range(local, 0, set.count)) / set.count;
    }

    std::vector<long> partial(threads, 0);
    std::vector<std::thread> pool;
    const int per = (set.count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            const int begin = t * per;
            const int end = std::min(set.count, begin + per);
            if (begin >= end) return;
            Network<float> local = net.clone();
            partial[t] = count_range(local, begin, end);
        });
    for (auto& th : pool) th.join();
    long correct = 0;
    for (long c : partial) correct += c;
    return static_cast<double>(correct) / set.count;
}

TrainResult train(Network<float>& net, const MnistSet& train_set,
                  const MnistSet& test_set, const NetworkSpec& spec, std::ostream* log,
                  int eval_threads) {
    const TrainConfig& tc = spec.train;
    TrainResult result;
    std::mt19937 rng(tc.seed);

    std::vector<int> perm(train_set.count);
    for (int i = 0; i < train_set.count; ++i) perm[i] = i;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const bool qat = epoch >= tc.qat_start_epoch;
        const RunMode mode = qat ? RunMode::FakeQuant : RunMode::Fp32;
        const LayerContext ctx = make_context(spec, mode);
        const LayerContext approx_ctx = make_context(spec, RunMode::ApproxPosit);
        const double lr = tc.eta * std::pow(tc.lr_decay, epoch);

        fisher_yates(perm, rng);
        double loss_sum = 0.0;
        long seen = 0;
        for (int start = 0; start < train_set.count; start += tc.batch_size) {
            const int end = std::min(train_set.count, start + tc.batch_size);
            net.zero_grad();
            net.prepare(ctx);
            if (qat && spec.approx_qat_forward) net.prepare(approx_ctx);
            for (int i = start; i < end; ++i) {
                Tensor<float> x = sample_tensor(train_set, perm[i]);
                const int label = train_set.labels[perm[i]];
                double loss;
                if (qat && spec.approx_qat_forward) {
                    // Approximate forward defines the loss; the quantized graph
                    // provides the straight-through backward path.
                    Tensor<float> z_approx = net.forward_logits(x, approx_ctx);
                    loss = net.train_step_from_logits(x, z_approx, label, ctx);
                } else {
                    loss = net.train_step_sample(x, label, ctx);
                }
                loss_sum += loss;
                ++seen;
            }
            net.scale_grads(1.0 / (end - start));
            net.sgd_update(lr);
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.phase = qat ? "qat" : "fp32";
        em.lr = lr;
        em.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
        em.test_accuracy = evaluate(net, test_set, mode, spec, eval_threads);
        result.epochs.push_back(em);
        if (log) {
            char line[160];
            std::snprintf(line, sizeof line,
                          "epoch %d phase=%s lr=%.6f train_loss=%.6f test_acc=%.4f\n",
                          em.epoch, em.phase.c_str(), em.lr, em.train_loss,
                          em.test_accuracy);
            (*log) << line;
        }
        result.final_test_accuracy = em.test_accuracy;
    }
    return result;
}

namespace {

constexpr char kMagic[7] = {'R', 'E', 'A', 'P', 'N', 'N', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw CheckpointError(path + ": truncated checkpoint");
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
           (std::uint32_t{b[3]} << 24);
}

}  // namespace

void save_checkpoint(Network<float>& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof kMagic);
    auto params = net.params();
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (auto& p : params) {
        write_u32(out, static_cast<std::uint32_t>(p.value->shape.size()));
        for (int d : p.value->shape) write_u32(out, static_cast<std::uint32_t>(d));
        static_assert(sizeof(float) == 4);
        out.write(reinterpret_cast<const char*>(p.value->data.data()),
                  static_cast<std::streamsize>(p.value->size() * 4));
    }
    if (!out) throw CheckpointError("write failed: " + path);
}

void load_checkpoint(Network<float>& net, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[7];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw CheckpointError(path + ": bad checkpoint magic (expected REAPNN1)");
    auto params = net.params();
    const std::uint32_t count = read_u32(in, path);
    if (count != params.size())
        throw CheckpointError(path + ": tensor count " + std::to_string(count) +
                              " does not match the network (" +
                              std::to_string(params.size()) + ")");
    for (auto& p : params) {
        const std::uint32_t ndim = read_u32(in, path);
        if (ndim != p.value->shape.size())
            throw CheckpointError(path + ": tensor rank mismatch");
        for (int d : p.value->shape) {
            const std::uint32_t got = read_u32(in, path);
            if (got != static_cast<std::uint32_t>(d))
                throw CheckpointError(path + ": tensor shape mismatch");
        }
        in.read(reinterpret_cast<char*>(p.value->data.data()),
                static_cast<std::streamsize>(p.value->size() * 4));
        if (!in) throw CheckpointError(path + ": truncated tensor data");
    }
}

}  // namespace reap
