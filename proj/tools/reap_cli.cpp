// Command-line front end: error-table reproduction, MNIST QAT training and
// approximate inference, VEU cycle estimates, and RTL stimulus dumps.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "reap/error_eval.hpp"
#include "reap/mnist.hpp"
#include "reap/net_config.hpp"
#include "reap/nn.hpp"
#include "reap/pipeline.hpp"
#include "reap/train.hpp"
#include "reap/veu.hpp"

namespace {

using namespace reap;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitQorFail = 4;

struct OutputOptions {
    std::string format = "text";
    std::string out_path;
    int threads = 1;
};

void add_output_options(CLI::App* cmd, OutputOptions& opts) {
    cmd->add_option("--format", opts.format, "Output format")
        ->check(CLI::IsMember({"csv", "json", "text"}));
    cmd->add_option("--out", opts.out_path, "Write the report to this file");
    cmd->add_option("--threads", opts.threads, "Worker threads")
        ->check(CLI::PositiveNumber);
}

// Writes through a file when requested, stdout otherwise.
template <typename Fn>
void with_output(const OutputOptions& opts, Fn fn) {
    if (opts.out_path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream out(opts.out_path);
    if (!out) throw ReportError("cannot write output file: " + opts.out_path);
    fn(out);
    if (!out) throw ReportError("write failed: " + opts.out_path);
}

void emit_metrics(const std::vector<MetricsRow>& rows, const OutputOptions& opts) {
    with_output(opts, [&](std::ostream& os) {
        if (opts.format == "csv")
            emit_table_csv(rows, os);
        else if (opts.format == "json")
            emit_table_json(rows, os);
        else
            emit_table_text(rows, os);
    });
}

struct MultOptions {
    std::string kind = "exact";
    int width = 4;
    int trunc = 0;  // 0: kind-specific default (mitchell: w, dr-alm: 2)
    std::string lut_path;

    int effective_trunc() const {
        if (trunc > 0) return trunc;
        return kind == "mitchell" ? width : 2;
    }
};

void add_mult_options(CLI::App* cmd, MultOptions& m) {
    cmd->add_option("--kind", m.kind, "Multiplier kind")
        ->check(CLI::IsMember({"exact", "mitchell", "dr-alm", "lut"}));
    cmd->add_option("--width", m.width, "Operand bit width");
    cmd->add_option("--t", m.trunc, "Retained bits after the leading one "
                                    "(default: w for mitchell, 2 for dr-alm)");
    cmd->add_option("--lut", m.lut_path, "LUT CSV path (kind=lut)");
}

std::string table_row_name(const MultiplierSpec& spec) {
    switch (spec.kind) {
        case MultKind::Exact: return "PDPU_Accurate";
        case MultKind::MitchellTrunc:
            return "REAP_MITCH_TRUNC_t" + std::to_string(spec.trunc);
        case MultKind::DrAlm: return "Proposed_DR_ALM_t" + std::to_string(spec.trunc);
        case MultKind::Lut: return "REAP_LUT";
    }
    return "?";
}

std::string data_dir_or_env(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("REAP_MNIST_DIR")) return env;
    throw MnistError("no dataset directory: pass --data-dir or set REAP_MNIST_DIR");
}

NetworkSpec spec_from_config(const std::string& config_path) {
    if (config_path.empty()) return mnist_reference_spec();
    return load_network_spec(config_path);
}

int run_eval_mult(const MultOptions& m, const OutputOptions& opts) {
    const MultiplierSpec spec = make_multiplier(m.kind, m.width, m.effective_trunc(), m.lut_path);
    const ErrorMetrics metrics =
        evaluate_multiplier_exhaustive(spec, spec.width, opts.threads);
    emit_metrics({{spec.describe(), metrics}}, opts);
    return kExitOk;
}

int run_eval_mac(const MultOptions& m, const std::string& acc_mode, int acc_width,
                 const OutputOptions& opts) {
    const MultiplierSpec spec = make_multiplier(m.kind, 4, m.effective_trunc(), m.lut_path);
    AccumulatorConfig acc = acc_mode == "truncating"
                                ? AccumulatorConfig::truncating(acc_width)
                                : AccumulatorConfig::exact();
    const ErrorMetrics metrics = evaluate_mac_exhaustive(spec, acc, opts.threads);
    emit_metrics({{table_row_name(spec), metrics}}, opts);
    return kExitOk;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_model, const OutputOptions& opts) {
    const NetworkSpec spec = spec_from_config(config_path);
    const MnistData data = load_mnist(data_dir_or_env(data_dir));

    Network<float> net(spec, {1, data.train.rows, data.train.cols});
    net.init_params(spec.train.seed);
    const TrainResult result = train(net, data.train, data.test, spec, &std::cout,
                                     opts.threads);
    if (!out_model.empty()) save_checkpoint(net, out_model);

    const double approx_acc =
        evaluate(net, data.test, RunMode::ApproxPosit, spec, opts.threads);
    const double fp32_acc = evaluate(net, data.test, RunMode::Fp32, spec, opts.threads);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "final fp32_acc=%.4f approx_posit_acc=%.4f (multiplier %s)\n",
                  fp32_acc, approx_acc, spec.multiplier.describe().c_str());
    std::cout << buf;
    with_output(opts, [&](std::ostream& os) {
        char line[128];
        os << "# schema_version=1\n";
        os << "epoch,phase,lr,train_loss,test_acc\n";
        for (const auto& e : result.epochs) {
            std::snprintf(line, sizeof line, "%d,%s,%.6f,%.6f,%.4f\n", e.epoch,
                          e.phase.c_str(), e.lr, e.train_loss, e.test_accuracy);
            os << line;
        }
        std::snprintf(line, sizeof line, "final,fp32,,,%.4f\n", fp32_acc);
        os << line;
        std::snprintf(line, sizeof line, "final,approx_posit,,,%.4f\n", approx_acc);
        os << line;
    });
    return kExitOk;
}

int run_infer(const std::string& config_path, const std::string& model_path,
              const std::string& data_dir, const std::string& mode,
              const OutputOptions& opts) {
    const NetworkSpec spec = spec_from_config(config_path);
    const MnistData data = load_mnist(data_dir_or_env(data_dir));
    Network<float> net(spec, {1, data.test.rows, data.test.cols});
    load_checkpoint(net, model_path);

    RunMode rm = RunMode::Fp32;
    if (mode == "fake_quant") rm = RunMode::FakeQuant;
    else if (mode == "approx_posit") rm = RunMode::ApproxPosit;
    const double acc = evaluate(net, data.test, rm, spec, opts.threads);
    char buf[96];
    std::snprintf(buf, sizeof buf, "mode=%s accuracy=%.4f\n", mode.c_str(), acc);
    std::cout << buf;
    return kExitOk;
}

int run_codesign(const std::string& config_path, const std::string& model_path,
                 const std::string& data_dir, double qor, const std::string& out_model,
                 const OutputOptions& opts) {
    const NetworkSpec spec = spec_from_config(config_path);
    const MnistData data = load_mnist(data_dir_or_env(data_dir));
    Network<float> net(spec, {1, data.train.rows, data.train.cols});

    bool trained = false;
    if (!model_path.empty()) {
        std::ifstream probe(model_path);
        if (probe) {
            load_checkpoint(net, model_path);
            trained = true;
        }
    }
    if (!trained) {
        net.init_params(spec.train.seed);
        train(net, data.train, data.test, spec, &std::cout, opts.threads);
        if (!out_model.empty()) save_checkpoint(net, out_model);
    }

    const double acc = evaluate(net, data.test, RunMode::ApproxPosit, spec, opts.threads);
    const ErrorMetrics mac = evaluate_mac_exhaustive(spec.multiplier, {}, opts.threads);
    emit_metrics({{table_row_name(spec.multiplier), mac}}, opts);

    const bool pass = acc >= qor;
    char buf[128];
    std::snprintf(buf, sizeof buf, "approx_posit accuracy %.4f vs QoR %.4f -> %s\n", acc,
                  qor, pass ? "PASS" : "FAIL");
    std::cout << buf;
    return pass ? kExitOk : kExitQorFail;
}

int run_cycles(const std::string& config_path, int n_macs, int image_h, int image_w,
               int channels, const OutputOptions& opts) {
    const NetworkSpec spec = spec_from_config(config_path);
    const auto rows = layer_report(spec.layers, image_h, image_w, channels, n_macs);
    with_output(opts, [&](std::ostream& os) {
        if (opts.format == "csv")
            emit_cycles_csv(rows, os);
        else if (opts.format == "json")
            emit_cycles_json(rows, os);
        else
            emit_cycles_text(rows, os);
    });
    return kExitOk;
}

int run_dump_vectors(int count, std::uint32_t seed, const MultOptions& m, int length,
                     const std::string& acc_mode, int acc_width, bool self_check,
                     const OutputOptions& opts) {
    const MultiplierSpec spec = make_multiplier(m.kind, 4, m.effective_trunc(), m.lut_path);
    const AccumulatorConfig acc_cfg = acc_mode == "truncating"
                                          ? AccumulatorConfig::truncating(acc_width)
                                          : AccumulatorConfig::exact();
    const PositConfig pc{8, 2};
    std::mt19937 rng(seed);
    auto pattern = [&] { return static_cast<std::uint16_t>(rng() & 0xff); };

    std::vector<std::string> lines;
    lines.reserve(count);
    for (int i = 0; i < count; ++i) {
        DotProductRequest req;
        req.multiplier = spec;
        req.va.resize(length);
        req.vb.resize(length);
        for (int j = 0; j < length; ++j) {
            req.va[j] = PositScalar{pattern(), pc};
            req.vb[j] = PositScalar{pattern(), pc};
        }
        req.acc = PositScalar{pattern(), pc};
        const DotProductResult res = dot_product(req, acc_cfg);
        std::string line = format_trace_line(req, res.trace, acc_cfg);
        if (self_check) {
            const DotProductResult again = dot_product(req, acc_cfg);
            if (format_trace_line(req, again.trace, acc_cfg) != line)
                throw ReportError("self-check mismatch on vector " + std::to_string(i));
        }
        lines.push_back(std::move(line));
    }

    with_output(opts, [&](std::ostream& os) {
        os << "# schema_version=1\n";
        os << "# multiplier=" << spec.describe() << " n=" << length
           << " acc_mode=" << acc_mode << " seed=" << seed << '\n';
        os << "# fields: va;vb;acc;s_ab[];e_ab[];prod[];e_max;aligned[];sum;lzc;f_e;f_m;out\n";
        for (const auto& l : lines) os << l << '\n';
    });
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bit-accurate golden model and evaluation toolkit for the "
                 "approximate posit(8,2) MAC architecture"};
    app.require_subcommand(1);

    OutputOptions opts;
    MultOptions mult;

    auto* eval_mult = app.add_subcommand("eval-mult", "Exhaustive multiplier error metrics");
    add_mult_options(eval_mult, mult);
    add_output_options(eval_mult, opts);

    std::string acc_mode = "exact";
    int acc_width = 128;
    auto* eval_mac =
        app.add_subcommand("eval-mac", "Exhaustive posit(8,2) MAC error metrics");
    add_mult_options(eval_mac, mult);
    eval_mac->add_option("--acc-mode", acc_mode, "Accumulator mode")
        ->check(CLI::IsMember({"exact", "truncating"}));
    eval_mac->add_option("--acc-width", acc_width, "Accumulator width (truncating)");
    add_output_options(eval_mac, opts);

    std::string config_path, data_dir, model_path, out_model, infer_mode = "approx_posit";
    auto* train_cmd = app.add_subcommand("train", "Train the MNIST network (QAT recipe)");
    train_cmd->add_option("--config", config_path, "Network/training JSON config");
    train_cmd->add_option("--data-dir", data_dir, "MNIST IDX directory");
    train_cmd->add_option("--out-model", out_model, "Checkpoint output path");
    add_output_options(train_cmd, opts);

    auto* infer_cmd = app.add_subcommand("infer", "Evaluate a checkpoint on the test set");
    infer_cmd->add_option("--config", config_path, "Network/training JSON config");
    infer_cmd->add_option("--model", model_path, "Checkpoint path")->required();
    infer_cmd->add_option("--data-dir", data_dir, "MNIST IDX directory");
    infer_cmd->add_option("--mode", infer_mode, "Evaluation mode")
        ->check(CLI::IsMember({"fp32", "fake_quant", "approx_posit"}));
    add_output_options(infer_cmd, opts);

    double qor = 0.965;
    auto* codesign_cmd =
        app.add_subcommand("codesign", "Train/evaluate and gate against the QoR threshold");
    codesign_cmd->add_option("--config", config_path, "Network/training JSON config");
    codesign_cmd->add_option("--model", model_path, "Load this checkpoint instead of training");
    codesign_cmd->add_option("--data-dir", data_dir, "MNIST IDX directory");
    codesign_cmd->add_option("--qor", qor, "Quality-of-results accuracy threshold");
    codesign_cmd->add_option("--out-model", out_model, "Checkpoint output path");
    add_output_options(codesign_cmd, opts);

    int n_macs = 6, image_h = 28, image_w = 28, channels = 1;
    auto* cycles_cmd = app.add_subcommand("cycles", "VEU cycle-count report");
    cycles_cmd->add_option("--config", config_path, "Network JSON config");
    cycles_cmd->add_option("--n-macs", n_macs, "MAC units in the VEU")
        ->check(CLI::PositiveNumber);
    cycles_cmd->add_option("--image-h", image_h, "Input image height");
    cycles_cmd->add_option("--image-w", image_w, "Input image width");
    cycles_cmd->add_option("--channels", channels, "Input channels");
    add_output_options(cycles_cmd, opts);

    int count = 16, length = 4;
    std::uint32_t seed = 1;
    bool self_check = false;
    auto* dump_cmd =
        app.add_subcommand("dump-vectors", "Deterministic stimulus/trace lines for RTL");
    dump_cmd->add_option("--count", count, "Number of evaluations")
        ->check(CLI::NonNegativeNumber);
    dump_cmd->add_option("--seed", seed, "PRNG seed");
    dump_cmd->add_option("--n", length, "Vector length per evaluation")
        ->check(CLI::PositiveNumber);
    add_mult_options(dump_cmd, mult);
    dump_cmd->add_option("--acc-mode", acc_mode, "Accumulator mode")
        ->check(CLI::IsMember({"exact", "truncating"}));
    dump_cmd->add_option("--acc-width", acc_width, "Accumulator width (truncating)");
    dump_cmd->add_flag("--self-check", self_check, "Re-verify every line before writing");
    add_output_options(dump_cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (eval_mult->parsed()) return run_eval_mult(mult, opts);
        if (eval_mac->parsed()) return run_eval_mac(mult, acc_mode, acc_width, opts);
        if (train_cmd->parsed()) return run_train(config_path, data_dir, out_model, opts);
        if (infer_cmd->parsed())
            return run_infer(config_path, model_path, data_dir, infer_mode, opts);
        if (codesign_cmd->parsed())
            return run_codesign(config_path, model_path, data_dir, qor, out_model, opts);
        if (cycles_cmd->parsed())
            return run_cycles(config_path, n_macs, image_h, image_w, channels, opts);
        if (dump_cmd->parsed())
            return run_dump_vectors(count, seed, mult, length, acc_mode, acc_width,
                                    self_check, opts);
    } catch (const MnistError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
