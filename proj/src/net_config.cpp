#include "reap/net_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace reap {

namespace {

using nlohmann::json;

QuantMode parse_quant_mode(const std::string& s);

LayerDesc parse_layer(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    LayerDesc d;
    if (type == "conv2d" || type == "conv") {
        d.kind = LayerKind::Conv2d;
        d.out_ch = j.at("out_ch").get<int>();
        d.kernel = j.at("kernel").get<int>();
        d.stride = j.value("stride", 1);
        if (d.out_ch < 1 || d.kernel < 1 || d.stride < 1)
            throw ConfigError("conv2d layer with non-positive parameter");
    } else if (type == "maxpool") {
        d.kind = LayerKind::MaxPool;
    } else if (type == "fc" || type == "fully_connected") {
        d.kind = LayerKind::FullyConnected;
        d.units = j.at("units").get<int>();
        if (d.units < 1) throw ConfigError("fc layer with non-positive units");
    } else if (type == "tanh") {
        d.kind = LayerKind::Tanh;
    } else if (type == "softmax") {
        d.kind = LayerKind::Softmax;
    } else {
        throw ConfigError("unknown layer type '" + type + "'");
    }
    if (j.contains("quant"))
        d.quant_override = static_cast<int>(parse_quant_mode(j["quant"].get<std::string>()));
    return d;
}

QuantMode parse_quant_mode(const std::string& s) {
    if (s == "none") return QuantMode::None;
    if (s == "uniform_k" || s == "uniform") return QuantMode::UniformK;
    if (s == "posit82" || s == "posit") return QuantMode::Posit82;
    throw ConfigError("unknown quant_mode '" + s + "'");
}

}  // namespace

NetworkSpec parse_network_spec(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        NetworkSpec spec;
        for (const auto& lj : j.at("layers")) spec.layers.push_back(parse_layer(lj));
        if (spec.layers.empty()) throw ConfigError("config has no layers");
        spec.quant_mode = parse_quant_mode(j.value("quant_mode", std::string("posit82")));

        if (j.contains("multiplier")) {
            const auto& mj = j["multiplier"];
            spec.multiplier = make_multiplier(mj.value("kind", std::string("dr-alm")),
                                              mj.value("width", 4), mj.value("t", 2),
                                              mj.value("lut_path", std::string()));
        }
        if (j.contains("train")) {
            const auto& tj = j["train"];
            TrainConfig& t = spec.train;
            t.eta = tj.value("eta", t.eta);
            t.epochs = tj.value("epochs", t.epochs);
            t.batch_size = tj.value("batch", t.batch_size);
            t.seed = tj.value("seed", t.seed);
            t.qat_start_epoch = tj.value("qat_start_epoch", t.qat_start_epoch);
            t.lr_decay = tj.value("lr_decay", t.lr_decay);
            t.quant_bits = tj.value("quant_bits", t.quant_bits);
            if (t.eta < 0 || t.epochs < 0 || t.batch_size < 1 || t.quant_bits < 2)
                throw ConfigError("invalid train section");
        }
        spec.chunk = j.value("chunk", spec.chunk);
        if (spec.chunk < 1) throw ConfigError("chunk must be >= 1");
        spec.wide_acc = j.value("wide_acc", spec.wide_acc);
        spec.approx_qat_forward = j.value("approx_qat_forward", spec.approx_qat_forward);
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
}

NetworkSpec load_network_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_network_spec(ss.str());
}

NetworkSpec mnist_reference_spec() {
    NetworkSpec spec;
    spec.layers = {
        {LayerKind::Conv2d, 6, 5, 1, 0},  {LayerKind::Tanh},
        {LayerKind::MaxPool},             {LayerKind::Conv2d, 16, 5, 1, 0},
        {LayerKind::Tanh},                {LayerKind::MaxPool},
        {LayerKind::FullyConnected, 0, 0, 1, 120},
        {LayerKind::Tanh},                {LayerKind::FullyConnected, 0, 0, 1, 84},
        {LayerKind::Tanh},                {LayerKind::FullyConnected, 0, 0, 1, 10},
        {LayerKind::Softmax},
    };
    spec.quant_mode = QuantMode::Posit82;
    spec.multiplier = make_dralm(4, 2);
    spec.train = TrainConfig{0.05, 5, 64, 1, 3, 0.5, 8};
    spec.chunk = 32;
    return spec;
}

}  // namespace reap
