#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>

#include "reap/net_config.hpp"
#include "reap/pipeline.hpp"
#include "reap/tensor.hpp"

namespace reap {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Quantization (uniform and posit)
// ---------------------------------------------------------------------------

struct QuantParams {
    int k = 8;
    double delta = 1.0;
    int qmin = -127;
    int qmax = 127;
};

// delta = max|x| / (2^(k-1) - 1); an all-zero tensor gets a tiny positive
// delta so Q(x) = x = 0 stays well defined.
template <typename T>
QuantParams compute_delta(std::span<const T> x, int k) {
    if (k < 2) throw ConfigError("quantization bit count must be >= 2");
    if (x.empty()) throw ConfigError("cannot derive a scale factor from an empty tensor");
    double maxabs = 0.0;
    for (T v : x) maxabs = std::max(maxabs, std::fabs(static_cast<double>(v)));
    QuantParams qp;
    qp.k = k;
    qp.qmax = (1 << (k - 1)) - 1;
    qp.qmin = -qp.qmax;
    qp.delta = maxabs > 0.0 ? maxabs / qp.qmax
                            : std::numeric_limits<double>::min();
    return qp;
}

// Q(x) = clip(round_half_even(x/delta), qmin, qmax) * delta
inline double quantize_value(double x, const QuantParams& qp) {
    double q = std::nearbyint(x / qp.delta);  // default FE_TONEAREST: ties to even
    q = std::clamp(q, static_cast<double>(qp.qmin), static_cast<double>(qp.qmax));
    return q * qp.delta;
}

inline bool inside_clip(double x, const QuantParams& qp) {
    return x >= qp.qmin * qp.delta && x <= qp.qmax * qp.delta;
}

inline const std::array<double, 256>& posit82_reals() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        const PositConfig pc{8, 2};
        for (int i = 0; i < 256; ++i)
            if (i != pc.nar_pattern())
                t[i] = to_real(PositScalar{static_cast<std::uint16_t>(i), pc});
        return t;
    }();
    return table;
}

inline double posit_quantize_value(double x) {
    return posit82_reals()[from_real(x, PositConfig{8, 2}).bits];
}

template <typename T>
Tensor<T> quantize(const Tensor<T>& x, const QuantParams& qp) {
    Tensor<T> out = x;
    for (T& v : out.data) v = static_cast<T>(quantize_value(static_cast<double>(v), qp));
    return out;
}

template <typename T>
Tensor<T> posit_quantize(const Tensor<T>& x) {
    Tensor<T> out = x;
    for (T& v : out.data) v = static_cast<T>(posit_quantize_value(static_cast<double>(v)));
    return out;
}

// ---------------------------------------------------------------------------
// Forward/backward context
// ---------------------------------------------------------------------------

enum class RunMode : std::uint8_t { Fp32, FakeQuant, ApproxPosit };

struct LayerContext {
    RunMode mode = RunMode::Fp32;
    QuantMode qmode = QuantMode::Posit82;
    int quant_bits = 8;
    MultiplierSpec multiplier = make_dralm();
    int chunk = 32;
    bool wide_acc = false;
};

// Chunked posit dot product with accumulator feedback: pairs (w_i, x_i) are
// fed through the pipeline in requests of at most `chunk` elements, the
// encoded output becoming the next request's acc. The bias rides as a final
// (bias, 1.0) element.
PositScalar chunked_posit_dot(std::span<const PositScalar> w,
                              std::span<const PositScalar> x, double bias,
                              const LayerContext& ctx);

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

template <typename T>
struct ParamRef {
    Tensor<T>* value;
    Tensor<T>* grad;
};

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    // Called once per weight update before forward passes.
    virtual void prepare(const LayerContext&) {}
    virtual Tensor<T> forward(const Tensor<T>& x, const LayerContext& ctx) = 0;
    virtual Tensor<T> backward(const Tensor<T>& dy, const LayerContext& ctx) = 0;
    virtual std::vector<ParamRef<T>> params() { return {}; }
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;
    virtual LayerKind kind() const = 0;

    // Per-layer quantization override; inherits the context mode by default.
    void set_quant_override(QuantMode m) { quant_override_ = static_cast<int>(m); }
    QuantMode effective_qmode(const LayerContext& ctx) const {
        return quant_override_ >= 0 ? static_cast<QuantMode>(quant_override_) : ctx.qmode;
    }

private:
    int quant_override_ = -1;
};

namespace detail {

inline PositScalar posit_of(double v) { return from_real(v, PositConfig{8, 2}); }

template <typename T>
void posit_quantize_buffer(const Tensor<T>& x, std::vector<PositScalar>& out) {
    out.resize(x.size());
    const PositConfig pc{8, 2};
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = from_real(static_cast<double>(x.data[i]), pc);
}

}  // namespace detail

// Valid (unpadded) 2-D convolution over CHW tensors.
template <typename T>
class Conv2dLayer final : public Layer<T> {
public:
    Conv2dLayer(int in_ch, int out_ch, int kernel, int stride)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride),
          w_({out_ch, in_ch, kernel, kernel}), b_({out_ch}),
          gw_({out_ch, in_ch, kernel, kernel}), gb_({out_ch}) {}

    void prepare(const LayerContext& ctx) override {
        const QuantMode qm = this->effective_qmode(ctx);
        if (ctx.mode == RunMode::FakeQuant && qm != QuantMode::None) {
            if (qm == QuantMode::UniformK) {
                wq_params_ = compute_delta<T>(w_.data, ctx.quant_bits);
                wq_ = quantize(w_, wq_params_);
            } else {
                wq_ = posit_quantize(w_);
            }
        } else if (ctx.mode == RunMode::ApproxPosit) {
            detail::posit_quantize_buffer(w_, wp_);
        }
    }

    Tensor<T> forward(const Tensor<T>& x, const LayerContext& ctx) override {
        check_input(x);
        const int oh = (x.shape[1] - k_) / stride_ + 1;
        const int ow = (x.shape[2] - k_) / stride_ + 1;
        Tensor<T> y({out_ch_, oh, ow});

        if (ctx.mode == RunMode::ApproxPosit) {
            forward_posit(x, y, ctx);
            return y;
        }

        const QuantMode qm = this->effective_qmode(ctx);
        const bool fq = ctx.mode == RunMode::FakeQuant && qm != QuantMode::None;
        x_pre_ = x;
        if (fq) {
            if (qm == QuantMode::UniformK) {
                xq_params_ = compute_delta<T>(x.data, ctx.quant_bits);
                x_ = quantize(x, xq_params_);
            } else {
                x_ = posit_quantize(x);
            }
        } else {
            x_ = x;
        }
        const Tensor<T>& w = fq ? wq_ : w_;
        const int ih = x.shape[1], iw = x.shape[2];
        for (int oc = 0; oc < out_ch_; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T acc = b_[oc];
                    for (int ic = 0; ic < in_ch_; ++ic)
                        for (int ky = 0; ky < k_; ++ky) {
                            const T* xr = &x_.data[(ic * ih + oy * stride_ + ky) * iw +
                                                   ox * stride_];
                            const T* wr = &w.data[((oc * in_ch_ + ic) * k_ + ky) * k_];
                            for (int kx = 0; kx < k_; ++kx) acc += wr[kx] * xr[kx];
                        }
                    y.data[(oc * oh + oy) * ow + ox] = acc;
                }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, const LayerContext& ctx) override {
        const bool fq =
            ctx.mode == RunMode::FakeQuant && this->effective_qmode(ctx) != QuantMode::None;
        const Tensor<T>& w = fq ? wq_ : w_;
        const int ih = x_.shape[1], iw = x_.shape[2];
        const int oh = dy.shape[1], ow = dy.shape[2];
        Tensor<T> dx({in_ch_, ih, iw});
        Tensor<T> dwq({out_ch_, in_ch_, k_, k_});

        for (int oc = 0; oc < out_ch_; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const T g = dy.data[(oc * oh + oy) * ow + ox];
                    gb_[oc] += g;
                    for (int ic = 0; ic < in_ch_; ++ic)
                        for (int ky = 0; ky < k_; ++ky) {
                            T* dxr = &dx.data[(ic * ih + oy * stride_ + ky) * iw +
                                              ox * stride_];
                            const T* xr = &x_.data[(ic * ih + oy * stride_ + ky) * iw +
                                                   ox * stride_];
                            const T* wr = &w.data[((oc * in_ch_ + ic) * k_ + ky) * k_];
                            T* dwr = &dwq.data[((oc * in_ch_ + ic) * k_ + ky) * k_];
                            for (int kx = 0; kx < k_; ++kx) {
                                dxr[kx] += wr[kx] * g;
                                dwr[kx] += xr[kx] * g;
                            }
                        }
                }

        apply_ste(dwq, dx, ctx);
        for (std::size_t i = 0; i < gw_.size(); ++i) gw_[i] += dwq[i];
        return dx;
    }

    std::vector<ParamRef<T>> params() override {
        return {{&w_, &gw_}, {&b_, &gb_}};
    }
    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 3 || in[0] != in_ch_)
            throw ShapeError("conv2d expects CHW input with " + std::to_string(in_ch_) +
                             " channels");
        if ((in[1] - k_) % stride_ != 0 || (in[2] - k_) % stride_ != 0 || in[1] < k_ ||
            in[2] < k_)
            throw ShapeError("conv2d geometry mismatch");
        return {out_ch_, (in[1] - k_) / stride_ + 1, (in[2] - k_) / stride_ + 1};
    }
    LayerKind kind() const override { return LayerKind::Conv2d; }

    Tensor<T>& weights() { return w_; }
    Tensor<T>& bias() { return b_; }

private:
    void check_input(const Tensor<T>& x) const {
        if (x.shape.size() != 3 || x.shape[0] != in_ch_)
            throw ShapeError("conv2d input shape mismatch");
    }

    void apply_ste(Tensor<T>& dwq, Tensor<T>& dx, const LayerContext& ctx) const {
        if (ctx.mode != RunMode::FakeQuant ||
            this->effective_qmode(ctx) != QuantMode::UniformK)
            return;
        for (std::size_t i = 0; i < dwq.size(); ++i)
            if (!inside_clip(static_cast<double>(w_[i]), wq_params_)) dwq[i] = T{0};
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (!inside_clip(static_cast<double>(x_pre_[i]), xq_params_)) dx[i] = T{0};
    }

    void forward_posit(const Tensor<T>& x, Tensor<T>& y, const LayerContext& ctx) {
        detail::posit_quantize_buffer(x, xp_);
        const int ih = x.shape[1], iw = x.shape[2];
        const int oh = y.shape[1], ow = y.shape[2];
        const std::size_t win = static_cast<std::size_t>(in_ch_) * k_ * k_;
        std::vector<PositScalar> wv(win), xv(win);
        const auto& reals = posit82_reals();
        for (int oc = 0; oc < out_ch_; ++oc) {
            const PositScalar* wbase = &wp_[static_cast<std::size_t>(oc) * win];
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    std::size_t n = 0;
                    for (int ic = 0; ic < in_ch_; ++ic)
                        for (int ky = 0; ky < k_; ++ky) {
                            const PositScalar* xr =
                                &xp_[(ic * ih + oy * stride_ + ky) * iw + ox * stride_];
                            for (int kx = 0; kx < k_; ++kx) {
                                wv[n] = wbase[n];
                                xv[n] = xr[kx];
                                ++n;
                            }
                        }
                    const PositScalar out = chunked_posit_dot(
                        wv, xv, static_cast<double>(b_[oc]), ctx);
                    y.data[(oc * oh + oy) * ow + ox] =
                        static_cast<T>(reals[out.bits]);
                }
        }
    }

    int in_ch_, out_ch_, k_, stride_;
    Tensor<T> w_, b_, gw_, gb_;
    // fake-quant state
    Tensor<T> wq_, x_, x_pre_;
    QuantParams wq_params_, xq_params_;
    // approx-posit state
    std::vector<PositScalar> wp_, xp_;
};

template <typename T>
class FullyConnectedLayer final : public Layer<T> {
public:
    FullyConnectedLayer(int in_features, int units)
        : in_(in_features), units_(units), w_({units, in_features}), b_({units}),
          gw_({units, in_features}), gb_({units}) {}

    void prepare(const LayerContext& ctx) override {
        const QuantMode qm = this->effective_qmode(ctx);
        if (ctx.mode == RunMode::FakeQuant && qm != QuantMode::None) {
            if (qm == QuantMode::UniformK) {
                wq_params_ = compute_delta<T>(w_.data, ctx.quant_bits);
                wq_ = quantize(w_, wq_params_);
            } else {
                wq_ = posit_quantize(w_);
            }
        } else if (ctx.mode == RunMode::ApproxPosit) {
            detail::posit_quantize_buffer(w_, wp_);
        }
    }

    Tensor<T> forward(const Tensor<T>& x, const LayerContext& ctx) override {
        if (x.size() != static_cast<std::size_t>(in_))
            throw ShapeError("fc input size mismatch: got " + std::to_string(x.size()) +
                             ", want " + std::to_string(in_));
        Tensor<T> y({units_});
        if (ctx.mode == RunMode::ApproxPosit) {
            detail::posit_quantize_buffer(x, xp_);
            const auto& reals = posit82_reals();
            for (int u = 0; u < units_; ++u) {
                const PositScalar out = chunked_posit_dot(
                    std::span<const PositScalar>(&wp_[static_cast<std::size_t>(u) * in_],
                                                 in_),
                    xp_, static_cast<double>(b_[u]), ctx);
                y[u] = static_cast<T>(reals[out.bits]);
            }
            return y;
        }

        const QuantMode qm = this->effective_qmode(ctx);
        const bool fq = ctx.mode == RunMode::FakeQuant && qm != QuantMode::None;
        x_pre_ = x;
        if (fq) {
            if (qm == QuantMode::UniformK) {
                xq_params_ = compute_delta<T>(x.data, ctx.quant_bits);
                x_ = quantize(x, xq_params_);
            } else {
                x_ = posit_quantize(x);
            }
        } else {
            x_ = x;
        }
        const Tensor<T>& w = fq ? wq_ : w_;
        for (int u = 0; u < units_; ++u) {
            T acc = b_[u];
            const T* wr = &w.data[static_cast<std::size_t>(u) * in_];
            for (int i = 0; i < in_; ++i) acc += wr[i] * x_[i];
            y[u] = acc;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, const LayerContext& ctx) override {
        const QuantMode qm = this->effective_qmode(ctx);
        const bool fq = ctx.mode == RunMode::FakeQuant && qm != QuantMode::None;
        const Tensor<T>& w = fq ? wq_ : w_;
        Tensor<T> dx({in_});
        Tensor<T> dwq({units_, in_});
        for (int u = 0; u < units_; ++u) {
            const T g = dy[u];
            gb_[u] += g;
            const T* wr = &w.data[static_cast<std::size_t>(u) * in_];
            T* dwr = &dwq.data[static_cast<std::size_t>(u) * in_];
            for (int i = 0; i < in_; ++i) {
                dx[i] += wr[i] * g;
                dwr[i] += x_[i] * g;
            }
        }
        if (ctx.mode == RunMode::FakeQuant && qm == QuantMode::UniformK) {
            for (std::size_t i = 0; i < dwq.size(); ++i)
                if (!inside_clip(static_cast<double>(w_[i]), wq_params_)) dwq[i] = T{0};
            for (std::size_t i = 0; i < dx.size(); ++i)
                if (!inside_clip(static_cast<double>(x_pre_[i]), xq_params_)) dx[i] = T{0};
        }
        for (std::size_t i = 0; i < gw_.size(); ++i) gw_[i] += dwq[i];
        return dx;
    }

    std::vector<ParamRef<T>> params() override {
        return {{&w_, &gw_}, {&b_, &gb_}};
    }
    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (static_cast<int>(Tensor<T>::element_count(in)) != in_)
            throw ShapeError("fc expects " + std::to_string(in_) + " inputs");
        return {units_};
    }
    LayerKind kind() const override { return LayerKind::FullyConnected; }

    Tensor<T>& weights() { return w_; }
    Tensor<T>& bias() { return b_; }

private:
    int in_, units_;
    Tensor<T> w_, b_, gw_, gb_;
    Tensor<T> wq_, x_, x_pre_;
    QuantParams wq_params_, xq_params_;
    std::vector<PositScalar> wp_, xp_;
};

// 2x2 max pooling, stride 2. Ties route the gradient to the first maximum.
template <typename T>
class MaxPoolLayer final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, const LayerContext&) override {
        if (x.shape.size() != 3 || x.shape[1] % 2 || x.shape[2] % 2)
            throw ShapeError("maxpool expects CHW input with even spatial dims");
        const int c = x.shape[0], ih = x.shape[1], iw = x.shape[2];
        const int oh = ih / 2, ow = iw / 2;
        Tensor<T> y({c, oh, ow});
        in_shape_ = x.shape;
        argmax_.assign(y.size(), 0);
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    std::size_t best = (ch * ih + 2 * oy) * iw + 2 * ox;
                    T bv = x.data[best];
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t idx =
                                (ch * ih + 2 * oy + dy) * iw + 2 * ox + dx;
                            if (x.data[idx] > bv) {
                                bv = x.data[idx];
                                best = idx;
                            }
                        }
                    const std::size_t o = (ch * oh + oy) * ow + ox;
                    y.data[o] = bv;
                    argmax_[o] = best;
                }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy, const LayerContext&) override {
        Tensor<T> dx(in_shape_);
        for (std::size_t o = 0; o < dy.size(); ++o) dx.data[argmax_[o]] += dy.data[o];
        return dx;
    }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 3 || in[1] % 2 || in[2] % 2)
            throw ShapeError("maxpool expects even CHW input");
        return {in[0], in[1] / 2, in[2] / 2};
    }
    LayerKind kind() const override { return LayerKind::MaxPool; }

private:
    std::vector<int> in_shape_;
    std::vector<std::size_t> argmax_;
};

template <typename T>
class TanhLayer final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, const LayerContext&) override {
        y_ = x;
        for (T& v : y_.data) v = std::tanh(v);
        return y_;
    }
    Tensor<T> backward(const Tensor<T>& dy, const LayerContext&) override {
        Tensor<T> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i)
            dx[i] *= T{1} - y_[i] * y_[i];
        return dx;
    }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    LayerKind kind() const override { return LayerKind::Tanh; }

private:
    Tensor<T> y_;
};

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

template <typename T>
class Network {
public:
    Network(const NetworkSpec& spec, std::vector<int> input_shape)
        : spec_(spec), input_shape_(std::move(input_shape)) {
        std::vector<int> shape = input_shape_;
        bool softmax_seen = false;
        for (const LayerDesc& d : spec.layers) {
            if (softmax_seen) throw ShapeError("softmax must be the final layer");
            switch (d.kind) {
                case LayerKind::Conv2d:
                    layers_.push_back(std::make_unique<Conv2dLayer<T>>(
                        shape.at(0), d.out_ch, d.kernel, d.stride));
                    break;
                case LayerKind::FullyConnected:
                    layers_.push_back(std::make_unique<FullyConnectedLayer<T>>(
                        static_cast<int>(Tensor<T>::element_count(shape)), d.units));
                    break;
                case LayerKind::MaxPool:
                    layers_.push_back(std::make_unique<MaxPoolLayer<T>>());
                    break;
                case LayerKind::Tanh:
                    layers_.push_back(std::make_unique<TanhLayer<T>>());
                    break;
                case LayerKind::Softmax:
                    softmax_seen = true;
                    continue;
            }
            if (d.has_quant_override()) layers_.back()->set_quant_override(d.quant_mode());
            shape = layers_.back()->output_shape(shape);
        }
        has_softmax_ = softmax_seen;
        output_shape_ = shape;
    }

    // Glorot-uniform weights, zero biases; draw order is fixed by layer order.
    void init_params(std::uint32_t seed) {
        std::mt19937 rng(seed);
        auto uniform = [&rng] {
            return (static_cast<double>(rng() >> 5) * 67108864.0 +
                    static_cast<double>(rng() >> 6)) /
                   9007199254740992.0;  // 53-bit uniform in [0,1)
        };
        for (auto& l : layers_) {
            auto ps = l->params();
            if (ps.empty()) continue;
            Tensor<T>& w = *ps[0].value;
            double fan_in = 1, fan_out = 1;
            if (w.shape.size() == 4) {
                fan_in = static_cast<double>(w.shape[1]) * w.shape[2] * w.shape[3];
                fan_out = static_cast<double>(w.shape[0]) * w.shape[2] * w.shape[3];
            } else {
                fan_in = w.shape[1];
                fan_out = w.shape[0];
            }
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            for (T& v : w.data) v = static_cast<T>((uniform() * 2.0 - 1.0) * limit);
            ps[1].value->fill(T{0});  // grads
        }
    }

    void prepare(const LayerContext& ctx) {
        for (auto& l : layers_) l->prepare(ctx);
    }

    Tensor<T> forward_logits(const Tensor<T>& x, const LayerContext& ctx) {
        Tensor<T> cur = x;
        for (auto& l : layers_) cur = l->forward(cur, ctx);
        return cur;
    }

    // Softmax probabilities (stable).
    Tensor<T> predict(const Tensor<T>& x, const LayerContext& ctx) {
        Tensor<T> z = forward_logits(x, ctx);
        return softmax(z);
    }

    static Tensor<T> softmax(const Tensor<T>& z) {
        Tensor<T> p = z;
        T zmax = *std::max_element(z.data.begin(), z.data.end());
        double sum = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<T>(std::exp(static_cast<double>(z[i] - zmax)));
            sum += static_cast<double>(p[i]);
        }
        for (T& v : p.data) v = static_cast<T>(static_cast<double>(v) / sum);
        return p;
    }

    // loss = logsumexp(z) - z[label]; dz = softmax(z) - onehot(label)
    static double softmax_cross_entropy(const Tensor<T>& z, int label, Tensor<T>& dz) {
        const int n = static_cast<int>(z.size());
        if (label < 0 || label >= n) throw ShapeError("label out of range");
        T zmax = *std::max_element(z.data.begin(), z.data.end());
        double sum = 0;
        for (int i = 0; i < n; ++i) sum += std::exp(static_cast<double>(z[i] - zmax));
        dz = Tensor<T>({n});
        for (int i = 0; i < n; ++i)
            dz[i] = static_cast<T>(std::exp(static_cast<double>(z[i] - zmax)) / sum);
        dz[label] -= T{1};
        return std::log(sum) + static_cast<double>(zmax) - static_cast<double>(z[label]);
    }

    // Softmax cross-entropy on the logits; returns the loss and backpropagates.
    double train_step_sample(const Tensor<T>& x, int label, const LayerContext& ctx) {
        Tensor<T> z = forward_logits(x, ctx);
        Tensor<T> dz;
        const double loss = softmax_cross_entropy(z, label, dz);
        backprop(dz, ctx);
        return loss;
    }

    // Loss and gradient from externally produced logits (e.g. the approximate
    // forward), backpropagated through this context's quantized graph.
    double train_step_from_logits(const Tensor<T>& x, const Tensor<T>& logits, int label,
                                  const LayerContext& ctx) {
        forward_logits(x, ctx);  // populate the straight-through caches
        Tensor<T> dz;
        const double loss = softmax_cross_entropy(logits, label, dz);
        backprop(dz, ctx);
        return loss;
    }

    void backprop(const Tensor<T>& dlogits, const LayerContext& ctx) {
        Tensor<T> g = dlogits;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            g = (*it)->backward(g, ctx);
    }

    void zero_grad() {
        for (auto& l : layers_)
            for (auto& p : l->params()) p.grad->fill(T{0});
    }

    // W <- W - eta * dL/dW_hat (master weights; quantization re-applies on the
    // next prepare()).
    void sgd_update(double eta) {
        for (auto& l : layers_)
            for (auto& p : l->params())
                for (std::size_t i = 0; i < p.value->size(); ++i)
                    (*p.value)[i] -= static_cast<T>(eta * static_cast<double>((*p.grad)[i]));
    }

    void scale_grads(double s) {
        for (auto& l : layers_)
            for (auto& p : l->params())
                for (T& g : p.grad->data) g = static_cast<T>(static_cast<double>(g) * s);
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        for (auto& l : layers_)
            for (auto& p : l->params()) out.push_back(p);
        return out;
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto& p : params()) n += p.value->size();
        return n;
    }

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    const std::vector<int>& output_shape() const { return output_shape_; }
    bool has_softmax() const { return has_softmax_; }

    Network clone() const {
        Network copy(spec_, input_shape_);
        auto src = const_cast<Network*>(this)->params();
        auto dst = copy.params();
        for (std::size_t i = 0; i < src.size(); ++i) *dst[i].value = *src[i].value;
        return copy;
    }

private:
    NetworkSpec spec_;
    std::vector<int> input_shape_;
    std::vector<int> output_shape_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    bool has_softmax_ = false;
};

}  // namespace reap
