#include "reap/nn.hpp"

namespace reap {

PositScalar chunked_posit_dot(std::span<const PositScalar> w,
                              std::span<const PositScalar> x, double bias,
                              const LayerContext& ctx) {
    const PositConfig pc{8, 2};
    if (ctx.wide_acc) {
        WideAccumulator acc(pc);
        for (std::size_t i = 0; i < w.size(); ++i) acc.add(w[i], x[i], ctx.multiplier);
        acc.add_real(bias);
        return acc.read();
    }

    thread_local DotProductRequest req;
    req.multiplier = ctx.multiplier;
    const PositScalar one = from_real(1.0, pc);
    const PositScalar bias_p = from_real(bias, pc);
    PositScalar acc{0, pc};

    const std::size_t total = w.size() + 1;  // bias rides as the last element
    const std::size_t chunk = static_cast<std::size_t>(ctx.chunk);
    for (std::size_t start = 0; start < total; start += chunk) {
        const std::size_t len = std::min(chunk, total - start);
        req.va.resize(len);
        req.vb.resize(len);
        for (std::size_t j = 0; j < len; ++j) {
            const std::size_t i = start + j;
            if (i < w.size()) {
                req.va[j] = w[i];
                req.vb[j] = x[i];
            } else {
                req.va[j] = bias_p;
                req.vb[j] = one;
            }
        }
        req.acc = acc;
        acc = dot_product_value(req);
    }
    return acc;
}

}  // namespace reap
