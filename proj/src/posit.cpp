#include "reap/posit.hpp"

#include <cassert>
#include <cmath>

namespace reap {

namespace {

using u128 = unsigned __int128;

// Floor division for possibly negative numerators.
int floor_div(int a, int b) {
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

double DecodedPosit::significand_value() const {
    return std::ldexp(static_cast<double>(significand), -frac_bits);
}

DecodedPosit decode(const PositScalar& p) {
    const PositConfig cfg = p.cfg;
    assert(cfg.valid());
    assert(p.bits <= cfg.pattern_mask());

    DecodedPosit d;
    if (p.bits == 0) {
        d.kind = PositKind::Zero;
        return d;
    }
    if (p.bits == cfg.nar_pattern()) {
        d.kind = PositKind::NaR;
        return d;
    }

    d.kind = PositKind::Normal;
    std::uint32_t body = p.bits;
    if (body & cfg.nar_pattern()) {
        d.sign = -1;
        body = (~body + 1u) & cfg.pattern_mask();
    }

    // Regime: run of identical bits starting below the sign bit.
    int pos = cfg.n - 2;
    const std::uint32_t r0 = (body >> pos) & 1u;
    int run = 0;
    while (pos >= 0 && ((body >> pos) & 1u) == r0) {
        ++run;
        --pos;
    }
    const int k = r0 ? run - 1 : -run;
    // pos sits on the terminating bit (consumed); remaining bits follow it.
    const int rem = pos >= 0 ? pos : 0;

    const int e_bits = rem < cfg.es ? rem : cfg.es;
    std::uint32_t e_field = 0;
    if (e_bits > 0) e_field = (body >> (rem - e_bits)) & ((1u << e_bits) - 1u);
    // Missing low exponent bits read as zero.
    const int e = static_cast<int>(e_field) << (cfg.es - e_bits);

    const int f = rem - e_bits;
    const std::uint32_t frac = body & ((1u << f) - 1u);

    d.scale = k * (1 << cfg.es) + e;
    d.frac_bits = f;
    d.significand = (1u << f) | frac;
    return d;
}

PositScalar encode(const DecodedPosit& v, PositConfig cfg) {
    assert(cfg.valid());
    PositScalar out{0, cfg};
    if (v.kind == PositKind::Zero) return out;
    if (v.kind == PositKind::NaR) {
        out.bits = cfg.nar_pattern();
        return out;
    }

    assert(v.frac_bits >= 0 && v.frac_bits <= 62);
    assert(v.significand >= (std::uint64_t{1} << v.frac_bits) &&
           v.significand < (std::uint64_t{2} << v.frac_bits));

    std::uint32_t body;
    if (v.scale > cfg.max_scale()) {
        body = cfg.maxpos_pattern();
    } else if (v.scale < -cfg.max_scale()) {
        body = 1;  // minpos; nonzero values never round to zero
    } else {
        const int es2 = 1 << cfg.es;
        const int k = floor_div(v.scale, es2);
        const std::uint32_t e = static_cast<std::uint32_t>(v.scale - k * es2);

        // Regime bit string: k >= 0 -> (k+1) ones then 0; k < 0 -> (-k) zeros then 1.
        int regime_len;
        u128 wide;
        if (k >= 0) {
            regime_len = k + 2;
            wide = ((u128{1} << (k + 1)) - 1) << 1;
        } else {
            regime_len = -k + 1;
            wide = 1;
        }

        // Pad the fraction so the cut always lands inside it.
        int fb = v.frac_bits;
        u128 sig = v.significand;
        if (fb < cfg.n) {
            sig <<= (cfg.n - fb);
            fb = cfg.n;
        }
        wide = (wide << cfg.es) | e;
        wide = (wide << fb) | (sig & ((u128{1} << fb) - 1));

        const int total = regime_len + cfg.es + fb;
        const int cut = total - (cfg.n - 1);
        assert(cut >= 1);

        body = static_cast<std::uint32_t>(wide >> cut);
        const bool guard = (wide >> (cut - 1)) & 1;
        const bool sticky = v.sticky || (wide & ((u128{1} << (cut - 1)) - 1)) != 0;
        if (guard && (sticky || (body & 1u))) ++body;
        // Regime saturation above already excludes a carry into the NaR pattern.
        assert(body <= cfg.maxpos_pattern());
    }

    out.bits = static_cast<std::uint16_t>(body);
    if (v.sign < 0) out.bits = (~out.bits + 1u) & cfg.pattern_mask();
    return out;
}

double to_real(const PositScalar& p) {
    const DecodedPosit d = decode(p);
    switch (d.kind) {
        case PositKind::Zero:
            return 0.0;
        case PositKind::NaR:
            throw NarValueError{};
        case PositKind::Normal:
            break;
    }
    const double mag =
        std::ldexp(static_cast<double>(d.significand), d.scale - d.frac_bits);
    return d.sign < 0 ? -mag : mag;
}

PositScalar from_real(double x, PositConfig cfg) {
    assert(cfg.valid());
    DecodedPosit v;
    if (!std::isfinite(x)) {
        v.kind = PositKind::NaR;
        return encode(v, cfg);
    }
    if (x == 0.0) {
        v.kind = PositKind::Zero;
        return encode(v, cfg);
    }
    v.kind = PositKind::Normal;
    v.sign = std::signbit(x) ? -1 : +1;

    int exp2 = 0;
    const double m = std::frexp(std::fabs(x), &exp2);  // m in [0.5, 1)
    v.scale = exp2 - 1;
    // 2m in [1,2) carries at most 53 significant bits; exact as an integer here.
    v.significand = static_cast<std::uint64_t>(std::ldexp(m, 53));
    v.frac_bits = 52;
    return encode(v, cfg);
}

PositScalar negate(const PositScalar& p) {
    PositScalar out = p;
    out.bits = (~p.bits + 1u) & p.cfg.pattern_mask();
    return out;
}

const std::array<DecodedPosit, 256>& decode_table_8_2() {
    static const std::array<DecodedPosit, 256> table = [] {
        std::array<DecodedPosit, 256> t{};
        for (int i = 0; i < 256; ++i) {
            t[i] = decode(PositScalar{static_cast<std::uint16_t>(i), PositConfig{8, 2}});
        }
        return t;
    }();
    return table;
}

}  // namespace reap
