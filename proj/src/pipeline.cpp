#include "reap/pipeline.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace reap {

namespace {

int bit_width_u128(uint128 v) {
    int w = 0;
    while (v) {
        ++w;
        v >>= 1;
    }
    return w;
}

int ceil_log2(int v) {
    int w = 0;
    while ((1 << w) < v) ++w;
    return w;
}

// Worst-case alignment shift: product exponents span +-2*max_scale.
int max_shift_span(const PositConfig& pc) { return 4 * pc.max_scale(); }

int product_frac_bits(const PositConfig& pc) { return 2 * (pc.significand_width() - 1); }

int128 mask_to_width(int128 v, int w) {
    if (w >= 128) return v;
    uint128 u = static_cast<uint128>(v) & ((uint128{1} << w) - 1);
    if (u >> (w - 1)) u |= ~((uint128{1} << w) - 1);  // sign extend
    return static_cast<int128>(u);
}

const DecodedPosit& fast_decode(const PositScalar& p) {
    static const PositConfig pc82{8, 2};
    if (p.cfg == pc82) return decode_table_8_2()[p.bits];
    thread_local DecodedPosit tmp;
    tmp = decode(p);
    return tmp;
}

}  // namespace

int AccumulatorConfig::anchor(const PositConfig& pc) const {
    if (mode == Mode::Truncating) return product_frac_bits(pc);
    return max_shift_span(pc) + product_frac_bits(pc) + 8;
}

void AccumulatorConfig::validate(const PositConfig& pc, int n) const {
    if (width < 8 || width > 128)
        throw PipelineConfigError("accumulator width must be in [8,128], got " +
                                  std::to_string(width));
    const int w = pc.significand_width();
    const int headroom = ceil_log2(n + 2) + 1;  // n products + acc, plus the sign
    int top;  // highest occupied bit of a single aligned addend
    if (mode == Mode::Exact) {
        top = anchor(pc) - product_frac_bits(pc) + 2 * w;
    } else {
        top = 2 * w;
    }
    if (top + headroom > width)
        throw PipelineConfigError(
            "accumulator width " + std::to_string(width) + " cannot absorb " +
            std::to_string(n) + " elements (needs " + std::to_string(top + headroom) +
            " bits)");
}

DecodedOperands decode_stage(const DotProductRequest& req) {
    DecodedOperands dec;
    dec.pc = req.va.empty() ? req.acc.cfg : req.va.front().cfg;
    const int w = dec.pc.significand_width();
    dec.elems.resize(req.va.size());

    for (std::size_t i = 0; i < req.va.size(); ++i) {
        const DecodedPosit da = fast_decode(req.va[i]);
        const DecodedPosit db = fast_decode(req.vb[i]);
        auto& e = dec.elems[i];
        if (da.kind == PositKind::NaR || db.kind == PositKind::NaR) {
            dec.nar = true;
            e.zero = true;
            continue;
        }
        if (da.kind == PositKind::Zero || db.kind == PositKind::Zero) {
            e.zero = true;  // excluded from e_max
            continue;
        }
        e.neg = (da.sign < 0) != (db.sign < 0);
        e.exp = da.scale + db.scale;
        e.ma = static_cast<std::uint32_t>(da.significand) << (w - 1 - da.frac_bits);
        e.mb = static_cast<std::uint32_t>(db.significand) << (w - 1 - db.frac_bits);
    }

    dec.acc = fast_decode(req.acc);
    if (dec.acc.kind == PositKind::NaR) dec.nar = true;
    return dec;
}

std::vector<std::uint64_t> multiply_stage(const DecodedOperands& dec,
                                          const MultiplierSpec& spec) {
    std::vector<std::uint64_t> products(dec.elems.size(), 0);
    for (std::size_t i = 0; i < dec.elems.size(); ++i) {
        const auto& e = dec.elems[i];
        if (!e.zero) products[i] = multiply(spec, e.ma, e.mb);
    }
    return products;
}

int max_exponent(const DecodedOperands& dec) {
    bool any = false;
    int e_max = 0;
    for (const auto& e : dec.elems) {
        if (e.zero) continue;
        e_max = any ? std::max(e_max, e.exp) : e.exp;
        any = true;
    }
    if (dec.acc.kind == PositKind::Normal) {
        e_max = any ? std::max(e_max, dec.acc.scale) : dec.acc.scale;
        any = true;
    }
    return any ? e_max : 0;
}

namespace {

// Places an unsigned mantissa whose own lsb weighs 2^(exp - own_frac_bits)
// onto the accumulator grid, dropping fall-off bits in truncating mode,
// then applies the two's complement for negative addends.
int128 place_addend(uint128 mantissa, int exp, int own_frac_bits, bool neg, int e_max,
                    int anchor) {
    const int position = anchor - own_frac_bits - (e_max - exp);
    uint128 v;
    if (position >= 0)
        v = mantissa << position;
    else
        v = position > -128 ? mantissa >> -position : 0;
    return neg ? -static_cast<int128>(v) : static_cast<int128>(v);
}

}  // namespace

std::vector<int128> align_stage(const DecodedOperands& dec,
                                const std::vector<std::uint64_t>& products, int e_max,
                                const AccumulatorConfig& acc_cfg) {
    const int anchor = acc_cfg.anchor(dec.pc);
    const int fp = product_frac_bits(dec.pc);

    std::vector<int128> aligned;
    aligned.reserve(dec.elems.size() + 1);
    for (std::size_t i = 0; i < dec.elems.size(); ++i) {
        const auto& e = dec.elems[i];
        if (e.zero) {
            aligned.push_back(0);
            continue;
        }
        assert(e_max >= e.exp);
        aligned.push_back(place_addend(products[i], e.exp, fp, e.neg, e_max, anchor));
    }
    // The previous accumulator value joins the addend set like an operand.
    if (dec.acc.kind == PositKind::Normal) {
        aligned.push_back(place_addend(dec.acc.significand, dec.acc.scale,
                                       dec.acc.frac_bits, dec.acc.sign < 0, e_max,
                                       anchor));
    } else {
        aligned.push_back(0);
    }
    for (auto& a : aligned) a = mask_to_width(a, acc_cfg.width);
    return aligned;
}

int128 accumulate_stage(const std::vector<int128>& aligned,
                        const AccumulatorConfig& acc_cfg) {
    int128 sum = 0;
    for (int128 a : aligned) sum = mask_to_width(sum + a, acc_cfg.width);
    return sum;
}

NormalizedSum normalize_stage(int128 sum, int e_max, const AccumulatorConfig& acc_cfg,
                              const PositConfig& pc) {
    NormalizedSum ns;
    if (sum == 0) {
        ns.zero = true;
        ns.lzc = acc_cfg.width;
        return ns;
    }
    ns.negative = sum < 0;
    const uint128 mag = ns.negative ? static_cast<uint128>(-sum) : static_cast<uint128>(sum);
    const int msb = bit_width_u128(mag) - 1;
    ns.lzc = acc_cfg.width - 1 - msb;
    ns.scale = e_max - acc_cfg.anchor(pc) + msb;
    if (msb <= 62) {
        ns.significand = static_cast<std::uint64_t>(mag);
        ns.frac_bits = msb;
    } else {
        const int drop = msb - 62;
        ns.significand = static_cast<std::uint64_t>(mag >> drop);
        ns.sticky = (mag & ((uint128{1} << drop) - 1)) != 0;
        ns.frac_bits = 62;
    }
    return ns;
}

PositScalar encode_stage(const NormalizedSum& ns, const PositConfig& pc) {
    DecodedPosit v;
    if (ns.zero) {
        v.kind = PositKind::Zero;
        return encode(v, pc);
    }
    v.kind = PositKind::Normal;
    v.sign = ns.negative ? -1 : +1;
    v.scale = ns.scale;
    v.significand = ns.significand;
    v.frac_bits = ns.frac_bits;
    v.sticky = ns.sticky;
    return encode(v, pc);
}

DotProductResult dot_product(const DotProductRequest& req,
                             const AccumulatorConfig& acc_cfg) {
    if (req.va.size() != req.vb.size() || req.va.empty())
        throw PipelineConfigError("dot product requires |va| == |vb| >= 1");
    const PositConfig pc = req.va.front().cfg;
    if (req.multiplier.width != pc.significand_width())
        throw PipelineConfigError("multiplier width " +
                                  std::to_string(req.multiplier.width) +
                                  " does not match the posit significand width " +
                                  std::to_string(pc.significand_width()));
    acc_cfg.validate(pc, static_cast<int>(req.va.size()));

    DotProductResult res;
    PipelineTrace& t = res.trace;
    const DecodedOperands dec = decode_stage(req);

    t.sign_ab.resize(dec.elems.size());
    t.exp_ab.resize(dec.elems.size());
    t.zero.resize(dec.elems.size());
    for (std::size_t i = 0; i < dec.elems.size(); ++i) {
        t.sign_ab[i] = dec.elems[i].neg;
        t.exp_ab[i] = dec.elems[i].exp;
        t.zero[i] = dec.elems[i].zero;
    }

    if (dec.nar) {
        t.nar = true;
        t.out = PositScalar{pc.nar_pattern(), pc};
        res.out = t.out;
        return res;
    }

    t.product = multiply_stage(dec, req.multiplier);
    t.e_max = max_exponent(dec);
    t.aligned = align_stage(dec, t.product, t.e_max, acc_cfg);
    t.csa_sum = accumulate_stage(t.aligned, acc_cfg);

    const NormalizedSum ns = normalize_stage(t.csa_sum, t.e_max, acc_cfg, pc);
    t.lzc = ns.lzc;
    t.f_e = ns.zero ? 0 : ns.scale;
    t.f_m = ns.significand;
    t.f_m_frac_bits = ns.frac_bits;
    t.out = encode_stage(ns, pc);
    res.out = t.out;
    return res;
}

PositScalar dot_product_value(const DotProductRequest& req,
                              const AccumulatorConfig& acc_cfg) {
    if (req.va.size() != req.vb.size() || req.va.empty())
        throw PipelineConfigError("dot product requires |va| == |vb| >= 1");
    const PositConfig pc = req.va.front().cfg;
    if (req.multiplier.width != pc.significand_width())
        throw PipelineConfigError("multiplier width does not match the significand width");
    acc_cfg.validate(pc, static_cast<int>(req.va.size()));

    const DecodedOperands dec = decode_stage(req);
    if (dec.nar) return PositScalar{pc.nar_pattern(), pc};

    const int e_max = max_exponent(dec);
    const int anchor = acc_cfg.anchor(pc);
    const int fp = product_frac_bits(pc);
    int128 sum = 0;
    for (const auto& e : dec.elems) {
        if (e.zero) continue;
        const std::uint64_t prod = multiply(req.multiplier, e.ma, e.mb);
        sum = mask_to_width(
            sum + place_addend(prod, e.exp, fp, e.neg, e_max, anchor), acc_cfg.width);
    }
    if (dec.acc.kind == PositKind::Normal)
        sum = mask_to_width(sum + place_addend(dec.acc.significand, dec.acc.scale,
                                               dec.acc.frac_bits, dec.acc.sign < 0,
                                               e_max, anchor),
                            acc_cfg.width);
    return encode_stage(normalize_stage(sum, e_max, acc_cfg, pc), pc);
}

WideAccumulator::WideAccumulator(PositConfig pc) : pc_(pc) {
    lsb_exp_ = -(max_shift_span(pc) / 2 + product_frac_bits(pc)) - 8;
}

void WideAccumulator::add(const PositScalar& a, const PositScalar& b,
                          const MultiplierSpec& spec) {
    const DecodedPosit da = fast_decode(a);
    const DecodedPosit db = fast_decode(b);
    if (da.kind == PositKind::NaR || db.kind == PositKind::NaR) {
        nar_ = true;
        return;
    }
    if (da.kind == PositKind::Zero || db.kind == PositKind::Zero) return;
    const int w = pc_.significand_width();
    const std::uint32_t ma = static_cast<std::uint32_t>(da.significand)
                             << (w - 1 - da.frac_bits);
    const std::uint32_t mb = static_cast<std::uint32_t>(db.significand)
                             << (w - 1 - db.frac_bits);
    const std::uint64_t prod = multiply(spec, ma, mb);
    const int position = (da.scale + db.scale) - product_frac_bits(pc_) - lsb_exp_;
    assert(position >= 0);
    int128 v = static_cast<int128>(static_cast<uint128>(prod) << position);
    sum_ += (da.sign < 0) != (db.sign < 0) ? -v : v;
}

void WideAccumulator::add_real(double x) {
    const PositScalar p = from_real(x, pc_);
    const DecodedPosit d = fast_decode(p);
    if (d.kind == PositKind::NaR) {
        nar_ = true;
        return;
    }
    if (d.kind == PositKind::Zero) return;
    const int position = d.scale - d.frac_bits - lsb_exp_;
    assert(position >= 0);
    int128 v = static_cast<int128>(static_cast<uint128>(d.significand) << position);
    sum_ += d.sign < 0 ? -v : v;
}

PositScalar WideAccumulator::read() const {
    if (nar_) return PositScalar{pc_.nar_pattern(), pc_};
    DecodedPosit v;
    if (sum_ == 0) return encode(v, pc_);
    v.kind = PositKind::Normal;
    v.sign = sum_ < 0 ? -1 : +1;
    const uint128 mag = sum_ < 0 ? static_cast<uint128>(-sum_) : static_cast<uint128>(sum_);
    const int msb = bit_width_u128(mag) - 1;
    v.scale = lsb_exp_ + msb;
    if (msb <= 62) {
        v.significand = static_cast<std::uint64_t>(mag);
        v.frac_bits = msb;
    } else {
        const int drop = msb - 62;
        v.significand = static_cast<std::uint64_t>(mag >> drop);
        v.sticky = (mag & ((uint128{1} << drop) - 1)) != 0;
        v.frac_bits = 62;
    }
    return encode(v, pc_);
}

namespace {

void append_hex_u128(std::string& s, uint128 v, int bits) {
    static const char* digits = "0123456789abcdef";
    const int nibbles = (bits + 3) / 4;
    for (int i = nibbles - 1; i >= 0; --i)
        s += digits[static_cast<unsigned>((v >> (4 * i)) & 0xf)];
}

void append_hex_signed(std::string& s, long long v) {
    char buf[32];
    if (v < 0)
        std::snprintf(buf, sizeof buf, "-%llx", static_cast<unsigned long long>(-v));
    else
        std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
    s += buf;
}

}  // namespace

std::string format_trace_line(const DotProductRequest& req, const PipelineTrace& t,
                              const AccumulatorConfig& acc_cfg) {
    const PositConfig pc = req.va.front().cfg;
    std::string s;
    auto pattern_list = [&](const std::vector<PositScalar>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            append_hex_u128(s, v[i].bits, pc.n);
        }
    };
    pattern_list(req.va);
    s += ';';
    pattern_list(req.vb);
    s += ';';
    append_hex_u128(s, req.acc.bits, pc.n);
    s += ';';
    for (std::size_t i = 0; i < t.sign_ab.size(); ++i) {
        if (i) s += ',';
        s += t.sign_ab[i] ? '1' : '0';
    }
    s += ';';
    for (std::size_t i = 0; i < t.exp_ab.size(); ++i) {
        if (i) s += ',';
        append_hex_signed(s, t.exp_ab[i]);
    }
    s += ';';
    for (std::size_t i = 0; i < t.product.size(); ++i) {
        if (i) s += ',';
        append_hex_signed(s, static_cast<long long>(t.product[i]));
    }
    s += ';';
    append_hex_signed(s, t.e_max);
    s += ';';
    for (std::size_t i = 0; i < t.aligned.size(); ++i) {
        if (i) s += ',';
        append_hex_u128(s, static_cast<uint128>(t.aligned[i]), acc_cfg.width);
    }
    s += ';';
    append_hex_u128(s, static_cast<uint128>(t.csa_sum), acc_cfg.width);
    s += ';';
    append_hex_signed(s, t.lzc);
    s += ';';
    append_hex_signed(s, t.f_e);
    s += ';';
    append_hex_signed(s, static_cast<long long>(t.f_m));
    s += ';';
    append_hex_u128(s, t.out.bits, pc.n);
    return s;
}

}  // namespace reap
