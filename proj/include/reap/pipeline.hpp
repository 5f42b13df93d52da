#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reap/multiplier.hpp"
#include "reap/posit.hpp"

namespace reap {

using int128 = __int128;
using uint128 = unsigned __int128;

struct PipelineConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixed-point accumulator behind the CSA tree.
//
// Exact mode sizes the anchor so that no alignment shift ever drops a bit:
// the result is the correctly rounded posit of the exact dot product.
// Truncating mode is hardware-faithful: the accumulator lsb sits at the
// product lsb for e_max, so a right shift by s drops exactly s bits.
struct AccumulatorConfig {
    enum class Mode : std::uint8_t { Exact, Truncating };

    Mode mode = Mode::Exact;
    int width = 128;  // W, two's-complement bits; at most 128

    static AccumulatorConfig exact() { return {}; }
    static AccumulatorConfig truncating(int w) { return {Mode::Truncating, w}; }

    // Weight of the accumulator lsb is 2^(e_max - anchor).
    int anchor(const PositConfig& pc) const;
    // Throws PipelineConfigError if W cannot absorb n elements plus acc.
    void validate(const PositConfig& pc, int n) const;
};

struct DotProductRequest {
    std::vector<PositScalar> va;
    std::vector<PositScalar> vb;
    PositScalar acc;
    MultiplierSpec multiplier;
};

// Per-stage intermediates of one evaluation, for RTL cross-checking.
struct PipelineTrace {
    bool nar = false;
    std::vector<std::uint8_t> sign_ab;   // per element, 1 = negative
    std::vector<int> exp_ab;             // e_ab = scale(a) + scale(b)
    std::vector<std::uint8_t> zero;      // element excluded from e_max
    std::vector<std::uint64_t> product;  // raw multiplier output, 2w bits
    int e_max = 0;
    std::vector<int128> aligned;  // two's-complement addends; acc is the last entry
    int128 csa_sum = 0;
    int lzc = 0;
    int f_e = 0;
    std::uint64_t f_m = 0;  // normalized significand bits (hidden bit included)
    int f_m_frac_bits = 0;
    PositScalar out;
};

struct DotProductResult {
    PositScalar out;
    PipelineTrace trace;
};

// Stage-level interface, composed by dot_product().
struct DecodedOperands {
    struct Element {
        bool zero = false;
        bool neg = false;
        int exp = 0;           // e_ab
        std::uint32_t ma = 0;  // significands zero-padded to the multiplier width
        std::uint32_t mb = 0;
    };
    std::vector<Element> elems;
    DecodedPosit acc;
    bool nar = false;  // any NaR operand anywhere
    PositConfig pc;
};

struct NormalizedSum {
    bool zero = false;
    bool negative = false;
    int scale = 0;  // f_e
    std::uint64_t significand = 0;
    int frac_bits = 0;
    bool sticky = false;
    int lzc = 0;
};

DecodedOperands decode_stage(const DotProductRequest& req);
std::vector<std::uint64_t> multiply_stage(const DecodedOperands& dec,
                                          const MultiplierSpec& spec);
int max_exponent(const DecodedOperands& dec);
std::vector<int128> align_stage(const DecodedOperands& dec,
                                const std::vector<std::uint64_t>& products, int e_max,
                                const AccumulatorConfig& acc_cfg);
int128 accumulate_stage(const std::vector<int128>& aligned,
                        const AccumulatorConfig& acc_cfg);
NormalizedSum normalize_stage(int128 sum, int e_max, const AccumulatorConfig& acc_cfg,
                              const PositConfig& pc);
PositScalar encode_stage(const NormalizedSum& ns, const PositConfig& pc);

// out = acc + sum_i va[i] (x) vb[i], rounded once at the end.
DotProductResult dot_product(const DotProductRequest& req,
                             const AccumulatorConfig& acc_cfg = {});

// Same arithmetic without materializing a trace; for bulk callers.
PositScalar dot_product_value(const DotProductRequest& req,
                              const AccumulatorConfig& acc_cfg = {});

// Latency annotation used by the cycle model: fill once, one accumulation
// per cycle afterwards.
constexpr int kPipelineFillCycles = 5;

// Alternative accumulation mode for chunked dot products: the running sum
// stays in a wide fixed-point register between chunks instead of being
// re-encoded to a posit each time.
class WideAccumulator {
public:
    explicit WideAccumulator(PositConfig pc = {});

    void add(const PositScalar& a, const PositScalar& b, const MultiplierSpec& spec);
    void add_real(double x);  // bias path: posit-quantizes then accumulates
    bool nar() const { return nar_; }
    PositScalar read() const;  // single rounding of the retained sum

private:
    PositConfig pc_;
    int128 sum_ = 0;
    int lsb_exp_ = 0;  // weight of bit 0 is 2^lsb_exp_
    bool nar_ = false;
};

// One evaluation per line, all integers hexadecimal:
// va;vb;acc;s_ab[];e_ab[];prod[];e_max;aligned[];sum;lzc;f_e;f_m;out
std::string format_trace_line(const DotProductRequest& req, const PipelineTrace& t,
                              const AccumulatorConfig& acc_cfg);

}  // namespace reap
