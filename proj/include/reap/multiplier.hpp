#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace reap {

enum class MultKind : std::uint8_t { Exact, MitchellTrunc, DrAlm, Lut };

const char* mult_kind_name(MultKind k);

struct MultConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fully populated product table for one operand width.
struct LutTable {
    int width = 0;
    std::vector<std::uint32_t> products;  // index a*2^width + b

    std::uint64_t lookup(std::uint32_t a, std::uint32_t b) const {
        return products[(static_cast<std::size_t>(a) << width) | b];
    }
};

// One approximate-multiplication strategy. Immutable after construction;
// multiply() is pure, so specs can be shared across threads freely.
struct MultiplierSpec {
    MultKind kind = MultKind::Exact;
    int width = 4;          // operand bit count, 2..16
    int trunc = 4;          // retained bits after the leading one (MitchellTrunc/DrAlm)
    std::string lut_path;   // Lut only
    std::shared_ptr<const LutTable> lut;  // resident table (Lut only)

    std::string describe() const;
};

MultiplierSpec make_exact(int width = 4);
MultiplierSpec make_mitchell(int width = 4, int trunc = 4);
// Default t=2 is the characterized posit(8,2) integration point.
MultiplierSpec make_dralm(int width = 4, int trunc = 2);

// Parses a spec given on a command line / config: "exact", "mitchell", "dr-alm", "lut".
MultiplierSpec make_multiplier(const std::string& kind, int width, int trunc,
                               const std::string& lut_path);

// Product of two unsigned width-bit operands. Result fits 2*width bits.
// A zero operand always yields a zero product, for every kind.
std::uint64_t multiply(const MultiplierSpec& spec, std::uint32_t a, std::uint32_t b);

// Reference product for error metrics: plain integer multiplication.
std::uint64_t exact_oracle(std::uint32_t a, std::uint32_t b);

// LUT CSV format: header "a,b,product", one decimal row per operand pair,
// all 2^w * 2^w pairs present, '#' lines ignored. Width is inferred from the
// largest operand seen.
MultiplierSpec load_lut(const std::string& path);
void dump_lut(const MultiplierSpec& spec, const std::string& path);

}  // namespace reap
