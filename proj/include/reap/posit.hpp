#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace reap {

// Posit format parameters. useed = 2^(2^es) is always derived, never stored.
struct PositConfig {
    int n = 8;
    int es = 2;

    constexpr bool valid() const { return n >= 3 && n <= 16 && es >= 0 && es <= 3; }
    constexpr int useed_log2() const { return 1 << es; }
    // Scale of maxpos: useed^(n-2) = 2^((n-2)*2^es).
    constexpr int max_scale() const { return (n - 2) << es; }
    constexpr std::uint16_t pattern_mask() const {
        return static_cast<std::uint16_t>((1u << n) - 1);
    }
    constexpr std::uint16_t nar_pattern() const {
        return static_cast<std::uint16_t>(1u << (n - 1));
    }
    constexpr std::uint16_t maxpos_pattern() const {
        return static_cast<std::uint16_t>((1u << (n - 1)) - 1);
    }
    // Widest significand the format can produce: hidden bit + max fraction bits.
    constexpr int significand_width() const {
        int f = n - 3 - es;
        return 1 + (f > 0 ? f : 0);
    }

    friend constexpr bool operator==(const PositConfig&, const PositConfig&) = default;
};

// An n-bit posit pattern. Upper bits of `bits` are zero.
struct PositScalar {
    std::uint16_t bits = 0;
    PositConfig cfg{};

    bool is_zero() const { return bits == 0; }
    bool is_nar() const { return bits == cfg.nar_pattern(); }

    friend bool operator==(const PositScalar&, const PositScalar&) = default;
};

enum class PositKind : std::uint8_t { Zero, NaR, Normal };

// Unpacked posit: sign, effective binary exponent E = k*2^es + e, and a
// normalized significand with the hidden bit at position frac_bits
// (value in [1,2) for Normal). decode() fills it exactly; encode() also
// accepts wider-than-format significands plus a sticky bit for rounding.
struct DecodedPosit {
    PositKind kind = PositKind::Zero;
    int sign = +1;                   // +1 or -1
    int scale = 0;                   // effective exponent E
    std::uint64_t significand = 0;   // in [2^frac_bits, 2^(frac_bits+1)) when Normal
    int frac_bits = 0;               // 0..62
    bool sticky = false;             // nonzero bits dropped below the significand lsb

    double significand_value() const;
};

struct NarValueError : std::domain_error {
    NarValueError() : std::domain_error("NaR has no real value") {}
};

DecodedPosit decode(const PositScalar& p);

// Round-to-nearest-even on the regime/exponent/fraction bit expansion, with
// saturation: magnitudes above maxpos clamp to maxpos, nonzero magnitudes
// below minpos clamp to minpos (never to zero or NaR).
PositScalar encode(const DecodedPosit& v, PositConfig cfg);

double to_real(const PositScalar& p);  // exact; throws NarValueError on NaR
PositScalar from_real(double x, PositConfig cfg = {});

PositScalar negate(const PositScalar& p);  // two's complement; fixes 0 and NaR

// Precomputed decode of all 256 posit(8,2) patterns.
const std::array<DecodedPosit, 256>& decode_table_8_2();

}  // namespace reap
