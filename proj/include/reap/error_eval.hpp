#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reap/multiplier.hpp"
#include "reap/pipeline.hpp"

namespace reap {

// NMED / MRED / WCE summary of one multiplier or MAC configuration over an
// exhaustively enumerated operand domain.
//
// ED      = |approx - exact| per operand pair
// NMED    = mean(ED / |exact|) over pairs with exact != 0 (the headline
//           "error %" figure; identical to MRED by construction, kept under
//           both names so reports stay self-describing)
// MRED    = mean(ED / |exact|) over pairs with exact != 0
// WCE     = max(ED)
// wce_rel = max(ED / |exact|) over pairs with exact != 0
struct ErrorMetrics {
    double nmed = 0.0;
    double mred = 0.0;
    double wce = 0.0;
    double wce_rel = 0.0;
    std::uint64_t samples = 0;

    double error_pct() const { return nmed * 100.0; }
};

// Internal reduction state. Error distances accumulate as exact integers in
// fixed units so that chunked (parallel) evaluation combines to bit-identical
// results in any thread count; relative terms use compensated summation with
// a fixed combine order.
struct ErrorAggregates {
    uint128 sum_ed = 0;        // in units of 2^-kUnitShift
    uint128 max_ed = 0;
    uint128 max_exact = 0;     // max |exact| seen, same units
    long double sum_rel = 0.0L;
    long double rel_comp = 0.0L;  // Neumaier compensation
    double max_rel = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t nonzero = 0;

    void add(uint128 ed, uint128 exact_abs);
    void combine(const ErrorAggregates& other);
    ErrorMetrics finish() const;
    // Mean ED normalized by max |exact| (the magnitude-weighted variant).
    double normalized_mean_ed() const;
};

// MAC error over the full posit(8,2) operand space: all 255*255 non-NaR
// pairs evaluated as a single-element dot product with acc = 0.
ErrorMetrics evaluate_mac_exhaustive(const MultiplierSpec& spec,
                                     const AccumulatorConfig& acc_cfg = {},
                                     int threads = 1);

// Multiplier-only error over all unsigned pairs a, b < 2^w (w <= 8).
ErrorMetrics evaluate_multiplier_exhaustive(const MultiplierSpec& spec, int w,
                                            int threads = 1);

struct ReportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricsRow {
    std::string design;
    ErrorMetrics metrics;
};

// CSV schema: design,error_pct,nmed,mred,wce,wce_rel,samples
void emit_table_csv(const std::vector<MetricsRow>& rows, std::ostream& out);
void emit_table_json(const std::vector<MetricsRow>& rows, std::ostream& out);
void emit_table_text(const std::vector<MetricsRow>& rows, std::ostream& out);

}  // namespace reap
