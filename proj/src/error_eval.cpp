#include "reap/error_eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

namespace reap {

namespace {

// Fixed-point unit for exact error sums: every exact and approximate MAC
// value over the posit(8,2) domain is an integer multiple of 2^-54.
constexpr int kUnitShift = 54;

int128 to_units(double x) {
    // x is always a dyadic value with few significand bits; ldexp is exact.
    return static_cast<int128>(std::ldexp(x, kUnitShift));
}

long double u128_to_ld(uint128 v) {
    return static_cast<long double>(static_cast<std::uint64_t>(v >> 64)) * 0x1p64L +
           static_cast<long double>(static_cast<std::uint64_t>(v));
}

void neumaier_add(long double& sum, long double& comp, long double term) {
    const long double t = sum + term;
    if (std::fabs(sum) >= std::fabs(term))
        comp += (sum - t) + term;
    else
        comp += (term - t) + sum;
    sum = t;
}

}  // namespace

void ErrorAggregates::add(uint128 ed, uint128 exact_abs) {
    ++samples;
    sum_ed += ed;
    max_ed = std::max(max_ed, ed);
    max_exact = std::max(max_exact, exact_abs);
    if (exact_abs != 0) {
        ++nonzero;
        const double rel =
            static_cast<double>(u128_to_ld(ed) / u128_to_ld(exact_abs));
        neumaier_add(sum_rel, rel_comp, rel);
        max_rel = std::max(max_rel, rel);
    }
}

void ErrorAggregates::combine(const ErrorAggregates& other) {
    samples += other.samples;
    nonzero += other.nonzero;
    sum_ed += other.sum_ed;
    max_ed = std::max(max_ed, other.max_ed);
    max_exact = std::max(max_exact, other.max_exact);
    neumaier_add(sum_rel, rel_comp, other.sum_rel + other.rel_comp);
    max_rel = std::max(max_rel, other.max_rel);
}

double ErrorAggregates::normalized_mean_ed() const {
    if (samples == 0 || max_exact == 0) return 0.0;
    return static_cast<double>(u128_to_ld(sum_ed) /
                               (static_cast<long double>(samples) * u128_to_ld(max_exact)));
}

ErrorMetrics ErrorAggregates::finish() const {
    ErrorMetrics m;
    m.samples = samples;
    if (nonzero != 0)
        m.mred = static_cast<double>((sum_rel + rel_comp) / static_cast<long double>(nonzero));
    m.nmed = m.mred;
    m.wce = static_cast<double>(std::ldexp(static_cast<double>(u128_to_ld(max_ed)), -kUnitShift));
    m.wce_rel = max_rel;
    return m;
}

namespace {

// Deterministic row-partitioned reduction: per-row aggregates are produced
// independently (optionally across threads) and combined in row order, so
// results are bit-identical for every thread count.
template <typename RowFn>
ErrorAggregates reduce_rows(int row_count, int threads, RowFn row_fn) {
    std::vector<ErrorAggregates> rows(row_count);
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int r = 0; r < row_count; ++r) row_fn(r, rows[r]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (int r = t; r < row_count; r += threads) row_fn(r, rows[r]);
            });
        for (auto& th : pool) th.join();
    }
    ErrorAggregates total;
    for (const auto& r : rows) total.combine(r);
    return total;
}

}  // namespace

ErrorMetrics evaluate_mac_exhaustive(const MultiplierSpec& spec,
                                     const AccumulatorConfig& acc_cfg, int threads) {
    const PositConfig pc{8, 2};
    const PositScalar zero{0, pc};

    // Exact real values of all patterns, precomputed once.
    std::array<double, 256> real{};
    for (int i = 0; i < 256; ++i)
        if (i != pc.nar_pattern())
            real[i] = to_real(PositScalar{static_cast<std::uint16_t>(i), pc});

    const MultiplierSpec exact_spec = make_exact(pc.significand_width());

    ErrorAggregates agg = reduce_rows(256, threads, [&](int a, ErrorAggregates& row) {
        if (a == pc.nar_pattern()) return;
        DotProductRequest req;
        req.va = {PositScalar{static_cast<std::uint16_t>(a), pc}};
        req.vb = {zero};
        req.acc = zero;
        req.multiplier = spec;
        DotProductRequest ref_req = req;
        ref_req.multiplier = exact_spec;
        for (int b = 0; b < 256; ++b) {
            if (b == pc.nar_pattern()) continue;
            req.vb[0].bits = static_cast<std::uint16_t>(b);
            ref_req.vb[0].bits = req.vb[0].bits;
            const DotProductResult r = dot_product(req, acc_cfg);
            // Reference: the accurate pipeline on the same operands, i.e. the
            // correctly rounded posit of the true real product.
            const DotProductResult ref = dot_product(ref_req, acc_cfg);
            const int128 ie = to_units(real[ref.out.bits]);
            const int128 ia = to_units(real[r.out.bits]);
            const uint128 ed =
                ia >= ie ? static_cast<uint128>(ia - ie) : static_cast<uint128>(ie - ia);
            const uint128 mag =
                ie >= 0 ? static_cast<uint128>(ie) : static_cast<uint128>(-ie);
            row.add(ed, mag);
        }
    });
    return agg.finish();
}

ErrorMetrics evaluate_multiplier_exhaustive(const MultiplierSpec& spec, int w,
                                            int threads) {
    if (w < 2 || w > 8)
        throw MultConfigError("exhaustive multiplier evaluation supports widths 2..8");
    MultiplierSpec s = spec;
    s.width = w;
    const int n = 1 << w;
    ErrorAggregates agg = reduce_rows(n, threads, [&](int a, ErrorAggregates& row) {
        for (int b = 0; b < n; ++b) {
            const std::uint64_t exact = exact_oracle(a, b);
            const std::uint64_t approx = multiply(s, a, b);
            const std::uint64_t ed = approx >= exact ? approx - exact : exact - approx;
            row.add((uint128{ed}) << kUnitShift, (uint128{exact}) << kUnitShift);
        }
    });
    return agg.finish();
}

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void validate_rows(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw ReportError("metrics table needs at least one row");
    for (const auto& r : rows)
        if (r.design.empty()) throw ReportError("metrics row with empty design name");
}

}  // namespace

void emit_table_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
    validate_rows(rows);
    out << "# schema_version=1\n";
    out << "design,error_pct,nmed,mred,wce,wce_rel,samples\n";
    for (const auto& r : rows) {
        out << r.design << ',' << fmt("%.2f", r.metrics.error_pct()) << ','
            << fmt("%.9g", r.metrics.nmed) << ',' << fmt("%.9g", r.metrics.mred) << ','
            << fmt("%.9g", r.metrics.wce) << ',' << fmt("%.9g", r.metrics.wce_rel) << ','
            << r.metrics.samples << '\n';
    }
}

void emit_table_json(const std::vector<MetricsRow>& rows, std::ostream& out) {
    validate_rows(rows);
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    auto& arr = doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["design"] = r.design;
        j["error_pct"] = r.metrics.error_pct();
        j["nmed"] = r.metrics.nmed;
        j["mred"] = r.metrics.mred;
        j["wce"] = r.metrics.wce;
        j["wce_rel"] = r.metrics.wce_rel;
        j["samples"] = r.metrics.samples;
        arr.push_back(std::move(j));
    }
    out << doc.dump(2) << '\n';
}

void emit_table_text(const std::vector<MetricsRow>& rows, std::ostream& out) {
    validate_rows(rows);
    for (const auto& r : rows) {
        out << r.design << ": error " << fmt("%.2f", r.metrics.error_pct())
            << "%  nmed=" << fmt("%.6g", r.metrics.nmed)
            << "  mred=" << fmt("%.6g", r.metrics.mred)
            << "  wce=" << fmt("%.6g", r.metrics.wce)
            << "  wce_rel=" << fmt("%.6g", r.metrics.wce_rel) << "  samples=" << r.metrics.samples
            << '\n';
    }
}

}  // namespace reap
