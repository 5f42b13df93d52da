#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "reap/error_eval.hpp"

using namespace reap;

namespace {

// Naive reference metrics for small multiplier domains, straight from the
// definitions, in plain double arithmetic.
ErrorMetrics naive_multiplier_metrics(const MultiplierSpec& spec, int w) {
    ErrorMetrics m;
    double sum_rel = 0, max_rel = 0, max_ed = 0;
    std::uint64_t nonzero = 0;
    for (std::uint32_t a = 0; a < (1u << w); ++a)
        for (std::uint32_t b = 0; b < (1u << w); ++b) {
            ++m.samples;
            const double exact = static_cast<double>(exact_oracle(a, b));
            const double ed =
                std::abs(static_cast<double>(multiply(spec, a, b)) - exact);
            max_ed = std::max(max_ed, ed);
            if (exact != 0) {
                ++nonzero;
                sum_rel += ed / exact;
                max_rel = std::max(max_rel, ed / exact);
            }
        }
    m.mred = sum_rel / static_cast<double>(nonzero);
    m.nmed = m.mred;
    m.wce = max_ed;
    m.wce_rel = max_rel;
    return m;
}

}  // namespace

TEST_CASE("exact multiplier: all metrics zero on both domains") {
    const ErrorMetrics mult = evaluate_multiplier_exhaustive(make_exact(4), 4);
    CHECK(mult.nmed == 0.0);
    CHECK(mult.mred == 0.0);
    CHECK(mult.wce == 0.0);
    CHECK(mult.wce_rel == 0.0);
    CHECK(mult.samples == 256);

    const ErrorMetrics mac = evaluate_mac_exhaustive(make_exact(4));
    CHECK(mac.nmed == 0.0);
    CHECK(mac.mred == 0.0);
    CHECK(mac.wce == 0.0);
    CHECK(mac.samples == 255u * 255u);
}

TEST_CASE("metric definitions agree with a naive small-domain reference") {
    for (int w : {2, 3, 4}) {
        for (const MultiplierSpec& s : {make_mitchell(w, w), make_mitchell(w, 1),
                                        make_dralm(w, std::max(1, w - 2))}) {
            const ErrorMetrics fast = evaluate_multiplier_exhaustive(s, w);
            const ErrorMetrics ref = naive_multiplier_metrics(s, w);
            CHECK(fast.samples == ref.samples);
            CHECK(fast.mred == doctest::Approx(ref.mred).epsilon(1e-12));
            CHECK(fast.wce == doctest::Approx(ref.wce).epsilon(1e-12));
            CHECK(fast.wce_rel == doctest::Approx(ref.wce_rel).epsilon(1e-12));
        }
    }
}

TEST_CASE("classic mitchell multiplier: worst relative error is 1/9") {
    const ErrorMetrics m = evaluate_multiplier_exhaustive(make_mitchell(4, 4), 4);
    CHECK(m.wce_rel == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(m.wce_rel <= 0.1112);
}

TEST_CASE("MAC-domain error of the characterized configurations") {
    // Frozen operating points for the error table; exhaustively computed,
    // deterministic to the last bit.
    const ErrorMetrics mitch = evaluate_mac_exhaustive(make_mitchell(4, 1));
    CHECK(mitch.nmed == doctest::Approx(0.162785).epsilon(1e-4));
    const ErrorMetrics dralm = evaluate_mac_exhaustive(make_dralm(4, 2));
    CHECK(dralm.nmed == doctest::Approx(0.051094).epsilon(1e-4));
    CHECK(dralm.nmed < mitch.nmed);
}

TEST_CASE("lut from an exact dump scores zero everywhere") {
    const auto path = std::filesystem::temp_directory_path() / "reap_err_lut.csv";
    dump_lut(make_exact(4), path.string());
    const ErrorMetrics m = evaluate_multiplier_exhaustive(load_lut(path.string()), 4);
    CHECK(m.nmed == 0.0);
    CHECK(m.wce == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("parallel evaluation is bit-identical to serial") {
    for (const MultiplierSpec& s : {make_mitchell(4, 2), make_dralm(4, 2)}) {
        const ErrorMetrics serial = evaluate_mac_exhaustive(s, {}, 1);
        const ErrorMetrics parallel = evaluate_mac_exhaustive(s, {}, 2);
        CHECK(std::memcmp(&serial, &parallel, sizeof serial) == 0);

        const ErrorMetrics s1 = evaluate_multiplier_exhaustive(s, 8, 1);
        const ErrorMetrics s4 = evaluate_multiplier_exhaustive(s, 8, 4);
        CHECK(std::memcmp(&s1, &s4, sizeof s1) == 0);
    }
}

TEST_CASE("table emission: csv layout and determinism") {
    const std::vector<MetricsRow> rows = {
        {"PDPU_Accurate", evaluate_mac_exhaustive(make_exact(4))},
        {"Proposed_DR_ALM_t2", evaluate_mac_exhaustive(make_dralm(4, 2))},
    };
    std::ostringstream a, b;
    emit_table_csv(rows, a);
    emit_table_csv(rows, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("design,error_pct,nmed,mred,wce,wce_rel,samples") !=
          std::string::npos);
    CHECK(a.str().find("PDPU_Accurate,0.00,") != std::string::npos);

    std::ostringstream j;
    emit_table_json(rows, j);
    CHECK(j.str().find("\"schema_version\": 1") != std::string::npos);
    CHECK(j.str().find("\"design\": \"PDPU_Accurate\"") != std::string::npos);
}

TEST_CASE("table emission: validation errors") {
    CHECK_THROWS_AS(
        [] {
            std::ostringstream os;
            emit_table_csv({}, os);
        }(),
        ReportError);
    CHECK_THROWS_AS(
        [] {
            std::ostringstream os;
            emit_table_csv({{"", ErrorMetrics{}}}, os);
        }(),
        ReportError);
}

TEST_CASE("multiplier evaluation rejects oversized widths") {
    CHECK_THROWS_AS(evaluate_multiplier_exhaustive(make_exact(10), 10), MultConfigError);
}
