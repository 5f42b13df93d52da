#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "reap/veu.hpp"

using namespace reap;

TEST_CASE("LeNet-5 C1 matches the architecture's stated figures") {
    WorkloadSpec s;
    s.image_h = 28;
    s.image_w = 28;
    s.channels = 1;
    s.kernel = 5;
    s.stride = 1;
    s.kernel_count = 6;
    s.n_macs = 6;
    const CycleReport r = compute_cycles(s);
    CHECK(r.windows_per_kernel == 576);   // 24*24 MAC windows per kernel
    CHECK(r.cycles_per_batch == 30);      // 5 fill + 25 kernel MACs
    CHECK(r.batches == 96);               // ceil(576/6)
    CHECK(r.compute_cycles == 17280);     // 6 * 96 * 30
    CHECK(r.self_consistent(6, 6));
}

TEST_CASE("feed cycles: both interpretations") {
    WorkloadSpec s;
    s.n_macs = 1;
    CHECK(feed_cycles(s).modeled == 3);
    s.n_macs = 8;
    CHECK(feed_cycles(s).modeled == 24);
    CHECK(feed_cycles(s).literal == 6144);
    s.n_macs = 0;
    CHECK_THROWS_AS(feed_cycles(s), VeuError);
}

TEST_CASE("geometry validation names the offending dimension") {
    WorkloadSpec s;
    s.image_h = 28;
    s.image_w = 28;
    s.kernel = 5;
    s.stride = 3;  // (28-5) % 3 != 0
    CHECK_THROWS_WITH_AS(compute_cycles(s), doctest::Contains("height"), VeuError);
    s.image_h = 29;
    CHECK_THROWS_WITH_AS(compute_cycles(s), doctest::Contains("width"), VeuError);
    s = WorkloadSpec{};
    s.kernel = 40;
    CHECK_THROWS_WITH_AS(compute_cycles(s), doctest::Contains("kernel"), VeuError);
    s = WorkloadSpec{};
    s.n_macs = 0;
    CHECK_THROWS_AS(compute_cycles(s), VeuError);
}

TEST_CASE("monotonicity in the MAC count") {
    WorkloadSpec s;
    s.image_h = s.image_w = 28;
    s.kernel = 5;
    s.kernel_count = 6;
    std::uint64_t prev = 0;
    for (int n = 1; n <= 64; n *= 2) {
        s.n_macs = n;
        const std::uint64_t c = compute_cycles(s).compute_cycles;
        if (prev) CHECK(c <= prev);
        prev = c;
    }
    // Exact halving when windows divide evenly: 576 windows, 4 -> 8 lanes.
    s.n_macs = 4;
    const std::uint64_t c4 = compute_cycles(s).compute_cycles;
    s.n_macs = 8;
    CHECK(compute_cycles(s).compute_cycles * 2 == c4);
}

TEST_CASE("randomized self-consistency") {
    std::mt19937 rng(23);
    int checked = 0;
    while (checked < 1000) {
        WorkloadSpec s;
        s.kernel = 1 + static_cast<int>(rng() % 7);
        s.stride = 1 + static_cast<int>(rng() % 3);
        s.image_h = s.kernel + s.stride * static_cast<int>(rng() % 40);
        s.image_w = s.kernel + s.stride * static_cast<int>(rng() % 40);
        s.channels = 1 + static_cast<int>(rng() % 16);
        s.kernel_count = 1 + static_cast<int>(rng() % 32);
        s.n_macs = 1 + static_cast<int>(rng() % 64);
        const CycleReport r = compute_cycles(s);
        CHECK(r.self_consistent(s.kernel_count, s.n_macs));
        CHECK(r.batches * s.n_macs >= r.windows_per_kernel);
        CHECK(r.windows_per_kernel > (r.batches - 1) * s.n_macs);
        ++checked;
    }
}

TEST_CASE("layer report walks the reference network") {
    const NetworkSpec spec = mnist_reference_spec();
    const auto rows = layer_report(spec.layers, 28, 28, 1, 6);
    REQUIRE(rows.size() == spec.layers.size() + 1);  // + total

    CHECK(rows[0].layer.substr(0, 4) == "conv");
    CHECK(rows[0].windows_per_kernel == 576);
    CHECK(rows[0].cycles_per_batch == 30);
    CHECK(rows[0].compute_cycles == 17280);

    // conv2: 12x12x6 input, 5x5 kernel -> 64 windows, 5 + 25*6 = 155 cycles.
    CHECK(rows[3].windows_per_kernel == 64);
    CHECK(rows[3].cycles_per_batch == 155);

    // fc layers are 1x1 convs over flattened features: 4*4*16 = 256 inputs.
    CHECK(rows[6].cycles_per_batch == 5 + 256);
    CHECK(rows[8].cycles_per_batch == 5 + 120);

    // not-modeled rows carry a note and no cycles
    CHECK_FALSE(rows[1].modeled);
    CHECK(rows[1].compute_cycles == 0);
    CHECK(rows[1].note.find("not modeled") != std::string::npos);

    const CycleReport& total = rows.back();
    CHECK(total.layer == "total");
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) sum += rows[i].compute_cycles;
    CHECK(total.compute_cycles == sum);
}

TEST_CASE("fc-as-conv: 120 units from 400 inputs") {
    std::vector<LayerDesc> layers = {{LayerKind::FullyConnected, 0, 0, 1, 120}};
    const auto rows = layer_report(layers, 5, 5, 16, 8);
    CHECK(rows[0].cycles_per_batch == 5 + 400);
    CHECK(rows[0].windows_per_kernel == 1);
}

TEST_CASE("empty network yields an empty report") {
    CHECK(layer_report({}, 28, 28, 1, 4).empty());
}

TEST_CASE("emitters: csv headers, notes, determinism") {
    const auto rows = layer_report(mnist_reference_spec().layers, 28, 28, 1, 6);
    std::ostringstream a, b;
    emit_cycles_csv(rows, a);
    emit_cycles_csv(rows, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("layer,windows,batches,cycles_per_batch,compute,feed_modeled,"
                       "feed_literal") != std::string::npos);
    CHECK(a.str().find("# note:") != std::string::npos);

    std::ostringstream j;
    emit_cycles_json(rows, j);
    CHECK(j.str().find("\"schema_version\": 1") != std::string::npos);
    CHECK(j.str().find("\"notes\"") != std::string::npos);
}
