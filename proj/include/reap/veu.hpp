#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reap/net_config.hpp"
#include "reap/pipeline.hpp"

namespace reap {

struct VeuError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One convolution/FC workload mapped onto N shared MAC lanes.
struct WorkloadSpec {
    int image_h = 28;
    int image_w = 28;
    int channels = 1;
    int kernel = 5;
    int stride = 1;
    int kernel_count = 1;
    int n_macs = 1;
    int pipeline_fill = kPipelineFillCycles;
    int axi_beats_per_mac = 3;  // input, weight, bias
    int regfile_depth = 32;     // 8-bit registers per operand per MAC
};

struct FeedCycles {
    std::uint64_t modeled = 0;        // axi_beats_per_mac * N per VEU execution
    std::uint64_t literal = 0;        // 3 * N * 256, the description's verbatim figure
};

struct CycleReport {
    std::string layer;
    bool modeled = true;  // false: off-chip stage, cycles not modeled
    std::uint64_t windows_per_kernel = 0;
    std::uint64_t batches = 0;
    std::uint64_t cycles_per_batch = 0;
    std::uint64_t compute_cycles = 0;  // kernel_count * batches * cycles_per_batch
    std::uint64_t feed_modeled = 0;
    std::uint64_t feed_literal = 0;
    std::uint64_t total = 0;  // compute + feed_modeled (no overlap scheduled)
    std::string note;

    // compute = kernel_count * batches * cycles_per_batch, and
    // batches*N >= windows > (batches-1)*N.
    bool self_consistent(std::uint64_t kernel_count, std::uint64_t n_macs) const;
};

CycleReport compute_cycles(const WorkloadSpec& spec);
FeedCycles feed_cycles(const WorkloadSpec& spec);

// Walks a network layer stack, mapping Conv2d directly and FullyConnected as
// a 1x1 convolution over its flattened inputs. Pooling and activations are
// reported as not-modeled rows (off-chip in this architecture). The returned
// list ends with a "total" row.
std::vector<CycleReport> layer_report(const std::vector<LayerDesc>& layers,
                                      int image_h, int image_w, int channels,
                                      int n_macs);

// Footnotes attached to every emitted report.
const std::vector<std::string>& veu_report_notes();

// CSV schema: layer,windows,batches,cycles_per_batch,compute,feed_modeled,feed_literal
void emit_cycles_csv(const std::vector<CycleReport>& rows, std::ostream& out);
void emit_cycles_json(const std::vector<CycleReport>& rows, std::ostream& out);
void emit_cycles_text(const std::vector<CycleReport>& rows, std::ostream& out);

}  // namespace reap
