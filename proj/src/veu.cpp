#include "reap/veu.hpp"

#include <ostream>

#include <nlohmann/json.hpp>

namespace reap {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

void validate(const WorkloadSpec& s) {
    if (s.n_macs < 1) throw VeuError("MAC unit count must be >= 1");
    if (s.kernel_count < 1) throw VeuError("kernel count must be >= 1");
    if (s.image_h < 1 || s.image_w < 1 || s.channels < 1 || s.kernel < 1 || s.stride < 1)
        throw VeuError("workload dimensions must be positive");
    if (s.kernel > s.image_h)
        throw VeuError("kernel " + std::to_string(s.kernel) + " exceeds image height " +
                       std::to_string(s.image_h));
    if (s.kernel > s.image_w)
        throw VeuError("kernel " + std::to_string(s.kernel) + " exceeds image width " +
                       std::to_string(s.image_w));
    if ((s.image_h - s.kernel) % s.stride != 0)
        throw VeuError("image height " + std::to_string(s.image_h) +
                       " is not stride-aligned (kernel " + std::to_string(s.kernel) +
                       ", stride " + std::to_string(s.stride) + ")");
    if ((s.image_w - s.kernel) % s.stride != 0)
        throw VeuError("image width " + std::to_string(s.image_w) +
                       " is not stride-aligned (kernel " + std::to_string(s.kernel) +
                       ", stride " + std::to_string(s.stride) + ")");
}

}  // namespace

bool CycleReport::self_consistent(std::uint64_t kernel_count, std::uint64_t n_macs) const {
    if (!modeled) return compute_cycles == 0 && total == 0;
    if (compute_cycles != kernel_count * batches * cycles_per_batch) return false;
    if (batches * n_macs < windows_per_kernel) return false;
    if (batches > 0 && windows_per_kernel <= (batches - 1) * n_macs) return false;
    return total == compute_cycles + feed_modeled;
}

CycleReport compute_cycles(const WorkloadSpec& s) {
    validate(s);
    CycleReport r;
    const std::uint64_t wh = (s.image_h - s.kernel) / s.stride + 1;
    const std::uint64_t ww = (s.image_w - s.kernel) / s.stride + 1;
    r.windows_per_kernel = wh * ww;
    r.batches = ceil_div(r.windows_per_kernel, s.n_macs);
    r.cycles_per_batch = static_cast<std::uint64_t>(s.pipeline_fill) +
                         static_cast<std::uint64_t>(s.kernel) * s.kernel * s.channels;
    r.compute_cycles = static_cast<std::uint64_t>(s.kernel_count) * r.batches *
                       r.cycles_per_batch;
    const FeedCycles f = feed_cycles(s);
    const std::uint64_t executions = static_cast<std::uint64_t>(s.kernel_count) * r.batches;
    r.feed_modeled = f.modeled * executions;
    r.feed_literal = f.literal * executions;
    r.total = r.compute_cycles + r.feed_modeled;
    if (!r.self_consistent(s.kernel_count, s.n_macs))
        throw VeuError("cycle report failed self-consistency for layer geometry");
    return r;
}

FeedCycles feed_cycles(const WorkloadSpec& s) {
    if (s.n_macs < 1) throw VeuError("MAC unit count must be >= 1");
    FeedCycles f;
    // One 256-bit AXI beat fills one 32x8-bit register file.
    f.modeled = static_cast<std::uint64_t>(s.axi_beats_per_mac) * s.n_macs;
    f.literal = 3ull * s.n_macs * 256;
    return f;
}

std::vector<CycleReport> layer_report(const std::vector<LayerDesc>& layers, int image_h,
                                      int image_w, int channels, int n_macs) {
    if (n_macs < 1) throw VeuError("MAC unit count must be >= 1");
    std::vector<CycleReport> rows;
    if (layers.empty()) return rows;
    int h = image_h, w = image_w, c = channels;
    bool flattened = false;
    int features = 0;
    int index = 0;

    for (const LayerDesc& l : layers) {
        ++index;
        CycleReport r;
        switch (l.kind) {
            case LayerKind::Conv2d: {
                if (flattened) throw VeuError("conv2d after flattening at layer " +
                                              std::to_string(index));
                WorkloadSpec s;
                s.image_h = h;
                s.image_w = w;
                s.channels = c;
                s.kernel = l.kernel;
                s.stride = l.stride;
                s.kernel_count = l.out_ch;
                s.n_macs = n_macs;
                r = compute_cycles(s);
                r.layer = "conv" + std::to_string(index) + "_" + std::to_string(l.out_ch) +
                          "x" + std::to_string(l.kernel) + "x" + std::to_string(l.kernel);
                h = (h - l.kernel) / l.stride + 1;
                w = (w - l.kernel) / l.stride + 1;
                c = l.out_ch;
                break;
            }
            case LayerKind::FullyConnected: {
                if (!flattened) {
                    features = h * w * c;
                    flattened = true;
                }
                WorkloadSpec s;
                s.image_h = 1;
                s.image_w = 1;
                s.channels = features;
                s.kernel = 1;
                s.stride = 1;
                s.kernel_count = l.units;
                s.n_macs = n_macs;
                r = compute_cycles(s);
                r.layer = "fc" + std::to_string(index) + "_" + std::to_string(l.units);
                features = l.units;
                break;
            }
            case LayerKind::MaxPool:
                if (!flattened) {
                    h /= 2;
                    w /= 2;
                }
                r.layer = "maxpool" + std::to_string(index);
                r.modeled = false;
                r.note = "off-chip, not modeled";
                break;
            case LayerKind::Tanh:
                r.layer = "tanh" + std::to_string(index);
                r.modeled = false;
                r.note = "off-chip activation, not modeled";
                break;
            case LayerKind::Softmax:
                r.layer = "softmax" + std::to_string(index);
                r.modeled = false;
                r.note = "off-chip, not modeled";
                break;
        }
        rows.push_back(std::move(r));
    }

    CycleReport total;
    total.layer = "total";
    for (const auto& r : rows) {
        total.compute_cycles += r.compute_cycles;
        total.feed_modeled += r.feed_modeled;
        total.feed_literal += r.feed_literal;
        total.total += r.total;
    }
    rows.push_back(std::move(total));
    return rows;
}

const std::vector<std::string>& veu_report_notes() {
    static const std::vector<std::string> notes = {
        "feed_literal uses the architecture description's 3*N*256 figure verbatim, "
        "which conflicts with its own 3-cycles-per-MAC statement; feed_modeled is "
        "the per-register-file interpretation (one 256-bit beat per 32x8-bit file). "
        "Neither is silently corrected.",
        "per-kernel repetition keeps the cycles-per-batch factor (fill + K*K*C); the "
        "shorthand 'kernel_count x windows/N clock cycles' omits it.",
        "data feed and compute are reported separately; ping-pong overlap is not "
        "scheduled.",
    };
    return notes;
}

void emit_cycles_csv(const std::vector<CycleReport>& rows, std::ostream& out) {
    out << "# schema_version=1\n";
    for (const auto& n : veu_report_notes()) out << "# note: " << n << '\n';
    out << "layer,windows,batches,cycles_per_batch,compute,feed_modeled,feed_literal\n";
    for (const auto& r : rows) {
        out << r.layer << ',' << r.windows_per_kernel << ',' << r.batches << ','
            << r.cycles_per_batch << ',' << r.compute_cycles << ',' << r.feed_modeled
            << ',' << r.feed_literal << '\n';
    }
}

void emit_cycles_json(const std::vector<CycleReport>& rows, std::ostream& out) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    doc["notes"] = veu_report_notes();
    auto& arr = doc["layers"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["layer"] = r.layer;
        j["modeled"] = r.modeled;
        j["windows"] = r.windows_per_kernel;
        j["batches"] = r.batches;
        j["cycles_per_batch"] = r.cycles_per_batch;
        j["compute"] = r.compute_cycles;
        j["feed_modeled"] = r.feed_modeled;
        j["feed_literal"] = r.feed_literal;
        j["total"] = r.total;
        if (!r.note.empty()) j["note"] = r.note;
        arr.push_back(std::move(j));
    }
    out << doc.dump(2) << '\n';
}

void emit_cycles_text(const std::vector<CycleReport>& rows, std::ostream& out) {
    for (const auto& r : rows) {
        out << r.layer << ": ";
        if (!r.modeled && r.layer != "total") {
            out << r.note << '\n';
            continue;
        }
        out << "windows=" << r.windows_per_kernel << " batches=" << r.batches
            << " cycles/batch=" << r.cycles_per_batch << " compute=" << r.compute_cycles
            << " feed=" << r.feed_modeled << " (literal " << r.feed_literal
            << ") total=" << r.total << '\n';
    }
    for (const auto& n : veu_report_notes()) out << "note: " << n << '\n';
}

}  // namespace reap
