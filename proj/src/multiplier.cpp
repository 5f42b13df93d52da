#include "reap/multiplier.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace reap {

namespace {

void validate_width(int width) {
    if (width < 2 || width > 16)
        throw MultConfigError("multiplier width must be in [2,16], got " +
                              std::to_string(width));
}

void validate_trunc(int width, int trunc) {
    if (trunc < 1 || trunc > width)
        throw MultConfigError("truncation width must be in [1," +
                              std::to_string(width) + "], got " +
                              std::to_string(trunc));
}

// Mitchell logarithmic product, log2(1+x) ~ x, on operands whose mantissas
// keep `trunc` bits below the leading one. MitchellTrunc drops the rest;
// DR-ALM compensates the truncation by rounding to nearest (ties to even)
// at the cut, which keeps power-of-two operands exact.
std::uint64_t log_multiply(std::uint32_t a, std::uint32_t b, int width, int trunc,
                           bool compensate) {
    const int fb = width - 1;  // fixed-point fraction bits of the log mantissa

    auto log_approx = [&](std::uint32_t x) -> std::uint64_t {
        const int k = std::bit_width(x) - 1;  // leading-one position
        std::uint32_t frac = x & ((1u << k) - 1u);
        if (k > trunc) {
            const int cut = k - trunc;
            std::uint32_t kept = frac >> cut;
            if (compensate) {
                const bool guard = (frac >> (cut - 1)) & 1u;
                const bool rest = cut >= 2 && (frac & ((1u << (cut - 1)) - 1u)) != 0;
                if (guard && (rest || (kept & 1u))) ++kept;
            }
            frac = kept << cut;
        }
        // A carry out of the mantissa field folds into the characteristic here.
        return (static_cast<std::uint64_t>(k) << fb) +
               (static_cast<std::uint64_t>(frac) << (fb - k));
    };

    const std::uint64_t lsum = log_approx(a) + log_approx(b);
    const int character = static_cast<int>(lsum >> fb);
    const std::uint64_t mantissa = lsum & ((std::uint64_t{1} << fb) - 1);

    const std::uint64_t antilog = (std::uint64_t{1} << fb) | mantissa;
    std::uint64_t p = character >= fb ? antilog << (character - fb)
                                      : antilog >> (fb - character);
    const std::uint64_t cap = (std::uint64_t{1} << (2 * width)) - 1;
    return std::min(p, cap);
}

}  // namespace

const char* mult_kind_name(MultKind k) {
    switch (k) {
        case MultKind::Exact: return "exact";
        case MultKind::MitchellTrunc: return "mitchell";
        case MultKind::DrAlm: return "dr-alm";
        case MultKind::Lut: return "lut";
    }
    return "?";
}

std::string MultiplierSpec::describe() const {
    std::string s = mult_kind_name(kind);
    s += "(w=" + std::to_string(width);
    if (kind == MultKind::MitchellTrunc || kind == MultKind::DrAlm)
        s += ",t=" + std::to_string(trunc);
    if (kind == MultKind::Lut) s += "," + lut_path;
    s += ")";
    return s;
}

MultiplierSpec make_exact(int width) {
    validate_width(width);
    return MultiplierSpec{MultKind::Exact, width, width, {}, nullptr};
}

MultiplierSpec make_mitchell(int width, int trunc) {
    validate_width(width);
    validate_trunc(width, trunc);
    return MultiplierSpec{MultKind::MitchellTrunc, width, trunc, {}, nullptr};
}

MultiplierSpec make_dralm(int width, int trunc) {
    validate_width(width);
    validate_trunc(width, trunc);
    return MultiplierSpec{MultKind::DrAlm, width, trunc, {}, nullptr};
}

MultiplierSpec make_multiplier(const std::string& kind, int width, int trunc,
                               const std::string& lut_path) {
    if (kind == "exact") return make_exact(width);
    if (kind == "mitchell") return make_mitchell(width, trunc);
    if (kind == "dr-alm" || kind == "dralm") return make_dralm(width, trunc);
    if (kind == "lut") {
        if (lut_path.empty()) throw MultConfigError("lut multiplier requires a table path");
        return load_lut(lut_path);
    }
    throw MultConfigError("unknown multiplier kind '" + kind + "'");
}

std::uint64_t multiply(const MultiplierSpec& spec, std::uint32_t a, std::uint32_t b) {
    assert(a < (1u << spec.width) && b < (1u << spec.width));
    if (a == 0 || b == 0) return 0;
    switch (spec.kind) {
        case MultKind::Exact:
            return static_cast<std::uint64_t>(a) * b;
        case MultKind::MitchellTrunc:
            return log_multiply(a, b, spec.width, spec.trunc, false);
        case MultKind::DrAlm:
            return log_multiply(a, b, spec.width, spec.trunc, true);
        case MultKind::Lut:
            return spec.lut->lookup(a, b);
    }
    return 0;
}

std::uint64_t exact_oracle(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint64_t>(a) * b;
}

MultiplierSpec load_lut(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MultConfigError("cannot open LUT file: " + path);

    struct Row {
        std::uint32_t a, b;
        std::uint64_t product;
        int line;
    };
    std::vector<Row> rows;
    std::uint32_t max_operand = 0;

    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            std::string h = line;
            h.erase(std::remove_if(h.begin(), h.end(),
                                   [](char c) { return c == ' ' || c == '\r'; }),
                    h.end());
            if (h != "a,b,product")
                throw MultConfigError(path + ":" + std::to_string(lineno) +
                                      ": expected header 'a,b,product'");
            header_seen = true;
            continue;
        }
        std::uint64_t a = 0, b = 0, p = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(line);
        if (!(ss >> a >> c1 >> b >> c2 >> p) || c1 != ',' || c2 != ',')
            throw MultConfigError(path + ":" + std::to_string(lineno) +
                                  ": malformed row '" + line + "'");
        rows.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), p,
                        lineno});
        max_operand = std::max({max_operand, static_cast<std::uint32_t>(a),
                                static_cast<std::uint32_t>(b)});
    }
    if (!header_seen) throw MultConfigError(path + ": empty LUT file");

    int width = std::max(1, static_cast<int>(std::bit_width(max_operand)));
    if (width > 12)
        throw MultConfigError(path + ": inferred width " + std::to_string(width) +
                              " exceeds the supported LUT maximum of 12");

    auto table = std::make_shared<LutTable>();
    table->width = width;
    const std::size_t entries = std::size_t{1} << (2 * width);
    table->products.assign(entries, 0);
    std::vector<std::uint8_t> seen(entries, 0);
    const std::uint64_t cap = (std::uint64_t{1} << (2 * width)) - 1;

    for (const Row& r : rows) {
        if (r.a > cap || r.b > cap)  // cannot happen given width inference
            throw MultConfigError(path + ":" + std::to_string(r.line) + ": operand out of range");
        if (r.product > cap)
            throw MultConfigError(path + ":" + std::to_string(r.line) + ": product " +
                                  std::to_string(r.product) + " exceeds " +
                                  std::to_string(cap) + " for width " +
                                  std::to_string(width));
        const std::size_t idx = (static_cast<std::size_t>(r.a) << width) | r.b;
        if (seen[idx])
            throw MultConfigError(path + ":" + std::to_string(r.line) +
                                  ": duplicate entry (" + std::to_string(r.a) + "," +
                                  std::to_string(r.b) + ")");
        seen[idx] = 1;
        table->products[idx] = static_cast<std::uint32_t>(r.product);
    }
    for (std::uint32_t a = 0; a < (1u << width); ++a)
        for (std::uint32_t b = 0; b < (1u << width); ++b)
            if (!seen[(static_cast<std::size_t>(a) << width) | b])
                throw MultConfigError(path + ": missing entry (" + std::to_string(a) +
                                      "," + std::to_string(b) + ")");

    MultiplierSpec spec;
    spec.kind = MultKind::Lut;
    spec.width = width;
    spec.lut_path = path;
    spec.lut = std::move(table);
    return spec;
}

void dump_lut(const MultiplierSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MultConfigError("cannot write LUT file: " + path);
    out << "a,b,product\n";
    for (std::uint32_t a = 0; a < (1u << spec.width); ++a)
        for (std::uint32_t b = 0; b < (1u << spec.width); ++b)
            out << a << ',' << b << ',' << multiply(spec, a, b) << '\n';
    if (!out) throw MultConfigError("write failed: " + path);
}

}  // namespace reap
