#include "reap/mnist.hpp"

#include <fstream>

namespace reap {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MnistError("cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(buf.data()), size);
    if (!in) throw MnistError("read failed: " + path);
    return buf;
}

std::uint32_t be32(const std::vector<std::uint8_t>& buf, std::size_t off,
                   const std::string& path) {
    if (off + 4 > buf.size())
        throw MnistError(path + ": truncated header (need " + std::to_string(off + 4) +
                         " bytes, have " + std::to_string(buf.size()) + ")");
    return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) |
           (std::uint32_t{buf[off + 2]} << 8) | std::uint32_t{buf[off + 3]};
}

}  // namespace

MnistSet load_idx_pair(const std::string& images_path, const std::string& labels_path) {
    const auto ibuf = read_all(images_path);
    const std::uint32_t imagic = be32(ibuf, 0, images_path);
    if (imagic != kImageMagic) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "bad magic number 0x%08x (expected 0x%08x)",
                      imagic, kImageMagic);
        throw MnistError(images_path + ": " + msg);
    }
    const std::uint32_t count = be32(ibuf, 4, images_path);
    const std::uint32_t rows = be32(ibuf, 8, images_path);
    const std::uint32_t cols = be32(ibuf, 12, images_path);
    const std::size_t expect = 16 + static_cast<std::size_t>(count) * rows * cols;
    if (ibuf.size() != expect)
        throw MnistError(images_path + ": expected " + std::to_string(expect) +
                         " bytes, got " + std::to_string(ibuf.size()));

    const auto lbuf = read_all(labels_path);
    const std::uint32_t lmagic = be32(lbuf, 0, labels_path);
    if (lmagic != kLabelMagic) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "bad magic number 0x%08x (expected 0x%08x)",
                      lmagic, kLabelMagic);
        throw MnistError(labels_path + ": " + msg);
    }
    const std::uint32_t lcount = be32(lbuf, 4, labels_path);
    if (lbuf.size() != 8 + static_cast<std::size_t>(lcount))
        throw MnistError(labels_path + ": expected " + std::to_string(8 + lcount) +
                         " bytes, got " + std::to_string(lbuf.size()));
    if (lcount != count)
        throw MnistError("image/label count mismatch: " + std::to_string(count) +
                         " images vs " + std::to_string(lcount) + " labels");

    MnistSet set;
    set.count = static_cast<int>(count);
    set.rows = static_cast<int>(rows);
    set.cols = static_cast<int>(cols);
    set.images.resize(static_cast<std::size_t>(count) * rows * cols);
    for (std::size_t i = 0; i < set.images.size(); ++i)
        set.images[i] = static_cast<float>(ibuf[16 + i]) / 255.0f;
    set.labels.assign(lbuf.begin() + 8, lbuf.end());
    for (std::uint8_t l : set.labels)
        if (l > 9) throw MnistError(labels_path + ": label value out of range");
    return set;
}

MnistData load_mnist(const std::string& dir) {
    MnistData d;
    d.train = load_idx_pair(dir + "/train-images-idx3-ubyte",
                            dir + "/train-labels-idx1-ubyte");
    d.test =
        load_idx_pair(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
    return d;
}

}  // namespace reap
