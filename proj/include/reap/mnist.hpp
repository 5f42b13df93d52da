#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace reap {

struct MnistError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MnistSet {
    int count = 0;
    int rows = 0;
    int cols = 0;
    std::vector<float> images;         // count * rows * cols, scaled to [0,1]
    std::vector<std::uint8_t> labels;  // count entries, 0..9

    const float* image(int i) const { return &images[static_cast<std::size_t>(i) * rows * cols]; }
};

struct MnistData {
    MnistSet train;
    MnistSet test;
};

// IDX format, big-endian: images carry magic 0x00000803 then count/rows/cols,
// labels carry 0x00000801 then count.
MnistSet load_idx_pair(const std::string& images_path, const std::string& labels_path);

// Loads train-images-idx3-ubyte / train-labels-idx1-ubyte /
// t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte from `dir`.
MnistData load_mnist(const std::string& dir);

}  // namespace reap
