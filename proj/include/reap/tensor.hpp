#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <vector>

namespace reap {

// Dense row-major tensor in master precision (float for production nets,
// double for gradient-check instantiations).
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(element_count(shape), T{0});
    }

    static std::size_t element_count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) n *= static_cast<std::size_t>(d);
        return n;
    }

    std::size_t size() const { return data.size(); }
    T* begin() { return data.data(); }
    T* end() { return data.data() + data.size(); }
    const T* begin() const { return data.data(); }
    const T* end() const { return data.data() + data.size(); }
    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace reap
