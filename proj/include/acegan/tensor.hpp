#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "acegan/errors.hpp"

namespace acegan {

// Dense n-dimensional array of 64-bit floats, row-major, with an optional
// gradient buffer of the same shape.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty unless allocated

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel()), 0.0);
    }
    Tensor(std::vector<int64_t> s, double fill) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel()), fill);
    }

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return n;
    }

    int64_t dim(size_t i) const { return shape.at(i); }
    size_t rank() const { return shape.size(); }

    void alloc_grad() { grad.assign(data.size(), 0.0); }
    void zero_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
        else std::fill(grad.begin(), grad.end(), 0.0);
    }

    double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
    double at(int64_t i) const { return data[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const std::vector<int64_t>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

inline void require_shape(const Tensor& t, const std::vector<int64_t>& want,
                          const char* what) {
    if (t.shape != want)
        throw ShapeMismatch(std::string(what) + ": expected " + shape_str(want) +
                            ", got " + shape_str(t.shape));
}

}  // namespace acegan
