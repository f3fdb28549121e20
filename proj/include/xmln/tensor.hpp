#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace xmln {

// Dense row-major f64 tensor. Rank 1 ({n}) and rank 2 ({rows, cols}) cover
// everything the models need; a scalar is shape {1}.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape_)
        : shape(std::move(shape_)), data(static_cast<size_t>(count(shape)), 0.0) {}

    static int64_t count(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) n *= d;
        return n;
    }

    static Tensor scalar(double v) {
        Tensor t({1});
        t.data[0] = v;
        return t;
    }

    static Tensor zeros(std::vector<int64_t> shape_) { return Tensor(std::move(shape_)); }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int64_t rows() const { return shape.empty() ? 0 : shape[0]; }
    int64_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

} // namespace xmln
