#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/rng.hpp"

namespace gg::nn {

// Dense row-major tensor of 64-bit floats. Everything in the pipeline runs
// in double precision; gradient-check fidelity matters more than speed at
// the 16^3 scale this project works at.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size()) {
            throw std::invalid_argument("tensor data size " + std::to_string(data.size()) +
                                        " does not match shape " + shape_str(shape));
        }
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor dims must be positive, got " + shape_str(s));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& s) {
        std::string out = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

    static Tensor zeros(std::vector<int> s) {
        const std::size_t n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<int> s, double v) {
        const std::size_t n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(n, v));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    // Uniform in [-bound, bound]; used for parameter init.
    static Tensor uniform(std::vector<int> s, double bound, Rng& rng) {
        const std::size_t n = numel_of(s);
        std::vector<double> d(n);
        for (auto& v : d) v = rng.uniform(-bound, bound);
        return Tensor(std::move(s), std::move(d));
    }

    std::size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace gg::nn
