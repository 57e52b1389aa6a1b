#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace uid {

// Dense row-major tensor of doubles. Only 1-D and 2-D shapes are used in
// practice; rows()/cols() treat a 1-D tensor as a single row.
struct Tensor {
    std::vector<long> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<long> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != static_cast<long>(data.size()))
            throw std::invalid_argument("tensor: data size does not match shape " + shape_str());
    }

    static Tensor zeros(std::vector<long> s) {
        const long n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    }
    static Tensor full(std::vector<long> s, double v) {
        const long n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), v));
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    long numel() const { return static_cast<long>(data.size()); }
    long rows() const { return shape.size() == 2 ? shape[0] : 1; }
    long cols() const { return shape.empty() ? 0 : shape.back(); }

    double& at(long r, long c) { return data[static_cast<std::size_t>(r * cols() + c)]; }
    double at(long r, long c) const { return data[static_cast<std::size_t>(r * cols() + c)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    static long numel_of(const std::vector<long>& s) {
        long n = 1;
        for (long d : s) {
            if (d < 0) throw std::invalid_argument("tensor: negative dimension");
            n *= d;
        }
        return s.empty() ? 0 : n;
    }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace uid
