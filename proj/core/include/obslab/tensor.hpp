#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "obslab/error.hpp"

namespace obslab {

/// Dense row-major tensor of 64-bit floats. All analysis and optimization
/// runs in double precision; 32-bit floats appear only inside checkpoint
/// files.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double fill);
    static Tensor row(std::vector<double> vals);                       // shape {1, n}
    static Tensor vec(std::vector<double> vals);                       // shape {n}
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> vals);

    std::size_t numel() const noexcept { return values.size(); }
    std::size_t rank() const noexcept { return shape.size(); }

    std::size_t rows() const;
    std::size_t cols() const;

    double& at(std::size_t i) { return values[i]; }
    double at(std::size_t i) const { return values[i]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }

    double* data() noexcept { return values.data(); }
    const double* data() const noexcept { return values.data(); }

    std::span<const double> row_span(std::size_t i) const;

    Tensor reshape(std::vector<std::size_t> new_shape) const;

    bool all_finite() const noexcept;
    bool same_shape(const Tensor& other) const noexcept { return shape == other.shape; }
    bool bitwise_equal(const Tensor& other) const noexcept;
};

std::string shape_str(const Tensor& t);

inline bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
    return a.bitwise_equal(b);
}

/// Validation pass: non-finite values are a contract violation everywhere in
/// the engine.
void ensure_finite(const Tensor& t, const char* context);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace obslab
