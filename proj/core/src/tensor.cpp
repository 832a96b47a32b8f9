#include "obslab/tensor.hpp"

#include <cstring>
#include <sstream>

namespace obslab {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.values.assign(shape_product(shape), 0.0);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill) {
    Tensor t;
    t.values.assign(shape_product(shape), fill);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::row(std::vector<double> vals) {
    Tensor t;
    t.shape = {1, vals.size()};
    t.values = std::move(vals);
    return t;
}

Tensor Tensor::vec(std::vector<double> vals) {
    Tensor t;
    t.shape = {vals.size()};
    t.values = std::move(vals);
    return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> vals) {
    if (shape_product(shape) != vals.size())
        raise(ErrorCode::invalid_input, "tensor shape/value length mismatch");
    Tensor t;
    t.shape = std::move(shape);
    t.values = std::move(vals);
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) raise(ErrorCode::invalid_input, "rows() on non-matrix tensor " + shape_str(*this));
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) raise(ErrorCode::invalid_input, "cols() on non-matrix tensor " + shape_str(*this));
    return shape[1];
}

std::span<const double> Tensor::row_span(std::size_t i) const {
    const std::size_t c = cols();
    return {values.data() + i * c, c};
}

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != numel())
        raise(ErrorCode::invalid_input, "reshape changes element count");
    Tensor t;
    t.shape = std::move(new_shape);
    t.values = values;
    return t;
}

bool Tensor::all_finite() const noexcept {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::bitwise_equal(const Tensor& other) const noexcept {
    if (shape != other.shape) return false;
    if (values.size() != other.values.size()) return false;
    return std::memcmp(values.data(), other.values.data(), values.size() * sizeof(double)) == 0;
}

std::string shape_str(const Tensor& t) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
        if (i) os << "x";
        os << t.shape[i];
    }
    os << "]";
    return os.str();
}

void ensure_finite(const Tensor& t, const char* context) {
    if (!t.all_finite())
        raise(ErrorCode::invalid_input, std::string("non-finite value in ") + context);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) raise(ErrorCode::invalid_input, "max_abs_diff shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::fabs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace obslab
