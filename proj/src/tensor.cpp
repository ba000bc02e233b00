#include "ktlab/tensor.hpp"

#include <cmath>
#include <numeric>

#include "ktlab/errors.hpp"

namespace ktlab {

namespace {
size_t shape_product(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) {
        n *= d;
    }
    return n;
}
} // namespace

Tensor::Tensor(std::vector<size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::initializer_list<size_t> shape)
    : Tensor(std::vector<size_t>(shape)) {}

Tensor Tensor::zeros(std::vector<size_t> shape) {
    return Tensor(std::move(shape));
}

Tensor Tensor::full(std::vector<size_t> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::from_values(std::vector<size_t> shape, std::vector<double> values) {
    if (shape_product(shape) != values.size()) {
        throw ConfigError("tensor: value count does not match shape");
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(values);
    return t;
}

void Tensor::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void Tensor::add_inplace(const Tensor& other) {
    if (!same_shape(other)) {
        throw NumericError("tensor: add_inplace shape mismatch");
    }
    const double* src = other.data();
    double* dst = data();
    for (size_t i = 0; i < data_.size(); ++i) {
        dst[i] += src[i];
    }
}

} // namespace ktlab
