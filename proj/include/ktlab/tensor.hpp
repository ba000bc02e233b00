#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace ktlab {

// Dense row-major array of 64-bit reals. The whole model is tiny, so there is
// no broadcasting, no views, no striding: shape + flat storage.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<size_t> shape);
    Tensor(std::initializer_list<size_t> shape);

    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, double value);
    static Tensor from_values(std::vector<size_t> shape, std::vector<double> values);

    const std::vector<size_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t dim(size_t i) const { return shape_[i]; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double& at(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
    double at(size_t i, size_t j) const { return data_[i * shape_[1] + j]; }

    double& at(size_t i, size_t j, size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(size_t i, size_t j, size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    void fill(double value);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    // elementwise accumulate; shapes must match
    void add_inplace(const Tensor& other);

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

} // namespace ktlab
