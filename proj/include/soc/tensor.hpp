#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "soc/common.hpp"

namespace soc {

// Dense row-major tensor of float (training default) or double (test mode).
template <typename Real>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, Real fill = Real(0))
        : shape_(std::move(shape)),
          data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                                std::multiplies<>()),
                fill) {}

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    Real* data() { return data_.data(); }
    const Real* data() const { return data_.data(); }

    Real& operator[](std::size_t i) { return data_[i]; }
    Real operator[](std::size_t i) const { return data_[i]; }

    Real& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    Real operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    Real& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    Real operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (Real v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void require_finite(const std::string& what) const {
        if (!all_finite()) throw numeric_error("non-finite value in " + what);
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<Real> data_;
};

// A trainable tensor paired with its gradient accumulator. `frozen_begin /
// frozen_end` mark a flat index range whose elements never train (the pad
// embedding row); gradients there are forced to zero after every backward
// pass and the gradient checker skips them.
template <typename Real>
struct Parameter {
    Tensor<Real> value;
    Tensor<Real> grad;
    std::size_t frozen_begin = 0;
    std::size_t frozen_end = 0;

    Parameter() = default;
    explicit Parameter(std::vector<std::size_t> shape)
        : value(shape), grad(std::move(shape)) {}

    void zero_grad() { grad.fill(Real(0)); }

    void mask_frozen() {
        for (std::size_t i = frozen_begin; i < frozen_end; ++i) grad[i] = Real(0);
    }
};

template <typename Real>
std::string shape_string(const Tensor<Real>& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (i) s += ",";
        s += std::to_string(t.shape()[i]);
    }
    return s + ")";
}

}  // namespace soc
