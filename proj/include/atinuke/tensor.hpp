#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace atinuke {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense row-major array of f64 with explicit shape, rank 1..4.
/// The single value carrier for every kernel in the engine.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> data);

    static Tensor full(Shape shape, double value);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }
    static Tensor scalar(double value) { return Tensor({1}, {value}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::initializer_list<std::size_t> idx);
    double at(std::initializer_list<std::size_t> idx) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    std::size_t flat_index(std::initializer_list<std::size_t> idx) const;

    Shape shape_;
    std::vector<double> data_;
};

/// Integer companion for token ids, positions and targets.
struct IntTensor {
    Shape shape;
    std::vector<std::int64_t> data;

    IntTensor() = default;
    IntTensor(Shape s, std::vector<std::int64_t> d);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t extent(std::size_t axis) const { return shape.at(axis); }
};

}  // namespace atinuke
