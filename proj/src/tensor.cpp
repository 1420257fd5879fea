#include "atinuke/tensor.hpp"

#include <cmath>
#include <sstream>

#include "atinuke/errors.hpp"

namespace atinuke {

std::size_t shape_product(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << ")";
    return os.str();
}

namespace {
void check_shape(const Shape& s) {
    if (s.empty() || s.size() > 4)
        throw ShapeError("tensor rank must be 1..4, got " + shape_str(s));
    for (std::size_t e : s)
        if (e == 0) throw ShapeError("tensor extents must be >= 1, got " + shape_str(s));
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_product(shape_) != data_.size())
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(shape_));
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = value;
    return t;
}

std::size_t Tensor::flat_index(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.size())
        throw IndexError("index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                         std::to_string(shape_.size()));
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) {
        if (i >= shape_[axis])
            throw IndexError("index " + std::to_string(i) + " out of range for axis " +
                             std::to_string(axis) + " of " + shape_str(shape_));
        flat = flat * shape_[axis] + i;
        ++axis;
    }
    return flat;
}

double& Tensor::at(std::initializer_list<std::size_t> idx) { return data_[flat_index(idx)]; }
double Tensor::at(std::initializer_list<std::size_t> idx) const { return data_[flat_index(idx)]; }

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

IntTensor::IntTensor(Shape s, std::vector<std::int64_t> d) : shape(std::move(s)), data(std::move(d)) {
    check_shape(shape);
    if (shape_product(shape) != data.size())
        throw ShapeError("int data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
}

}  // namespace atinuke
