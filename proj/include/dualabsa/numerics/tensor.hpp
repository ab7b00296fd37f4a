#pragma once

#include <Eigen/Dense>

#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dualabsa/errors.hpp"

namespace dualabsa {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

inline Index element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

/// Dense row-major array. Storage is a matrix whose column count is the last
/// dimension and whose row count is the product of the leading dimensions, so
/// an n x n x h grid is an (n*n) x h matrix.
template <typename Scalar>
class Tensor {
 public:
  using Matrix = MatrixX<Scalar>;

  Tensor() : Tensor(Shape{1}) {}

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape();
    data_ = Matrix::Zero(rows(), cols());
  }

  Tensor(Shape shape, Matrix data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.rows() != rows() || data_.cols() != cols())
      throw DimensionError("tensor data " + std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()) +
                           " does not fit shape " + to_string(shape_));
  }

  /// Two-dimensional tensor adopting the matrix's shape.
  static Tensor from_matrix(Matrix data) {
    Shape shape{data.rows(), data.cols()};
    return Tensor(std::move(shape), std::move(data));
  }

  static Tensor vector(std::initializer_list<Scalar> values) {
    Matrix m(1, static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar v : values) m(0, i++) = v;
    Shape shape{m.cols()};
    return Tensor(std::move(shape), std::move(m));
  }

  static Tensor scalar(Scalar value) {
    Matrix m(1, 1);
    m(0, 0) = value;
    return Tensor(Shape{1}, std::move(m));
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return element_count(shape_); }
  Index cols() const { return shape_.back(); }
  Index rows() const { return size() / cols(); }

  Matrix& matrix() { return data_; }
  const Matrix& matrix() const { return data_; }

  std::span<Scalar> values() { return {data_.data(), static_cast<std::size_t>(data_.size())}; }
  std::span<const Scalar> values() const { return {data_.data(), static_cast<std::size_t>(data_.size())}; }

  Scalar item() const {
    if (size() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape_));
    return data_(0, 0);
  }

  bool all_finite() const { return data_.allFinite(); }

  Tensor reshaped(Shape shape) const {
    if (element_count(shape) != size())
      throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    Tensor out(std::move(shape));
    std::copy(data_.data(), data_.data() + size(), out.data_.data());
    return out;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  void check_shape() const {
    if (shape_.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (Index d : shape_)
      if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape_));
  }

  Shape shape_;
  Matrix data_;
};

}  // namespace dualabsa
