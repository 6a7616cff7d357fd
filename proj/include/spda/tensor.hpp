#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "spda/errors.hpp"

namespace spda {

using Shape = std::vector<long>;

long shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of 64-bit floats.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  /// 1-D tensor from a braced list; handy in tests.
  static Tensor row(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  long size() const { return static_cast<long>(values_.size()); }
  long dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& operator[](long i) { return values_[static_cast<size_t>(i)]; }
  double operator[](long i) const { return values_[static_cast<size_t>(i)]; }

  /// Row-major multi-index access (bounds unchecked beyond the rank).
  double& at(std::initializer_list<long> idx);
  double at(std::initializer_list<long> idx) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double value);
  void zero() { fill(0.0); }

  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }

 private:
  Shape shape_;
  std::vector<double> values_;
};

}  // namespace spda
