#include "spda/tensor.hpp"

#include <cmath>
#include <sstream>

namespace spda {

long shape_numel(const Shape& shape) {
  long n = 1;
  for (long d : shape) {
    if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  values_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_numel(shape_) != static_cast<long>(values_.size()))
    throw DimensionError("value count " + std::to_string(values_.size()) +
                         " does not match shape " + shape_str(shape_));
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor({static_cast<long>(values.size())}, std::vector<double>(values));
}

namespace {

long flat_index(const Shape& shape, std::initializer_list<long> idx) {
  if (idx.size() != shape.size())
    throw DimensionError("index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                         std::to_string(shape.size()));
  long flat = 0;
  size_t i = 0;
  for (long v : idx) {
    if (v < 0 || v >= shape[i])
      throw DimensionError("index out of range in dim " + std::to_string(i));
    flat = flat * shape[i] + v;
    ++i;
  }
  return flat;
}

}  // namespace

double& Tensor::at(std::initializer_list<long> idx) {
  return values_[static_cast<size_t>(flat_index(shape_, idx))];
}

double Tensor::at(std::initializer_list<long> idx) const {
  return values_[static_cast<size_t>(flat_index(shape_, idx))];
}

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double value) {
  for (auto& v : values_) v = value;
}

}  // namespace spda
