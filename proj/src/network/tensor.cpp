#include "tricam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "tricam/error.hpp"

namespace tricam::nn {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != numel(shape)) {
    throw Error(ErrorKind::kShapeMismatch, "tensor data length " + std::to_string(data.size()) +
                                               " does not match shape " + shape_str(shape));
  }
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace tricam::nn
