#include "segrl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segrl {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
BasicTensor<T>::BasicTensor(std::vector<int> shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(std::vector<int> shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
  }
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
ParamList<T> zeros_like(const ParamList<T>& params) {
  ParamList<T> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back({p.name, BasicTensor<T>(p.value.shape())});
  return out;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template ParamList<float> zeros_like(const ParamList<float>&);
template ParamList<double> zeros_like(const ParamList<double>&);

}  // namespace segrl
