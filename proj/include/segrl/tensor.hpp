#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace segrl {

// Dense row-major tensor. The training path uses float; double instances
// exist for gradient checking.
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;
  explicit BasicTensor(std::vector<int> shape, T fill = T(0));
  BasicTensor(std::vector<int> shape, std::vector<T> data);

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  void fill(T value);
  bool all_finite() const;

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

std::size_t shape_size(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

template <typename T>
struct NamedTensor {
  std::string name;
  BasicTensor<T> value;
};

// Parameter and gradient sets share this layout: same order, same names.
template <typename T>
using ParamList = std::vector<NamedTensor<T>>;

template <typename T>
ParamList<T> zeros_like(const ParamList<T>& params);

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace segrl
