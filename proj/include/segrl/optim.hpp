#pragma once

#include <cstdint>

#include "segrl/tensor.hpp"

namespace segrl {

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-5;
  std::int64_t step = 0;
  ParamList<T> m;  // first moments, shaped like the parameters
  ParamList<T> v;  // second moments

  AdamState() = default;
  explicit AdamState(const ParamList<T>& params) : m(zeros_like(params)), v(zeros_like(params)) {}
};

// Bias-corrected Adam with eps outside the square root:
//   p -= lr * m_hat / (sqrt(v_hat) + eps)
// Throws if any gradient is non-finite, naming the parameter; in that case
// nothing is modified.
template <typename T>
void adam_step(ParamList<T>& params, const ParamList<T>& grads, AdamState<T>& state, double lr);

template <typename T>
double global_grad_norm(const ParamList<T>& grads);

// Scales grads in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParamList<T>& grads, double max_norm);

}  // namespace segrl
