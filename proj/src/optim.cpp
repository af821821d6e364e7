#include "segrl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace segrl {
namespace {

template <typename T>
void check_layout(const ParamList<T>& a, const ParamList<T>& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": parameter count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].value.shape() != b[i].value.shape()) {
      throw std::invalid_argument(std::string(what) + ": shape mismatch for " + a[i].name + " " +
                                  shape_string(a[i].value.shape()) + " vs " + shape_string(b[i].value.shape()));
    }
  }
}

}  // namespace

template <typename T>
void adam_step(ParamList<T>& params, const ParamList<T>& grads, AdamState<T>& state, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
  if (state.m.empty() && state.v.empty()) {
    state.m = zeros_like(params);
    state.v = zeros_like(params);
  }
  check_layout(params, grads, "adam_step");
  check_layout(params, state.m, "adam_step");
  for (const auto& g : grads) {
    if (!g.value.all_finite()) throw std::domain_error("adam_step: non-finite gradient in " + g.name);
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i].value.data();
    const T* g = grads[i].value.data();
    T* m = state.m[i].value.data();
    T* v = state.v[i].value.data();
    for (std::size_t j = 0; j < params[i].value.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

template <typename T>
double global_grad_norm(const ParamList<T>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (T x : g.value.values()) sq += static_cast<double>(x) * x;
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_grad_norm(ParamList<T>& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  const double coef = max_norm / (norm + 1e-6);
  if (coef < 1.0) {
    for (auto& g : grads) {
      for (T& x : g.value.values()) x = static_cast<T>(x * coef);
    }
  }
  return norm;
}

template void adam_step<float>(ParamList<float>&, const ParamList<float>&, AdamState<float>&, double);
template void adam_step<double>(ParamList<double>&, const ParamList<double>&, AdamState<double>&, double);
template double global_grad_norm<float>(const ParamList<float>&);
template double global_grad_norm<double>(const ParamList<double>&);
template double clip_grad_norm<float>(ParamList<float>&, double);
template double clip_grad_norm<double>(ParamList<double>&, double);

}  // namespace segrl
