#include "segrl/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segrl {
namespace {

template <typename T>
std::vector<double> log_softmax_impl(std::span<const T> logits) {
  if (logits.empty()) throw std::invalid_argument("log_softmax of empty logits");
  double max = -INFINITY;
  for (T x : logits) {
    if (!std::isfinite(static_cast<double>(x))) throw std::domain_error("categorical: non-finite logit");
    max = std::max(max, static_cast<double>(x));
  }
  double sum = 0.0;
  for (T x : logits) sum += std::exp(static_cast<double>(x) - max);
  const double log_z = max + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - log_z;
  return out;
}

}  // namespace

std::vector<double> log_softmax(std::span<const float> logits) { return log_softmax_impl(logits); }
std::vector<double> log_softmax(std::span<const double> logits) { return log_softmax_impl(logits); }

double categorical_entropy(std::span<const double> log_probs) {
  double h = 0.0;
  for (double lp : log_probs) {
    const double p = std::exp(lp);
    if (p > 0.0) h -= p * lp;
  }
  return h;
}

CategoricalSample categorical(std::span<const float> logits, Rng& rng) {
  const auto lp = log_softmax(logits);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  int action = static_cast<int>(lp.size()) - 1;
  double cdf = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    cdf += std::exp(lp[i]);
    if (u < cdf) {
      action = static_cast<int>(i);
      break;
    }
  }
  // Guard the tail: never return an action with zero probability.
  while (action > 0 && std::exp(lp[action]) == 0.0) --action;
  return {action, lp[action], categorical_entropy(lp)};
}

}  // namespace segrl
