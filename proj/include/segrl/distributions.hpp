#pragma once

#include <span>
#include <vector>

#include "segrl/rng.hpp"

namespace segrl {

struct CategoricalSample {
  int action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Max-subtracted log-softmax.
std::vector<double> log_softmax(std::span<const float> logits);
std::vector<double> log_softmax(std::span<const double> logits);

double categorical_entropy(std::span<const double> log_probs);

// Draws one action from softmax(logits) by inverse-CDF on a single uniform.
CategoricalSample categorical(std::span<const float> logits, Rng& rng);

}  // namespace segrl
