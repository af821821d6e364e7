#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "segrl/env.hpp"
#include "segrl/nn.hpp"
#include "segrl/rng.hpp"

namespace segrl::testing {

// Direct nested-loop evaluation of the policy/value net, no im2col, no GEMM.
NetOutput<double> reference_forward(const PolicyValueNet<double>& net, const BasicTensor<double>& obs);

// Recursive 4-connected flood fill over identical colors, labels in
// row-major first-encounter order.
std::vector<std::uint32_t> flood_fill_labels(const Image& image);

// True if both labelings induce the same partition of the pixels.
bool same_partition(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

// A_t = sum_k (gamma*lambda)^k delta_{t+k}, truncated at the first done.
std::vector<double> gae_expansion(const std::vector<double>& rewards, const std::vector<double>& values,
                                  const std::vector<double>& dones, double bootstrap, double gamma, double lambda);

struct GradCheckResult {
  int instances = 0;
  long coordinates = 0;       // parameter entries compared
  long skipped = 0;           // entries whose +-h probe flipped a ReLU
  double max_rel_error = 0.0; // |a - n| / max(|a|, |n|, 1e-6)
};

// Central differences of L = sum(g_logits * logits) + sum(g_values * values)
// against backward(), in double, on random tiny nets. Within one ReLU
// pattern the net is multilinear in each parameter, so the difference
// quotient is exact up to rounding; probes that change the pattern are
// skipped.
GradCheckResult finite_difference_check(int instances, std::uint64_t seed, double h = 1e-5);

// Random image drawn from `colors` distinct colors.
Image random_image(int width, int height, int colors, Rng& rng);

// Environment that plays back scripted rewards and renders a frame from a
// callback of the frame counter. Terminates after the script runs out.
class ScriptedEnv final : public Env {
 public:
  using Painter = std::function<Frame(int)>;
  ScriptedEnv(std::vector<double> rewards, int actions = 3, Painter painter = {});

  Frame reset(std::optional<std::uint64_t> seed = std::nullopt) override;
  StepResult step(int action) override;
  int action_count() const override { return actions_; }
  std::string id() const override { return "Scripted-v0"; }

  const std::vector<int>& actions_seen() const { return actions_seen_; }
  int resets() const { return resets_; }

 private:
  Frame paint() const;

  std::vector<double> rewards_;
  int actions_;
  Painter painter_;
  int t_ = 0;
  int resets_ = 0;
  std::vector<int> actions_seen_;
};

// Frame whose pixels encode the counter, so consecutive frames differ.
Frame counter_frame(int counter);

}  // namespace segrl::testing
