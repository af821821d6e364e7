#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "segrl/nn.hpp"
#include "segrl/optim.hpp"
#include "segrl/pipeline.hpp"
#include "segrl/rng.hpp"

namespace segrl {

struct PpoHyper {
  double clip_coef = 0.25;
  double learning_rate = 2.5e-3;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int update_epochs = 2;
  int num_minibatches = 8;
  int num_steps = 128;
  double vf_coef = 0.5;
  double ent_coef = 0.01;
  double max_grad_norm = 0.5;
  long total_timesteps = 20000;
  bool norm_adv = true;
  bool anneal_lr = true;
  bool clip_vloss = true;

  void validate() const;
};

struct EpisodeRecord {
  int step_index = 0;  // index within the rollout of the step that ended it
  EpisodeStats stats;
};

struct RolloutBuffer {
  int num_steps = 0;
  Tensor obs;                    // [T, C, 84, 84]
  std::vector<int> actions;
  std::vector<float> log_probs;
  std::vector<float> rewards;    // as seen by the learner (clipped if enabled)
  std::vector<float> values;
  std::vector<float> dones;      // 1 if the episode ended on this step
  float bootstrap_value = 0.0f;  // V of the state after the last step
  std::vector<EpisodeRecord> episodes;

  std::vector<float> advantages;  // filled by compute_advantages
  std::vector<float> returns;

  bool has_advantages() const { return advantages.size() == static_cast<std::size_t>(num_steps); }
};

// Called after every agent step, before any auto-reset, with the step index.
using StepObserver = std::function<void(const ObservationPipeline&, int)>;

// Runs the policy for num_steps agent steps, auto-resetting (without a seed)
// at episode ends. The environment must have been reset once.
RolloutBuffer collect_rollout(ObservationPipeline& env, PolicyValueNet<float>& net, int num_steps, Rng& rng,
                              const StepObserver& on_step = {});

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
// A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// with V_T = bootstrap; returns = A + V.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<double>& dones, double bootstrap_value, double gamma, double lambda);

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda);

struct MinibatchStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  std::vector<double> ratios;
};

struct UpdateStats {
  // Losses, entropy and KL of the final minibatch; clip fraction averaged
  // over every minibatch of the update.
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::vector<MinibatchStats> minibatches;
};

// Clipped-surrogate update: update_epochs passes over a fresh permutation
// (drawn from rng) split into num_minibatches chunks; each chunk takes one
// Adam step at learning rate lr after global-norm gradient clipping.
UpdateStats ppo_update(PolicyValueNet<float>& net, AdamState<float>& adam, const RolloutBuffer& buffer,
                       const PpoHyper& hyper, double lr, Rng& rng);

// Loss and the gradients it induces on the logits/values heads for one
// minibatch evaluated at `out`. Exposed so the update can be checked
// against independent reference computations.
struct LossGrads {
  MinibatchStats stats;
  Tensor dlogits;  // [B, A]
  Tensor dvalues;  // [B]
};

LossGrads ppo_loss(const NetOutput<float>& out, const RolloutBuffer& buffer, const std::vector<int>& indices,
                   const PpoHyper& hyper);

// Mean 0, unbiased std 1 normalization; all-zero when std < 1e-8.
std::vector<double> normalize_advantages(const std::vector<double>& adv);

Tensor gather_obs(const RolloutBuffer& buffer, const std::vector<int>& indices);

}  // namespace segrl
