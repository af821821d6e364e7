#include "segrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "segrl/distributions.hpp"

namespace segrl {

void PpoHyper::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("GAE lambda must be in [0, 1]");
  if (!(clip_coef > 0.0)) throw std::invalid_argument("clip coefficient must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (num_steps < 1) throw std::invalid_argument("num-steps must be >= 1");
  if (num_minibatches < 1 || num_steps % num_minibatches != 0) {
    throw std::invalid_argument("num-minibatches must divide num-steps");
  }
  if (update_epochs < 1) throw std::invalid_argument("update-epochs must be >= 1");
  if (total_timesteps < 1) throw std::invalid_argument("total-timesteps must be >= 1");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("max grad norm must be positive");
}

RolloutBuffer collect_rollout(ObservationPipeline& env, PolicyValueNet<float>& net, int num_steps, Rng& rng,
                              const StepObserver& on_step) {
  if (!env.has_observation()) throw std::logic_error("collect_rollout: environment was never reset");
  if (num_steps < 1) throw std::invalid_argument("collect_rollout: num_steps must be >= 1");
  const auto& obs_shape = env.observation().shape();
  const std::size_t obs_size = env.observation().size();

  RolloutBuffer buf;
  buf.num_steps = num_steps;
  std::vector<int> shape{num_steps};
  shape.insert(shape.end(), obs_shape.begin(), obs_shape.end());
  buf.obs = Tensor(shape);

  std::vector<int> single{1};
  single.insert(single.end(), obs_shape.begin(), obs_shape.end());
  for (int t = 0; t < num_steps; ++t) {
    const Tensor& current = env.observation();
    std::copy(current.values().begin(), current.values().end(), buf.obs.data() + t * obs_size);
    Tensor batch(single, std::vector<float>(current.values().begin(), current.values().end()));
    const NetOutput<float> out = net.forward(batch);
    const CategoricalSample sample = categorical(out.logits.values(), rng);

    PipelineStep step = env.step(sample.action);
    buf.actions.push_back(sample.action);
    buf.log_probs.push_back(static_cast<float>(sample.log_prob));
    buf.values.push_back(out.values[0]);
    buf.rewards.push_back(static_cast<float>(step.reward));
    buf.dones.push_back(step.done() ? 1.0f : 0.0f);
    if (step.episode) buf.episodes.push_back({t, *step.episode});
    if (on_step) on_step(env, t);
    if (step.done()) env.reset();
  }
  const Tensor& last = env.observation();
  Tensor batch(single, std::vector<float>(last.values().begin(), last.values().end()));
  buf.bootstrap_value = net.forward(batch).values[0];
  return buf;
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<double>& dones, double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("compute_gae: sequence lengths differ");
  GaeResult r{std::vector<double>(n), std::vector<double>(n)};
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = i + 1 < n ? values[i + 1] : bootstrap_value;
    const double live = 1.0 - dones[i];
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    next_adv = delta + gamma * lambda * live * next_adv;
    r.advantages[i] = next_adv;
    r.returns[i] = next_adv + values[i];
  }
  return r;
}

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda) {
  const auto to_d = [](const std::vector<float>& v) { return std::vector<double>(v.begin(), v.end()); };
  const GaeResult r =
      compute_gae(to_d(buffer.rewards), to_d(buffer.values), to_d(buffer.dones), buffer.bootstrap_value, gamma, lambda);
  buffer.advantages.assign(r.advantages.begin(), r.advantages.end());
  buffer.returns.assign(r.returns.begin(), r.returns.end());
}

std::vector<double> normalize_advantages(const std::vector<double>& adv) {
  const std::size_t n = adv.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(n);
  double sq = 0.0;
  for (double a : adv) sq += (a - mean) * (a - mean);
  const double std = std::sqrt(sq / static_cast<double>(n - 1));
  if (std < 1e-8) return out;
  for (std::size_t i = 0; i < n; ++i) out[i] = (adv[i] - mean) / (std + 1e-8);
  return out;
}

Tensor gather_obs(const RolloutBuffer& buffer, const std::vector<int>& indices) {
  std::vector<int> shape = buffer.obs.shape();
  const std::size_t per = buffer.obs.size() / static_cast<std::size_t>(shape[0]);
  shape[0] = static_cast<int>(indices.size());
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const float* src = buffer.obs.data() + static_cast<std::size_t>(indices[i]) * per;
    std::copy(src, src + per, out.data() + i * per);
  }
  return out;
}

LossGrads ppo_loss(const NetOutput<float>& out, const RolloutBuffer& buffer, const std::vector<int>& indices,
                   const PpoHyper& hyper) {
  const int B = static_cast<int>(indices.size());
  const int A = out.logits.dim(1);
  const double inv_b = 1.0 / B;
  const double eps = hyper.clip_coef;

  std::vector<double> adv(B);
  for (int i = 0; i < B; ++i) adv[i] = buffer.advantages[indices[i]];
  if (hyper.norm_adv) adv = normalize_advantages(adv);

  LossGrads g{{}, Tensor({B, A}), Tensor({B})};
  MinibatchStats& s = g.stats;
  int clipped = 0;
  for (int i = 0; i < B; ++i) {
    const int idx = indices[i];
    const std::span<const float> logits(out.logits.data() + static_cast<std::size_t>(i) * A, A);
    const auto lp = log_softmax(logits);
    const double entropy = categorical_entropy(lp);
    const int action = buffer.actions[idx];
    const double logratio = lp[action] - buffer.log_probs[idx];
    const double ratio = std::exp(logratio);
    s.ratios.push_back(ratio);

    s.approx_kl += ((ratio - 1.0) - logratio) * inv_b;
    if (std::abs(ratio - 1.0) > eps) ++clipped;

    const double clamped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double unclipped_term = -adv[i] * ratio;
    const double clipped_term = -adv[i] * clamped;
    s.policy_loss += std::max(unclipped_term, clipped_term) * inv_b;
    s.entropy += entropy * inv_b;

    // d(policy loss)/d(log pi(a)): gradient flows only through the selected
    // branch, and the clipped branch is constant outside [1-eps, 1+eps].
    double dlogp = 0.0;
    if (unclipped_term >= clipped_term || clamped == ratio) dlogp = -adv[i] * ratio * inv_b;

    float* dl = g.dlogits.data() + static_cast<std::size_t>(i) * A;
    for (int j = 0; j < A; ++j) {
      const double p = std::exp(lp[j]);
      const double onehot = j == action ? 1.0 : 0.0;
      // d log pi(a) / d logit_j = onehot - p_j ; d H / d logit_j = -p_j (log p_j + H)
      const double d_entropy = -p * (lp[j] + entropy);
      dl[j] = static_cast<float>(dlogp * (onehot - p) - hyper.ent_coef * inv_b * d_entropy);
    }

    const double v = out.values[i];
    const double ret = buffer.returns[idx];
    const double old_v = buffer.values[idx];
    double dv = 0.0;
    if (hyper.clip_vloss) {
      const double v_clip = old_v + std::clamp(v - old_v, -eps, eps);
      const double lu = (v - ret) * (v - ret);
      const double lc = (v_clip - ret) * (v_clip - ret);
      s.value_loss += 0.5 * std::max(lu, lc) * inv_b;
      if (lu >= lc) {
        dv = 2.0 * (v - ret);
      } else if (std::abs(v - old_v) < eps) {
        dv = 2.0 * (v_clip - ret);
      }
    } else {
      s.value_loss += 0.5 * (v - ret) * (v - ret) * inv_b;
      dv = 2.0 * (v - ret);
    }
    g.dvalues[i] = static_cast<float>(hyper.vf_coef * 0.5 * dv * inv_b);
  }
  s.clip_fraction = static_cast<double>(clipped) / B;
  return g;
}

UpdateStats ppo_update(PolicyValueNet<float>& net, AdamState<float>& adam, const RolloutBuffer& buffer,
                       const PpoHyper& hyper, double lr, Rng& rng) {
  hyper.validate();
  if (!buffer.has_advantages()) throw std::logic_error("ppo_update: advantages not computed");
  if (buffer.num_steps % hyper.num_minibatches != 0) {
    throw std::invalid_argument("ppo_update: num-minibatches must divide the rollout length");
  }
  const int mb_size = buffer.num_steps / hyper.num_minibatches;
  std::vector<int> order(buffer.num_steps);
  UpdateStats stats;
  double clip_sum = 0.0;
  for (int epoch = 0; epoch < hyper.update_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < buffer.num_steps; start += mb_size) {
      const std::vector<int> idx(order.begin() + start, order.begin() + start + mb_size);
      const NetOutput<float> out = net.forward(gather_obs(buffer, idx));
      LossGrads lg = ppo_loss(out, buffer, idx, hyper);
      MinibatchStats& s = lg.stats;
      const double total = s.policy_loss - hyper.ent_coef * s.entropy + hyper.vf_coef * s.value_loss;
      if (!std::isfinite(total)) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss (policy " << s.policy_loss << ", value " << s.value_loss << ", entropy "
            << s.entropy << ", approx_kl " << s.approx_kl << ") at epoch " << epoch << " minibatch " << start / mb_size;
        throw std::domain_error(msg.str());
      }
      ParamList<float> grads = net.backward(lg.dlogits, lg.dvalues);
      s.grad_norm = clip_grad_norm(grads, hyper.max_grad_norm);
      adam_step(net.params(), grads, adam, lr);
      clip_sum += s.clip_fraction;
      stats.minibatches.push_back(std::move(s));
    }
  }
  const MinibatchStats& last = stats.minibatches.back();
  stats.policy_loss = last.policy_loss;
  stats.value_loss = last.value_loss;
  stats.entropy = last.entropy;
  stats.approx_kl = last.approx_kl;
  stats.clip_fraction = clip_sum / static_cast<double>(stats.minibatches.size());
  return stats;
}

}  // namespace segrl
