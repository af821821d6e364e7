#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace segrl::testing {

NetOutput<double> reference_forward(const PolicyValueNet<double>& net, const BasicTensor<double>& obs) {
  const NetArch& arch = net.arch();
  const auto& params = net.params();
  const int B = obs.dim(0);
  NetOutput<double> out{BasicTensor<double>({B, arch.actions}), BasicTensor<double>({B})};
  for (int b = 0; b < B; ++b) {
    int c = arch.in_channels, h = arch.in_height, w = arch.in_width;
    std::vector<double> x(obs.data() + static_cast<std::size_t>(b) * c * h * w,
                          obs.data() + static_cast<std::size_t>(b + 1) * c * h * w);
    for (std::size_t l = 0; l < arch.convs.size(); ++l) {
      const ConvSpec& s = arch.convs[l];
      const auto& W = params[2 * l].value;
      const auto& bias = params[2 * l + 1].value;
      const int oh = (h - s.kernel) / s.stride + 1, ow = (w - s.kernel) / s.stride + 1;
      std::vector<double> y(static_cast<std::size_t>(s.out_channels) * oh * ow);
      for (int o = 0; o < s.out_channels; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            double acc = bias[o];
            for (int i = 0; i < c; ++i) {
              for (int ky = 0; ky < s.kernel; ++ky) {
                for (int kx = 0; kx < s.kernel; ++kx) {
                  acc += W[((static_cast<std::size_t>(o) * c + i) * s.kernel + ky) * s.kernel + kx] *
                         x[(static_cast<std::size_t>(i) * h + oy * s.stride + ky) * w + ox * s.stride + kx];
                }
              }
            }
            y[(static_cast<std::size_t>(o) * oh + oy) * ow + ox] = acc > 0 ? acc : 0;
          }
        }
      }
      x = std::move(y);
      c = s.out_channels;
      h = oh;
      w = ow;
    }
    const auto dense = [](const BasicTensor<double>& W, const BasicTensor<double>& bias, const std::vector<double>& in,
                          bool relu) {
      std::vector<double> r(W.dim(0));
      for (int i = 0; i < W.dim(0); ++i) {
        double acc = bias[i];
        for (int j = 0; j < W.dim(1); ++j) acc += W[static_cast<std::size_t>(i) * W.dim(1) + j] * in[j];
        r[i] = relu && acc < 0 ? 0 : acc;
      }
      return r;
    };
    const std::size_t base = 2 * arch.convs.size();
    const auto hidden = dense(params[base].value, params[base + 1].value, x, true);
    const auto logits = dense(params[base + 2].value, params[base + 3].value, hidden, false);
    const auto value = dense(params[base + 4].value, params[base + 5].value, hidden, false);
    for (int a = 0; a < arch.actions; ++a) out.logits[static_cast<std::size_t>(b) * arch.actions + a] = logits[a];
    out.values[b] = value[0];
  }
  return out;
}

namespace {

void fill(const Image& img, std::vector<std::uint32_t>& labels, int x, int y, std::uint32_t label) {
  const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
  labels[i] = label;
  const std::uint8_t* c = img.at(x, y);
  const int dx[] = {1, -1, 0, 0};
  const int dy[] = {0, 0, 1, -1};
  for (int d = 0; d < 4; ++d) {
    const int nx = x + dx[d], ny = y + dy[d];
    if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
    if (labels[static_cast<std::size_t>(ny) * img.width + nx] != 0) continue;
    const std::uint8_t* n = img.at(nx, ny);
    if (n[0] == c[0] && n[1] == c[1] && n[2] == c[2]) fill(img, labels, nx, ny, label);
  }
}

}  // namespace

std::vector<std::uint32_t> flood_fill_labels(const Image& image) {
  std::vector<std::uint32_t> labels(image.pixel_count(), 0);
  std::uint32_t next = 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (labels[static_cast<std::size_t>(y) * image.width + x] == 0) fill(image, labels, x, y, ++next);
    }
  }
  return labels;
}

bool same_partition(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.size() != b.size()) return false;
  std::map<std::uint32_t, std::uint32_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

std::vector<double> gae_expansion(const std::vector<double>& rewards, const std::vector<double>& values,
                                  const std::vector<double>& dones, double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? values[t + 1] : bootstrap;
    delta[t] = rewards[t] + gamma * next * (1.0 - dones[t]) - values[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += weight * delta[k];
      if (dones[k] != 0.0) break;
      weight *= gamma * lambda;
    }
  }
  return adv;
}

namespace {

double probe_loss(PolicyValueNet<double>& net, const BasicTensor<double>& obs, const BasicTensor<double>& gl,
                  const BasicTensor<double>& gv, std::vector<bool>* pattern) {
  const auto out = net.forward(obs);
  double l = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) l += gl[i] * out.logits[i];
  for (std::size_t i = 0; i < gv.size(); ++i) l += gv[i] * out.values[i];
  if (pattern) *pattern = net.relu_pattern();
  return l;
}

}  // namespace

GradCheckResult finite_difference_check(int instances, std::uint64_t seed, double h) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<NetArch> shapes = [] {
    NetArch a;
    a.in_channels = 2, a.in_height = 16, a.in_width = 16;
    a.convs = {{3, 4, 2}, {4, 3, 2}, {4, 2, 1}};
    a.hidden = 8, a.actions = 3;
    NetArch b;
    b.in_channels = 1, b.in_height = 9, b.in_width = 11;
    b.convs = {{2, 3, 2}, {3, 2, 1}};
    b.hidden = 6, b.actions = 4;
    NetArch c;
    c.in_channels = 3, c.in_height = 12, c.in_width = 12;
    c.convs = {{4, 4, 4}};
    c.hidden = 5, c.actions = 2;
    return std::vector<NetArch>{a, b, c};
  }();

  GradCheckResult result;
  for (int n = 0; n < instances; ++n) {
    const NetArch& arch = shapes[n % shapes.size()];
    PolicyValueNet<double> net(arch);
    initialize(net, rng);
    for (auto& p : net.params()) {
      for (auto& v : p.value.values()) v += 0.1 * normal(rng);
    }
    const int B = 1 + n % 3;
    BasicTensor<double> obs({B, arch.in_channels, arch.in_height, arch.in_width});
    for (auto& v : obs.values()) v = unit(rng);
    BasicTensor<double> gl({B, arch.actions});
    BasicTensor<double> gv({B});
    for (auto& v : gl.values()) v = normal(rng);
    for (auto& v : gv.values()) v = normal(rng);

    std::vector<bool> base_pattern;
    probe_loss(net, obs, gl, gv, &base_pattern);
    const ParamList<double> grads = net.backward(gl, gv);
    for (std::size_t p = 0; p < net.params().size(); ++p) {
      auto& value = net.params()[p].value;
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double saved = value[i];
        std::vector<bool> plus_pattern, minus_pattern;
        value[i] = saved + h;
        const double lp = probe_loss(net, obs, gl, gv, &plus_pattern);
        value[i] = saved - h;
        const double lm = probe_loss(net, obs, gl, gv, &minus_pattern);
        value[i] = saved;
        if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
          ++result.skipped;
          continue;
        }
        const double numeric = (lp - lm) / (2 * h);
        const double analytic = grads[p].value[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
        ++result.coordinates;
      }
    }
    ++result.instances;
  }
  return result;
}

Image random_image(int width, int height, int colors, Rng& rng) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::array<std::uint8_t, 3>> palette(colors);
  for (auto& c : palette) {
    for (auto& ch : c) ch = static_cast<std::uint8_t>(byte(rng));
  }
  std::uniform_int_distribution<int> pick(0, colors - 1);
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto& c = palette[pick(rng)];
      img.set(x, y, c[0], c[1], c[2]);
    }
  }
  return img;
}

ScriptedEnv::ScriptedEnv(std::vector<double> rewards, int actions, Painter painter)
    : rewards_(std::move(rewards)), actions_(actions), painter_(std::move(painter)) {}

Frame ScriptedEnv::paint() const { return painter_ ? painter_(t_) : counter_frame(t_); }

Frame ScriptedEnv::reset(std::optional<std::uint64_t>) {
  t_ = 0;
  ++resets_;
  return paint();
}

StepResult ScriptedEnv::step(int action) {
  if (t_ >= static_cast<int>(rewards_.size())) throw EnvError("scripted env: step after termination");
  actions_seen_.push_back(action);
  const double r = rewards_[t_++];
  return {paint(), r, t_ == static_cast<int>(rewards_.size()), false};
}

Frame counter_frame(int counter) {
  Frame f(kFrameWidth, kFrameHeight);
  const int x = (counter * 8) % (kFrameWidth - 8);
  f.fill_rect(x, 100, 8, 8, 255, 255, 255);
  f.fill_rect(0, 0, 4, 4, static_cast<std::uint8_t>(counter * 37), 0, 0);
  return f;
}

}  // namespace segrl::testing
