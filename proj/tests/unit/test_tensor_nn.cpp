#include <doctest.h>

#include <cmath>
#include <random>

#include "segrl/nn.hpp"
#include "support/oracles.hpp"

using namespace segrl;

namespace {

NetArch tiny_arch() {
  NetArch a;
  a.in_channels = 2;
  a.in_height = 16;
  a.in_width = 16;
  a.convs = {{3, 4, 2}, {4, 3, 2}, {4, 2, 1}};
  a.hidden = 8;
  a.actions = 3;
  return a;
}

template <typename T>
BasicTensor<T> random_obs(const NetArch& a, int batch, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BasicTensor<T> obs({batch, a.in_channels, a.in_height, a.in_width});
  for (auto& v : obs.values()) v = static_cast<T>(u(rng));
  return obs;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(t.dim(1) == 3);
  CHECK(shape_string(t.shape()) == "[2x3]");
  t[4] = std::nanf("");
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS(Tensor({2, 2}, std::vector<float>(3)));
}

TEST_CASE("atari geometry flattens to 7x7x64") {
  const NetArch a = NetArch::atari(3);
  const auto sizes = a.conv_output_sizes();
  REQUIRE(sizes.size() == 3);
  CHECK(sizes[0] == std::pair{20, 20});
  CHECK(sizes[1] == std::pair{9, 9});
  CHECK(sizes[2] == std::pair{7, 7});
  CHECK(a.flat_features() == 3136);
  PolicyValueNet<float> net(a);
  CHECK(net.parameter_count() == 8192 + 32 + 32768 + 64 + 36864 + 64 + 3136 * 512 + 512 + 3 * 512 + 3 + 512 + 1);
}

TEST_CASE("zero network: zero outputs, logits bias passes through") {
  PolicyValueNet<float> net(NetArch::atari(3));
  Rng rng(1);
  auto obs = random_obs<float>(net.arch(), 2, rng);
  auto out = net.forward(obs);
  CHECK(out.logits.shape() == std::vector<int>{2, 3});
  CHECK(out.values.shape() == std::vector<int>{2});
  for (float v : out.logits.values()) CHECK(v == 0.0f);
  for (float v : out.values.values()) CHECK(v == 0.0f);

  net.param("policy.bias") = Tensor({3}, std::vector<float>{0.5f, -1.0f, 2.0f});
  out = net.forward(obs);
  CHECK(out.logits[3] == 0.5f);
  CHECK(out.logits[4] == -1.0f);
  CHECK(out.logits[5] == 2.0f);
}

TEST_CASE("forward rejects wrong observation shape") {
  PolicyValueNet<float> net(NetArch::atari(3));
  CHECK_THROWS_WITH_AS(net.forward(Tensor({1, 3, 84, 84})), doctest::Contains("got [1x3x84x84]"),
                       std::invalid_argument);
}

TEST_CASE("forward matches the nested-loop reference") {
  Rng rng(7);
  const NetArch a = NetArch::atari(4);
  PolicyValueNet<float> net = make_policy_value_net(a, rng);
  for (auto& p : net.params()) {
    if (p.name.ends_with("bias")) {
      for (auto& v : p.value.values()) v = 0.05f;
    }
  }
  const auto obs = random_obs<float>(a, 2, rng);
  const auto out = net.forward(obs);
  const auto ref = testing::reference_forward(net.cast<double>(), obs.cast<double>());
  for (std::size_t i = 0; i < out.logits.size(); ++i) {
    CHECK(std::abs(out.logits[i] - ref.logits[i]) <= 1e-5 * std::max(1.0, std::abs(ref.logits[i])));
  }
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    CHECK(std::abs(out.values[i] - ref.values[i]) <= 1e-5 * std::max(1.0, std::abs(ref.values[i])));
  }
}

TEST_CASE("backward") {
  Rng rng(3);
  const NetArch a = tiny_arch();
  PolicyValueNet<double> net(a);
  initialize(net, rng);
  const auto obs = random_obs<double>(a, 2, rng);

  SUBCASE("requires a forward pass") { CHECK_THROWS_AS(net.backward(BasicTensor<double>({2, 3}), BasicTensor<double>({2})), std::logic_error); }

  SUBCASE("zero upstream gives zero gradients") {
    net.forward(obs);
    const auto grads = net.backward(BasicTensor<double>({2, 3}), BasicTensor<double>({2}));
    REQUIRE(grads.size() == net.params().size());
    for (const auto& g : grads) {
      CHECK(g.name == net.params()[&g - grads.data()].name);
      for (double v : g.value.values()) CHECK(v == 0.0);
    }
  }

  SUBCASE("head gradients are outer products with the hidden layer") {
    net.forward(obs);
    BasicTensor<double> dv({2});
    dv[1] = 1.0;
    const auto hidden_row = net.backward(BasicTensor<double>({2, 3}), dv);
    const auto& h1 = hidden_row[hidden_row.size() - 2].value;  // value.weight = h_1

    net.forward(obs);
    BasicTensor<double> dl({2, 3});
    dl[1 * 3 + 2] = 2.0;
    const auto grads = net.backward(dl, BasicTensor<double>({2}));
    const auto& pw = grads[grads.size() - 4].value;
    const auto& pb = grads[grads.size() - 3].value;
    CHECK(pb[2] == 2.0);
    CHECK(pb[0] == 0.0);
    for (int j = 0; j < a.hidden; ++j) {
      CHECK(pw[2 * a.hidden + j] == doctest::Approx(2.0 * h1[j]));
      CHECK(pw[0 * a.hidden + j] == 0.0);
    }
  }

  SUBCASE("consumes the cache") {
    net.forward(obs);
    net.backward(BasicTensor<double>({2, 3}), BasicTensor<double>({2}));
    CHECK_THROWS_AS(net.backward(BasicTensor<double>({2, 3}), BasicTensor<double>({2})), std::logic_error);
  }
}

TEST_CASE("analytic gradients agree with central differences") {
  const auto r = testing::finite_difference_check(6, 11);
  CHECK(r.instances == 6);
  CHECK(r.coordinates > 1000);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("batch rows are independent and evaluation is deterministic") {
  Rng rng(5);
  const NetArch a = tiny_arch();
  PolicyValueNet<float> net = make_policy_value_net(a, rng);
  const auto obs = random_obs<float>(a, 3, rng);
  const auto out = net.forward(obs);
  CHECK(net.forward(obs).logits == out.logits);

  const std::size_t per = obs.size() / 3;
  Tensor swapped(obs.shape());
  const int order[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i) {
    std::copy(obs.data() + order[i] * per, obs.data() + (order[i] + 1) * per, swapped.data() + i * per);
  }
  const auto out2 = net.forward(swapped);
  for (int i = 0; i < 3; ++i) {
    CHECK(out2.values[i] == out.values[order[i]]);
    for (int k = 0; k < 3; ++k) CHECK(out2.logits[i * 3 + k] == out.logits[order[i] * 3 + k]);
  }
}

TEST_CASE("orthogonal init") {
  Rng rng(9);
  SUBCASE("gain 0 is all zeros") {
    const auto w = orthogonal_init<double>(5, 7, 0.0, rng);
    for (double v : w.values()) CHECK(v == 0.0);
  }
  SUBCASE("square matrix is orthonormal") {
    const auto w = orthogonal_init<double>(4, 4, 1.0, rng);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 4; ++k) dot += w[i * 4 + k] * w[j * 4 + k];
        CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("tall matrix with gain sqrt(2) has Gram matrix 2I") {
    const auto w = orthogonal_init<float>(64, 16, std::sqrt(2.0), rng);
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 64; ++k) dot += double(w[k * 16 + i]) * w[k * 16 + j];
        worst = std::max(worst, std::abs(dot - (i == j ? 2.0 : 0.0)));
      }
    }
    CHECK(worst < 1e-4);
  }
  SUBCASE("same seed, same weights") {
    Rng a(4), b(4);
    CHECK(orthogonal_init<float>(8, 3, 1.0, a) == orthogonal_init<float>(8, 3, 1.0, b));
  }
}

TEST_CASE("initialize uses per-layer gains and zero biases") {
  Rng rng(2);
  PolicyValueNet<double> net(tiny_arch());
  initialize(net, rng);
  for (const auto& p : net.params()) {
    if (p.name.ends_with("bias")) {
      for (double v : p.value.values()) CHECK(v == 0.0);
    }
  }
  // value head is 1 x hidden with gain 1: a unit row.
  double norm = 0.0;
  for (double v : net.param("value.weight").values()) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
  double pnorm = 0.0;
  for (double v : net.param("policy.weight").values()) pnorm += v * v;
  CHECK(pnorm == doctest::Approx(3 * 0.01 * 0.01));
}
