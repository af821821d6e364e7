#pragma once

#include <optional>
#include <vector>

#include "segrl/rng.hpp"
#include "segrl/tensor.hpp"

namespace segrl {

struct ConvSpec {
  int out_channels;
  int kernel;
  int stride;
};

// Geometry of the policy/value network: valid-padding convolutions, each
// followed by ReLU, then one ReLU dense layer feeding a logits head and a
// scalar value head.
struct NetArch {
  int in_channels = 4;
  int in_height = 84;
  int in_width = 84;
  std::vector<ConvSpec> convs{{32, 8, 4}, {64, 4, 2}, {64, 3, 1}};
  int hidden = 512;
  int actions = 0;

  // 3 conv + 2 dense layers over a 4x84x84 stack; flattens 7x7x64.
  static NetArch atari(int actions);

  // Spatial size after each conv layer, {height, width}; throws if the
  // geometry collapses below 1x1.
  std::vector<std::pair<int, int>> conv_output_sizes() const;
  int flat_features() const;
  void validate() const;
};

template <typename T>
struct NetOutput {
  BasicTensor<T> logits;  // [B, actions]
  BasicTensor<T> values;  // [B]
};

// Parameters are stored in a fixed order:
//   conv{i}.weight [out, in, k, k], conv{i}.bias [out]  for every conv layer
//   fc.weight [hidden, flat], fc.bias [hidden]
//   policy.weight [actions, hidden], policy.bias [actions]
//   value.weight [1, hidden], value.bias [1]
// A freshly constructed net has all-zero parameters.
template <typename T>
class PolicyValueNet {
 public:
  explicit PolicyValueNet(NetArch arch);

  const NetArch& arch() const { return arch_; }
  ParamList<T>& params() { return params_; }
  const ParamList<T>& params() const { return params_; }
  BasicTensor<T>& param(const std::string& name);
  std::size_t parameter_count() const;

  // obs: [B, C, H, W]. Caches what backward needs.
  NetOutput<T> forward(const BasicTensor<T>& obs);

  // Gradients of sum(dlogits * logits) + sum(dvalues * values) with respect
  // to every parameter, for the batch of the immediately preceding forward.
  // Consumes the cache.
  ParamList<T> backward(const BasicTensor<T>& dlogits, const BasicTensor<T>& dvalues);

  // On/off state of every ReLU unit in the last forward pass.
  std::vector<bool> relu_pattern() const;

  template <typename U>
  PolicyValueNet<U> cast() const {
    PolicyValueNet<U> out(arch_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.params()[i].value = params_[i].value.template cast<U>();
    }
    return out;
  }

 private:
  struct Cache {
    int batch = 0;
    std::vector<std::vector<T>> cols;        // per conv layer: B x [C*k*k, P]
    std::vector<BasicTensor<T>> conv_out;    // per conv layer, post-ReLU
    BasicTensor<T> hidden;                   // [B, hidden], post-ReLU
  };

  NetArch arch_;
  ParamList<T> params_;
  std::optional<Cache> cache_;
};

// Orthogonal matrix [rows, cols] scaled by gain, from the QR factorization of
// a standard-normal draw (sign-corrected so the result is unique).
template <typename T>
BasicTensor<T> orthogonal_init(int rows, int cols, double gain, Rng& rng);

// Orthogonal weights with gain sqrt(2) for hidden layers, 0.01 for the
// policy head and 1 for the value head; zero biases.
template <typename T>
void initialize(PolicyValueNet<T>& net, Rng& rng);

PolicyValueNet<float> make_policy_value_net(const NetArch& arch, Rng& rng);

extern template class PolicyValueNet<float>;
extern template class PolicyValueNet<double>;

}  // namespace segrl
