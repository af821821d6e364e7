#include "segrl/nn.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace segrl {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ConvGeom {
  int in_c, in_h, in_w;
  int out_c, k, stride;
  int out_h, out_w;
  int patch() const { return in_c * k * k; }
  int positions() const { return out_h * out_w; }
};

// cols is row-major [in_c*k*k, out_h*out_w].
template <typename T>
void im2col(const T* in, const ConvGeom& g, T* cols) {
  const int P = g.positions();
  for (int c = 0; c < g.in_c; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        T* row = cols + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * P;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const T* src = in + (static_cast<std::size_t>(c) * g.in_h + oy * g.stride + ky) * g.in_w + kx;
          T* dst = row + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) dst[ox] = src[ox * g.stride];
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& g, T* in) {
  const int P = g.positions();
  for (int c = 0; c < g.in_c; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const T* row = cols + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * P;
        for (int oy = 0; oy < g.out_h; ++oy) {
          T* dst = in + (static_cast<std::size_t>(c) * g.in_h + oy * g.stride + ky) * g.in_w + kx;
          const T* src = row + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) dst[ox * g.stride] += src[ox];
        }
      }
    }
  }
}

std::vector<ConvGeom> conv_geometry(const NetArch& arch) {
  std::vector<ConvGeom> out;
  int c = arch.in_channels, h = arch.in_height, w = arch.in_width;
  for (const auto& spec : arch.convs) {
    ConvGeom g{c, h, w, spec.out_channels, spec.kernel, spec.stride, 0, 0};
    g.out_h = (h - spec.kernel) / spec.stride + 1;
    g.out_w = (w - spec.kernel) / spec.stride + 1;
    out.push_back(g);
    c = g.out_c;
    h = g.out_h;
    w = g.out_w;
  }
  return out;
}

template <typename T>
void relu_inplace(T* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) p[i] = p[i] > T(0) ? p[i] : T(0);
}

template <typename T>
void relu_grad_inplace(T* grad, const T* activated, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(activated[i] > T(0))) grad[i] = T(0);
  }
}

// Fixed-order reductions; bit-identical wherever the buffers are allocated.
template <typename T>
void sum_columns(const T* m, int rows, int cols, T* out) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out[c] += m[static_cast<std::size_t>(r) * cols + c];
  }
}

template <typename T>
void sum_rows(const T* m, int rows, int cols, T* out) {
  for (int r = 0; r < rows; ++r) {
    T acc = T(0);
    for (int c = 0; c < cols; ++c) acc += m[static_cast<std::size_t>(r) * cols + c];
    out[r] += acc;
  }
}

std::size_t conv_weight_index(std::size_t layer) { return 2 * layer; }

}  // namespace

NetArch NetArch::atari(int actions) {
  NetArch arch;
  arch.actions = actions;
  return arch;
}

std::vector<std::pair<int, int>> NetArch::conv_output_sizes() const {
  std::vector<std::pair<int, int>> sizes;
  int h = in_height, w = in_width;
  for (const auto& spec : convs) {
    if (spec.kernel < 1 || spec.stride < 1 || spec.out_channels < 1) {
      throw std::invalid_argument("conv layer needs positive kernel, stride and channels");
    }
    if (h < spec.kernel || w < spec.kernel) {
      throw std::invalid_argument("conv kernel " + std::to_string(spec.kernel) + " larger than input " +
                                  std::to_string(h) + "x" + std::to_string(w));
    }
    h = (h - spec.kernel) / spec.stride + 1;
    w = (w - spec.kernel) / spec.stride + 1;
    sizes.emplace_back(h, w);
  }
  return sizes;
}

int NetArch::flat_features() const {
  auto [h, w] = conv_output_sizes().back();
  return convs.back().out_channels * h * w;
}

void NetArch::validate() const {
  if (in_channels < 1 || in_height < 1 || in_width < 1) throw std::invalid_argument("input geometry must be positive");
  if (hidden < 1) throw std::invalid_argument("hidden width must be positive");
  if (actions < 1) throw std::invalid_argument("action count must be positive");
  if (convs.empty()) throw std::invalid_argument("network needs at least one conv layer");
  conv_output_sizes();
}

template <typename T>
PolicyValueNet<T>::PolicyValueNet(NetArch arch) : arch_(std::move(arch)) {
  arch_.validate();
  int in_c = arch_.in_channels;
  for (std::size_t i = 0; i < arch_.convs.size(); ++i) {
    const auto& spec = arch_.convs[i];
    const std::string prefix = "conv" + std::to_string(i);
    params_.push_back({prefix + ".weight", BasicTensor<T>({spec.out_channels, in_c, spec.kernel, spec.kernel})});
    params_.push_back({prefix + ".bias", BasicTensor<T>({spec.out_channels})});
    in_c = spec.out_channels;
  }
  const int flat = arch_.flat_features();
  params_.push_back({"fc.weight", BasicTensor<T>({arch_.hidden, flat})});
  params_.push_back({"fc.bias", BasicTensor<T>({arch_.hidden})});
  params_.push_back({"policy.weight", BasicTensor<T>({arch_.actions, arch_.hidden})});
  params_.push_back({"policy.bias", BasicTensor<T>({arch_.actions})});
  params_.push_back({"value.weight", BasicTensor<T>({1, arch_.hidden})});
  params_.push_back({"value.bias", BasicTensor<T>({1})});
}

template <typename T>
BasicTensor<T>& PolicyValueNet<T>::param(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw std::out_of_range("no parameter named " + name);
}

template <typename T>
std::size_t PolicyValueNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
NetOutput<T> PolicyValueNet<T>::forward(const BasicTensor<T>& obs) {
  if (obs.rank() != 4 || obs.dim(0) < 1 || obs.dim(1) != arch_.in_channels || obs.dim(2) != arch_.in_height ||
      obs.dim(3) != arch_.in_width) {
    throw std::invalid_argument("net_forward expects observations of shape Bx" + std::to_string(arch_.in_channels) +
                                "x" + std::to_string(arch_.in_height) + "x" + std::to_string(arch_.in_width) +
                                ", got " + shape_string(obs.shape()));
  }
  cache_.reset();
  Cache cache;
  const int B = obs.dim(0);
  cache.batch = B;
  const auto geom = conv_geometry(arch_);

  const T* input = obs.data();
  for (std::size_t l = 0; l < geom.size(); ++l) {
    const ConvGeom& g = geom[l];
    const int K = g.patch(), P = g.positions();
    std::vector<T> cols(static_cast<std::size_t>(B) * K * P);
    BasicTensor<T> out({B, g.out_c, g.out_h, g.out_w});
    Eigen::Map<const RowMat<T>> weight(params_[conv_weight_index(l)].value.data(), g.out_c, K);
    Eigen::Map<const Vec<T>> bias(params_[conv_weight_index(l) + 1].value.data(), g.out_c);
    const std::size_t in_stride = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
    for (int b = 0; b < B; ++b) {
      T* c = cols.data() + static_cast<std::size_t>(b) * K * P;
      im2col(input + b * in_stride, g, c);
      Eigen::Map<const RowMat<T>> colmat(c, K, P);
      Eigen::Map<RowMat<T>> o(out.data() + static_cast<std::size_t>(b) * g.out_c * P, g.out_c, P);
      o.noalias() = weight * colmat;
      o.colwise() += bias;
    }
    relu_inplace(out.data(), out.size());
    cache.cols.push_back(std::move(cols));
    cache.conv_out.push_back(std::move(out));
    input = cache.conv_out.back().data();
  }

  const std::size_t base = 2 * geom.size();
  const int F = arch_.flat_features();
  Eigen::Map<const ColMat<T>> x(input, F, B);
  Eigen::Map<const RowMat<T>> fc_w(params_[base].value.data(), arch_.hidden, F);
  Eigen::Map<const Vec<T>> fc_b(params_[base + 1].value.data(), arch_.hidden);
  cache.hidden = BasicTensor<T>({B, arch_.hidden});
  Eigen::Map<ColMat<T>> h(cache.hidden.data(), arch_.hidden, B);
  h.noalias() = fc_w * x;
  h.colwise() += fc_b;
  relu_inplace(cache.hidden.data(), cache.hidden.size());

  Eigen::Map<const RowMat<T>> pi_w(params_[base + 2].value.data(), arch_.actions, arch_.hidden);
  Eigen::Map<const Vec<T>> pi_b(params_[base + 3].value.data(), arch_.actions);
  Eigen::Map<const RowMat<T>> v_w(params_[base + 4].value.data(), 1, arch_.hidden);
  const T v_b = params_[base + 5].value[0];

  NetOutput<T> result{BasicTensor<T>({B, arch_.actions}), BasicTensor<T>({B})};
  Eigen::Map<ColMat<T>> logits(result.logits.data(), arch_.actions, B);
  logits.noalias() = pi_w * h;
  logits.colwise() += pi_b;
  Eigen::Map<RowMat<T>> values(result.values.data(), 1, B);
  values.noalias() = v_w * h;
  values.array() += v_b;

  cache_ = std::move(cache);
  return result;
}

template <typename T>
ParamList<T> PolicyValueNet<T>::backward(const BasicTensor<T>& dlogits, const BasicTensor<T>& dvalues) {
  if (!cache_) throw std::logic_error("net_backward called without a preceding forward");
  Cache cache = std::move(*cache_);
  cache_.reset();
  const int B = cache.batch;
  if (dlogits.shape() != std::vector<int>{B, arch_.actions}) {
    throw std::invalid_argument("net_backward: logits gradient shape " + shape_string(dlogits.shape()) +
                                " does not match forward batch " + shape_string({B, arch_.actions}));
  }
  if (dvalues.shape() != std::vector<int>{B}) {
    throw std::invalid_argument("net_backward: value gradient shape " + shape_string(dvalues.shape()) +
                                " does not match forward batch " + shape_string({B}));
  }

  ParamList<T> grads = zeros_like(params_);
  const auto geom = conv_geometry(arch_);
  const std::size_t base = 2 * geom.size();
  const int F = arch_.flat_features();
  const int H = arch_.hidden;

  Eigen::Map<const ColMat<T>> dl(dlogits.data(), arch_.actions, B);
  Eigen::Map<const RowMat<T>> dv(dvalues.data(), 1, B);
  Eigen::Map<const ColMat<T>> h(cache.hidden.data(), H, B);

  Eigen::Map<RowMat<T>>(grads[base + 2].value.data(), arch_.actions, H).noalias() = dl * h.transpose();
  sum_columns(dlogits.data(), B, arch_.actions, grads[base + 3].value.data());
  Eigen::Map<RowMat<T>>(grads[base + 4].value.data(), 1, H).noalias() = dv * h.transpose();
  sum_columns(dvalues.data(), B, 1, grads[base + 5].value.data());

  Eigen::Map<const RowMat<T>> pi_w(params_[base + 2].value.data(), arch_.actions, H);
  Eigen::Map<const RowMat<T>> v_w(params_[base + 4].value.data(), 1, H);
  BasicTensor<T> dh_t({B, H});
  Eigen::Map<ColMat<T>> dh(dh_t.data(), H, B);
  dh.noalias() = pi_w.transpose() * dl;
  dh.noalias() += v_w.transpose() * dv;
  relu_grad_inplace(dh_t.data(), cache.hidden.data(), dh_t.size());

  Eigen::Map<const ColMat<T>> x(cache.conv_out.back().data(), F, B);
  Eigen::Map<RowMat<T>>(grads[base].value.data(), H, F).noalias() = dh * x.transpose();
  sum_columns(dh_t.data(), B, H, grads[base + 1].value.data());

  Eigen::Map<const RowMat<T>> fc_w(params_[base].value.data(), H, F);
  BasicTensor<T> dout({B, F});
  Eigen::Map<ColMat<T>>(dout.data(), F, B).noalias() = fc_w.transpose() * dh;

  for (std::size_t li = geom.size(); li-- > 0;) {
    const ConvGeom& g = geom[li];
    const int K = g.patch(), P = g.positions();
    relu_grad_inplace(dout.data(), cache.conv_out[li].data(), dout.size());

    Eigen::Map<const RowMat<T>> weight(params_[conv_weight_index(li)].value.data(), g.out_c, K);
    Eigen::Map<RowMat<T>> dw(grads[conv_weight_index(li)].value.data(), g.out_c, K);
    T* db = grads[conv_weight_index(li) + 1].value.data();

    BasicTensor<T> din;
    RowMat<T> dcols;
    if (li > 0) din = BasicTensor<T>({B, g.in_c, g.in_h, g.in_w});
    const std::size_t in_stride = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
    for (int b = 0; b < B; ++b) {
      Eigen::Map<const RowMat<T>> dob(dout.data() + static_cast<std::size_t>(b) * g.out_c * P, g.out_c, P);
      Eigen::Map<const RowMat<T>> colmat(cache.cols[li].data() + static_cast<std::size_t>(b) * K * P, K, P);
      dw.noalias() += dob * colmat.transpose();
      sum_rows(dob.data(), g.out_c, P, db);
      if (li > 0) {
        dcols.noalias() = weight.transpose() * dob;
        col2im_add(dcols.data(), g, din.data() + b * in_stride);
      }
    }
    if (li > 0) dout = std::move(din);
  }
  return grads;
}

template <typename T>
std::vector<bool> PolicyValueNet<T>::relu_pattern() const {
  if (!cache_) throw std::logic_error("relu_pattern requires a preceding forward");
  std::vector<bool> pattern;
  for (const auto& out : cache_->conv_out) {
    for (T v : out.values()) pattern.push_back(v > T(0));
  }
  for (T v : cache_->hidden.values()) pattern.push_back(v > T(0));
  return pattern;
}

template <typename T>
BasicTensor<T> orthogonal_init(int rows, int cols, double gain, Rng& rng) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("orthogonal_init needs rows, cols >= 1");
  const bool tall = rows >= cols;
  const int n = tall ? rows : cols;
  const int m = tall ? cols : rows;
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(m, m).template triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  q *= gain;
  BasicTensor<T> out({rows, cols});
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      out[static_cast<std::size_t>(i) * cols + j] = static_cast<T>(tall ? q(i, j) : q(j, i));
    }
  }
  return out;
}

template <typename T>
void initialize(PolicyValueNet<T>& net, Rng& rng) {
  const double hidden_gain = std::sqrt(2.0);
  for (auto& p : net.params()) {
    const auto& shape = p.value.shape();
    if (shape.size() == 1) {
      p.value.fill(T(0));
      continue;
    }
    const int rows = shape[0];
    const int cols = static_cast<int>(p.value.size() / rows);
    double gain = hidden_gain;
    if (p.name == "policy.weight") gain = 0.01;
    if (p.name == "value.weight") gain = 1.0;
    auto w = orthogonal_init<T>(rows, cols, gain, rng);
    p.value = BasicTensor<T>(shape, std::vector<T>(w.values().begin(), w.values().end()));
  }
}

PolicyValueNet<float> make_policy_value_net(const NetArch& arch, Rng& rng) {
  PolicyValueNet<float> net(arch);
  initialize(net, rng);
  return net;
}

template class PolicyValueNet<float>;
template class PolicyValueNet<double>;
template BasicTensor<float> orthogonal_init<float>(int, int, double, Rng&);
template BasicTensor<double> orthogonal_init<double>(int, int, double, Rng&);
template void initialize<float>(PolicyValueNet<float>&, Rng&);
template void initialize<double>(PolicyValueNet<double>&, Rng&);

}  // namespace segrl
