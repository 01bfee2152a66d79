#include "a3t/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "a3t/kernels.hpp"

namespace a3t {
namespace {

bool finite_span(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? z : 0.0;
    case Activation::Tanh:
      return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the pre-activation; ReLU'(0) = 0.
double activate_grad(Activation a, double z, double h) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh:
      return 1.0 - h * h;
  }
  return 1.0;
}

// Pre-activations and activations of every layer for one input.
struct Trace {
  std::vector<std::vector<double>> pre;   // pre[l]: output of layer l before activation
  std::vector<std::vector<double>> post;  // post[0] = x, post[l+1] = act(pre[l])
};

Trace run_forward(const ModelParams& model, std::span<const double> x) {
  require_dim(x.size(), model.spec.input_dim(), "input dimension");
  const std::size_t layers = model.spec.layer_count();
  Trace t;
  t.pre.resize(layers);
  t.post.resize(layers + 1);
  t.post[0].assign(x.begin(), x.end());
  const auto& k = kernels::active();
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = model.weights[l];
    const auto& in = t.post[l];
    auto& z = t.pre[l];
    z.resize(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      z[r] = k.dot(w.row(r).data(), in.data(), in.size()) + model.biases[l][r];
    }
    if (l + 1 < layers) {
      auto& h = t.post[l + 1];
      h.resize(z.size());
      for (std::size_t r = 0; r < z.size(); ++r) {
        h[r] = activate(model.spec.hidden_activation, z[r]);
      }
    } else {
      t.post[l + 1] = z;
    }
  }
  return t;
}

// Walks the trace backwards from dL/dlogits. Parameter gradients are
// written only when `out` has them sized.
std::vector<double> backprop(const ModelParams& model, const Trace& t,
                             std::vector<double> g, GradBundle* out) {
  const auto& k = kernels::active();
  for (std::size_t l = model.spec.layer_count(); l-- > 0;) {
    const Matrix& w = model.weights[l];
    const auto& in = t.post[l];
    if (out != nullptr) {
      Matrix& gw = out->weights[l];
      for (std::size_t r = 0; r < w.rows(); ++r) {
        k.axpy(g[r], in.data(), gw.row(r).data(), in.size());
      }
      std::copy(g.begin(), g.end(), out->biases[l].begin());
    }
    std::vector<double> gin(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      if (g[r] != 0.0) k.axpy(g[r], w.row(r).data(), gin.data(), gin.size());
    }
    if (l > 0) {
      const auto& z = t.pre[l - 1];
      for (std::size_t i = 0; i < gin.size(); ++i) {
        gin[i] *= activate_grad(model.spec.hidden_activation, z[i], in[i]);
      }
    }
    g = std::move(gin);
  }
  return g;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

bool Matrix::all_finite() const { return finite_span(data_); }

std::string to_string(Activation a) {
  return a == Activation::ReLU ? "relu" : "tanh";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("network needs at least an input and an output size");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("layer sizes must be >= 1");
  }
}

ModelParams ModelParams::zeros(const NetworkSpec& spec) {
  spec.validate();
  ModelParams m;
  m.spec = spec;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    m.weights.emplace_back(spec.layer_sizes[l + 1], spec.layer_sizes[l]);
    m.biases.emplace_back(spec.layer_sizes[l + 1], 0.0);
  }
  return m;
}

ModelParams ModelParams::random(const NetworkSpec& spec, Rng& rng) {
  ModelParams m = zeros(spec);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_sizes[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& w : m.weights[l].values()) w = u(rng);
    for (double& b : m.biases[l]) b = u(rng);
  }
  return m;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

bool ModelParams::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].all_finite() || !finite_span(biases[l])) return false;
  }
  return true;
}

void ModelParams::validate() const {
  spec.validate();
  if (weights.size() != spec.layer_count() || biases.size() != spec.layer_count()) {
    throw DimensionError("layer count does not match network spec");
  }
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    if (weights[l].rows() != spec.layer_sizes[l + 1] ||
        weights[l].cols() != spec.layer_sizes[l] ||
        biases[l].size() != spec.layer_sizes[l + 1]) {
      throw DimensionError("layer " + std::to_string(l) + " shape does not match spec");
    }
  }
  if (!all_finite()) throw std::invalid_argument("model parameters are not finite");
}

ModelParams linear_binary_model(std::span<const double> theta, double b) {
  NetworkSpec spec{{theta.size(), 2}, Activation::ReLU};
  ModelParams m = ModelParams::zeros(spec);
  std::copy(theta.begin(), theta.end(), m.weights[0].row(1).begin());
  m.biases[0][1] = b;
  return m;
}

GradBundle GradBundle::zeros_like(const ModelParams& model) {
  GradBundle g;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    g.weights.emplace_back(model.weights[l].rows(), model.weights[l].cols());
    g.biases.emplace_back(model.biases[l].size(), 0.0);
  }
  g.input.assign(model.spec.input_dim(), 0.0);
  return g;
}

void GradBundle::accumulate(const GradBundle& other, double scale) {
  if (other.weights.size() != weights.size() || other.input.size() != input.size()) {
    throw DimensionError("gradient bundles have different shapes");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (other.weights[l].size() != weights[l].size() ||
        other.biases[l].size() != biases[l].size()) {
      throw DimensionError("gradient bundles have different shapes");
    }
    kernels::axpy(scale, other.weights[l].values(), weights[l].values());
    kernels::axpy(scale, other.biases[l], biases[l]);
  }
  kernels::axpy(scale, other.input, input);
}

void GradBundle::scale(double factor) {
  for (auto& w : weights) {
    for (double& v : w.values()) v *= factor;
  }
  for (auto& b : biases) {
    for (double& v : b) v *= factor;
  }
  for (double& v : input) v *= factor;
}

bool GradBundle::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].all_finite() || !finite_span(biases[l])) return false;
  }
  return finite_span(input);
}

LabelDist LabelDist::one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw std::invalid_argument("label " + std::to_string(label) + " out of range for " +
                                std::to_string(classes) + " classes");
  }
  LabelDist d;
  d.probs.assign(classes, 0.0);
  d.probs[label] = 1.0;
  return d;
}

void LabelDist::validate() const {
  if (probs.empty()) throw std::invalid_argument("empty label distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("label distribution has a negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("label distribution sums to " + std::to_string(sum));
  }
}

std::vector<double> forward(const ModelParams& model, std::span<const double> x) {
  return std::move(run_forward(model, x).post.back());
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(
      std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

Prediction predict(const ModelParams& model, std::span<const double> x) {
  const auto logits = forward(model, x);
  return {argmax(logits), softmax(logits)};
}

double cross_entropy(std::span<const double> logits, const LabelDist& target) {
  require_dim(target.classes(), logits.size(), "target classes");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double log_norm = m + std::log(sum);
  static const double log_lo = std::log(kProbClamp);
  static const double log_hi = std::log1p(-kProbClamp);
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (target.probs[k] == 0.0) continue;
    const double log_p = std::clamp(logits[k] - log_norm, log_lo, log_hi);
    total -= target.probs[k] * log_p;
  }
  return total;
}

double loss(const ModelParams& model, std::span<const double> x,
            const LabelDist& target) {
  return cross_entropy(forward(model, x), target);
}

std::vector<double> logit_gradient(std::span<const double> logits,
                                   const LabelDist& target) {
  require_dim(target.classes(), logits.size(), "target classes");
  const auto p = softmax(logits);
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.5) {
      // p_k - t_k = (1 - t_k) - sum_{j != k} p_j keeps tiny residuals that
      // 1 - p_k would round away.
      double rest = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (j != k) rest += p[j];
      }
      double t_rest = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (j != k) t_rest += target.probs[j];
      }
      g[k] = t_rest - rest;
    } else {
      g[k] = p[k] - target.probs[k];
    }
  }
  return g;
}

LossAndGrads loss_and_grads(const ModelParams& model, std::span<const double> x,
                            const LabelDist& target) {
  Trace t = run_forward(model, x);
  LossAndGrads out;
  out.logits = t.post.back();
  out.loss = cross_entropy(out.logits, target);
  out.grads = GradBundle::zeros_like(model);
  out.grads.input = backprop(model, t, logit_gradient(out.logits, target), &out.grads);
  return out;
}

GradBundle grads(const ModelParams& model, std::span<const double> x,
                 const LabelDist& target) {
  return loss_and_grads(model, x, target).grads;
}

std::vector<double> input_gradient(const ModelParams& model,
                                   std::span<const double> x,
                                   const LabelDist& target) {
  Trace t = run_forward(model, x);
  return backprop(model, t, logit_gradient(t.post.back(), target), nullptr);
}

GradBundle fd_grads(const ModelParams& model, std::span<const double> x,
                    const LabelDist& target, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  GradBundle g = GradBundle::zeros_like(model);
  ModelParams probe = model;
  std::vector<double> xp(x.begin(), x.end());

  auto central = [&](double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss(probe, xp, target);
    slot = saved - h;
    const double down = loss(probe, xp, target);
    slot = saved;
    return (up - down) / (2.0 * h);
  };

  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    auto w = probe.weights[l].values();
    auto gw = g.weights[l].values();
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] = central(w[i]);
    for (std::size_t i = 0; i < probe.biases[l].size(); ++i) {
      g.biases[l][i] = central(probe.biases[l][i]);
    }
  }
  for (std::size_t i = 0; i < xp.size(); ++i) g.input[i] = central(xp[i]);
  return g;
}

SgdState SgdState::zeros_like(const ModelParams& model) {
  SgdState s;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    s.weight_velocity.emplace_back(model.weights[l].rows(), model.weights[l].cols());
    s.bias_velocity.emplace_back(model.biases[l].size(), 0.0);
  }
  return s;
}

void sgd_step(ModelParams& model, const GradBundle& grad, double lr,
              double momentum, double weight_decay, SgdState& state) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  const std::size_t layers = model.weights.size();
  if (grad.weights.size() != layers || state.weight_velocity.size() != layers ||
      state.bias_velocity.size() != layers || grad.biases.size() != layers) {
    throw DimensionError("sgd_step: layer count mismatch");
  }
  const auto& k = kernels::active();
  for (std::size_t l = 0; l < layers; ++l) {
    auto w = model.weights[l].values();
    auto& b = model.biases[l];
    if (grad.weights[l].size() != w.size() || state.weight_velocity[l].size() != w.size() ||
        grad.biases[l].size() != b.size() || state.bias_velocity[l].size() != b.size()) {
      throw DimensionError("sgd_step: shape mismatch in layer " + std::to_string(l));
    }
    k.sgd_momentum(w.data(), state.weight_velocity[l].values().data(),
                   grad.weights[l].values().data(), lr, momentum, weight_decay, w.size());
    k.sgd_momentum(b.data(), state.bias_velocity[l].data(), grad.biases[l].data(), lr,
                   momentum, weight_decay, b.size());
  }
}

}  // namespace a3t

namespace a3t {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace a3t
