#pragma once

// Dense feed-forward classifiers: evaluation, softmax cross-entropy and
// exact backpropagated gradients, plus a central-difference oracle.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace a3t {

using Rng = std::mt19937_64;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { ReLU, Tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct NetworkSpec {
  // Input dimension first, class count last.
  std::vector<std::size_t> layer_sizes;
  Activation hidden_activation = Activation::ReLU;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }

  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Layer i maps size[i] -> size[i+1]: weights[i] is size[i+1] x size[i].
struct ModelParams {
  NetworkSpec spec;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static ModelParams zeros(const NetworkSpec& spec);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static ModelParams random(const NetworkSpec& spec, Rng& rng);

  std::size_t parameter_count() const;
  bool all_finite() const;
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Two-class model whose logit difference (class 1 minus class 0) is
// theta.x + b. Class 1 plays the role of y = +1.
ModelParams linear_binary_model(std::span<const double> theta, double b);

struct GradBundle {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  std::vector<double> input;

  static GradBundle zeros_like(const ModelParams& model);

  // this += scale * other (parameter parts and input part).
  void accumulate(const GradBundle& other, double scale = 1.0);
  void scale(double factor);
  bool all_finite() const;
};

struct LabelDist {
  std::vector<double> probs;

  static LabelDist one_hot(std::size_t label, std::size_t classes);
  std::size_t classes() const { return probs.size(); }
  // Throws std::invalid_argument unless entries >= 0 and sum == 1 (1e-9).
  void validate() const;
};

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probs;
};

inline constexpr double kProbClamp = 1e-12;

std::vector<double> forward(const ModelParams& model, std::span<const double> x);

// Stable softmax; argmax ties go to the lowest index.
std::vector<double> softmax(std::span<const double> logits);
std::size_t argmax(std::span<const double> values);
Prediction predict(const ModelParams& model, std::span<const double> x);

// Cross-entropy of the softmax output against target, with probabilities
// clamped to [kProbClamp, 1 - kProbClamp] before the log.
double cross_entropy(std::span<const double> logits, const LabelDist& target);
double loss(const ModelParams& model, std::span<const double> x,
            const LabelDist& target);

// Gradient of the softmax cross-entropy with respect to the logits,
// softmax(z) - target. The clamp only affects the loss value.
std::vector<double> logit_gradient(std::span<const double> logits,
                                   const LabelDist& target);

struct LossAndGrads {
  double loss = 0.0;
  std::vector<double> logits;
  GradBundle grads;
};

LossAndGrads loss_and_grads(const ModelParams& model, std::span<const double> x,
                            const LabelDist& target);
GradBundle grads(const ModelParams& model, std::span<const double> x,
                 const LabelDist& target);
// Input gradient only; skips parameter gradients.
std::vector<double> input_gradient(const ModelParams& model,
                                   std::span<const double> x,
                                   const LabelDist& target);

// Central differences of loss() with step h. Test oracle.
GradBundle fd_grads(const ModelParams& model, std::span<const double> x,
                    const LabelDist& target, double h);

struct SgdState {
  std::vector<Matrix> weight_velocity;
  std::vector<std::vector<double>> bias_velocity;

  static SgdState zeros_like(const ModelParams& model);
};

// Momentum SGD with coupled weight decay:
//   v <- momentum * v + (g + weight_decay * theta);  theta <- theta - lr * v
void sgd_step(ModelParams& model, const GradBundle& grad, double lr,
              double momentum, double weight_decay, SgdState& state);

}  // namespace a3t

namespace a3t {

// Independent 64-bit seed for sub-stream `stream` of `base` (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace a3t
