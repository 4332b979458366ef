#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "metagree/errors.hpp"

namespace metagree {

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Flat parameter/gradient vector, the common currency between modules.
// Length is fixed at construction; every arithmetic operation on a pair of
// vectors requires equal lengths.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::vector<double> values_;
};

ParamVector subtract(const ParamVector& a, const ParamVector& b);
double dot(const ParamVector& a, const ParamVector& b);
double l2_norm(const ParamVector& a);
bool bitwise_equal(const ParamVector& a, const ParamVector& b);
// Throws NumericError naming `what` if any entry is NaN/Inf.
void ensure_finite(const ParamVector& v, const char* what);

enum class HiddenActivation { tanh, relu };
enum class OutputActivation { identity, softmax };
enum class LossKind { mean_squared_error, cross_entropy };

// Fully connected network description. Parameters are stored flat, layer by
// layer: the (n_in x n_out) weight block row-major, then n_out biases.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  HiddenActivation hidden_activation = HiddenActivation::tanh;
  OutputActivation output_activation = OutputActivation::identity;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t param_count() const;
  void validate() const;  // at least 2 layers, all sizes >= 1
};

// One set of examples with its loss. Targets are one-hot rows for
// cross_entropy and raw regression targets for mean_squared_error.
struct Batch {
  Matrix inputs;
  Matrix targets;
  LossKind loss_kind = LossKind::mean_squared_error;

  std::size_t size() const { return inputs.rows; }
  void validate() const;
};

// Batched forward pass; output_activation applied to the last layer.
Matrix forward(const MlpSpec& spec, const ParamVector& params, const Matrix& inputs);

// Mean loss over the batch, forward-only (no gradient machinery involved).
// mean_squared_error pairs with identity output, cross_entropy with softmax;
// per example the squared error is summed over output dimensions.
double batch_loss(const MlpSpec& spec, const ParamVector& params, const Batch& batch);

struct LossGrad {
  double loss = 0.0;
  ParamVector gradient;
};

// Mean loss and its gradient w.r.t. params, by explicit backpropagation
// through the fixed MLP topology. Softmax and cross-entropy are fused on the
// logits so large magnitudes do not overflow.
LossGrad loss_and_gradient(const MlpSpec& spec, const ParamVector& params,
                           const Batch& batch);

// params - rate * grad.
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double rate);

// Glorot-uniform weights (limit sqrt(6/(n_in+n_out)) per layer), zero biases.
ParamVector init_params(const MlpSpec& spec, std::uint64_t rng_seed);

// Rows of `parts` appended in order; all parts must agree on shape and loss.
Batch concat_batches(const std::vector<Batch>& parts);

}  // namespace metagree
