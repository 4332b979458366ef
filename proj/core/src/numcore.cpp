#include "metagree/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "metagree/rng.hpp"

namespace metagree {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_size(const ParamVector& a, const ParamVector& b, const char* op) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(op) + ": length mismatch (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

struct LayerView {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::size_t w_off = 0;  // weights, row-major n_in x n_out
  std::size_t b_off = 0;  // biases, n_out
};

std::vector<LayerView> layer_views(const MlpSpec& spec) {
  std::vector<LayerView> views;
  views.reserve(spec.layer_sizes.size() - 1);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    LayerView v;
    v.n_in = spec.layer_sizes[l];
    v.n_out = spec.layer_sizes[l + 1];
    v.w_off = off;
    v.b_off = off + v.n_in * v.n_out;
    off = v.b_off + v.n_out;
    views.push_back(v);
  }
  return views;
}

void check_forward_shapes(const MlpSpec& spec, const ParamVector& params,
                          const Matrix& inputs) {
  spec.validate();
  if (params.size() != spec.param_count()) {
    throw ShapeError("params length " + std::to_string(params.size()) +
                     " does not match spec parameter count " +
                     std::to_string(spec.param_count()));
  }
  if (inputs.cols != spec.input_dim()) {
    throw ShapeError("input width " + std::to_string(inputs.cols) +
                     " does not match layer_sizes[0]=" + std::to_string(spec.input_dim()));
  }
  if (inputs.rows == 0) throw ShapeError("empty input batch");
}

// z = a * W + b for one layer.
Matrix affine(const Matrix& a, const ParamVector& params, const LayerView& v) {
  Matrix z(a.rows, v.n_out);
  const double* w = params.values().data() + v.w_off;
  const double* b = params.values().data() + v.b_off;
  for (std::size_t r = 0; r < a.rows; ++r) {
    double* zrow = z.data.data() + r * v.n_out;
    for (std::size_t j = 0; j < v.n_out; ++j) zrow[j] = b[j];
    const double* arow = a.data.data() + r * v.n_in;
    for (std::size_t i = 0; i < v.n_in; ++i) {
      const double ai = arow[i];
      const double* wrow = w + i * v.n_out;
      for (std::size_t j = 0; j < v.n_out; ++j) zrow[j] += ai * wrow[j];
    }
  }
  return z;
}

void apply_hidden(Matrix& z, HiddenActivation act) {
  if (act == HiddenActivation::tanh) {
    for (double& x : z.data) x = std::tanh(x);
  } else {
    for (double& x : z.data) x = x > 0.0 ? x : 0.0;
  }
}

void softmax_rows(Matrix& z) {
  for (std::size_t r = 0; r < z.rows; ++r) {
    double* row = z.data.data() + r * z.cols;
    double m = row[0];
    for (std::size_t c = 1; c < z.cols; ++c) m = std::max(m, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < z.cols; ++c) {
      row[c] = std::exp(row[c] - m);
      sum += row[c];
    }
    for (std::size_t c = 0; c < z.cols; ++c) row[c] /= sum;
  }
}

bool all_finite(const Matrix& m) {
  for (double x : m.data)
    if (!std::isfinite(x)) return false;
  return true;
}

// Forward pass keeping every post-activation; the last entry holds the final
// layer's pre-activation (logits) so losses can work on the stable form.
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = inputs
  Matrix logits;                    // last layer before output activation
};

ForwardCache forward_cached(const MlpSpec& spec, const ParamVector& params,
                            const Matrix& inputs, bool check_finite) {
  const auto views = layer_views(spec);
  ForwardCache cache;
  cache.activations.reserve(views.size() + 1);
  cache.activations.push_back(inputs);
  for (std::size_t l = 0; l < views.size(); ++l) {
    Matrix z = affine(cache.activations.back(), params, views[l]);
    const bool last = (l + 1 == views.size());
    if (!last) {
      apply_hidden(z, spec.hidden_activation);
      if (check_finite && !all_finite(z)) {
        throw NumericError("non-finite activations at layer " + std::to_string(l + 1));
      }
      cache.activations.push_back(std::move(z));
    } else {
      if (check_finite && !all_finite(z)) {
        throw NumericError("non-finite outputs at layer " + std::to_string(l + 1));
      }
      cache.logits = std::move(z);
    }
  }
  return cache;
}

void check_batch_against_spec(const MlpSpec& spec, const Batch& batch) {
  batch.validate();
  if (batch.targets.cols != spec.output_dim()) {
    throw ShapeError("target width " + std::to_string(batch.targets.cols) +
                     " does not match output dim " + std::to_string(spec.output_dim()));
  }
  if (batch.loss_kind == LossKind::mean_squared_error &&
      spec.output_activation != OutputActivation::identity) {
    throw ShapeError("mean_squared_error requires identity output activation");
  }
  if (batch.loss_kind == LossKind::cross_entropy &&
      spec.output_activation != OutputActivation::softmax) {
    throw ShapeError("cross_entropy requires softmax output activation");
  }
}

// Mean loss over examples; per example MSE sums squared error over output
// dims, cross-entropy is -sum t*log p with a log-sum-exp on the logits.
double loss_from_logits(const Matrix& logits, const Batch& batch) {
  const std::size_t n = logits.rows;
  double total = 0.0;
  if (batch.loss_kind == LossKind::mean_squared_error) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < logits.cols; ++c) {
        const double d = logits.at(r, c) - batch.targets.at(r, c);
        total += d * d;
      }
    }
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      const double* z = logits.data.data() + r * logits.cols;
      double m = z[0];
      for (std::size_t c = 1; c < logits.cols; ++c) m = std::max(m, z[c]);
      double sum = 0.0;
      for (std::size_t c = 0; c < logits.cols; ++c) sum += std::exp(z[c] - m);
      const double lse = m + std::log(sum);
      double dotzt = 0.0;
      for (std::size_t c = 0; c < logits.cols; ++c) dotzt += batch.targets.at(r, c) * z[c];
      total += lse - dotzt;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    count += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return count;
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw ShapeError("MlpSpec needs at least 2 layers");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw ShapeError("MlpSpec layer sizes must be >= 1");
}

void Batch::validate() const {
  if (inputs.rows == 0) throw ShapeError("batch has no examples");
  if (inputs.rows != targets.rows) {
    throw ShapeError("batch inputs/targets row mismatch (" +
                     shape_str(inputs.rows, inputs.cols) + " vs " +
                     shape_str(targets.rows, targets.cols) + ")");
  }
  if (loss_kind == LossKind::cross_entropy) {
    for (std::size_t r = 0; r < targets.rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < targets.cols; ++c) {
        const double t = targets.at(r, c);
        if (t != 0.0 && t != 1.0) {
          throw ShapeError("cross_entropy targets must be one-hot");
        }
        sum += t;
      }
      if (sum != 1.0) throw ShapeError("cross_entropy target rows must sum to 1");
    }
  }
}

ParamVector subtract(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "subtract");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

bool bitwise_equal(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) return false;
  return a.size() == 0 ||
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

void ensure_finite(const ParamVector& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(what) + " contains non-finite values");
    }
  }
}

Matrix forward(const MlpSpec& spec, const ParamVector& params, const Matrix& inputs) {
  check_forward_shapes(spec, params, inputs);
  ForwardCache cache = forward_cached(spec, params, inputs, /*check_finite=*/false);
  Matrix out = std::move(cache.logits);
  if (spec.output_activation == OutputActivation::softmax) softmax_rows(out);
  return out;
}

double batch_loss(const MlpSpec& spec, const ParamVector& params, const Batch& batch) {
  check_forward_shapes(spec, params, batch.inputs);
  check_batch_against_spec(spec, batch);
  ForwardCache cache = forward_cached(spec, params, batch.inputs, /*check_finite=*/true);
  const double loss = loss_from_logits(cache.logits, batch);
  if (!std::isfinite(loss)) throw NumericError("non-finite loss at output layer");
  return loss;
}

LossGrad loss_and_gradient(const MlpSpec& spec, const ParamVector& params,
                           const Batch& batch) {
  check_forward_shapes(spec, params, batch.inputs);
  check_batch_against_spec(spec, batch);
  const auto views = layer_views(spec);
  ForwardCache cache = forward_cached(spec, params, batch.inputs, /*check_finite=*/true);

  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossGrad result;
  result.loss = loss_from_logits(cache.logits, batch);
  if (!std::isfinite(result.loss)) throw NumericError("non-finite loss at output layer");
  result.gradient = ParamVector(spec.param_count());

  // delta = dLoss/d(pre-activation of current layer), examples x n_out.
  Matrix delta(n, spec.output_dim());
  if (batch.loss_kind == LossKind::mean_squared_error) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < delta.cols; ++c)
        delta.at(r, c) = 2.0 * (cache.logits.at(r, c) - batch.targets.at(r, c)) * inv_n;
  } else {
    Matrix probs = cache.logits;
    softmax_rows(probs);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < delta.cols; ++c)
        delta.at(r, c) = (probs.at(r, c) - batch.targets.at(r, c)) * inv_n;
  }

  for (std::size_t l = views.size(); l-- > 0;) {
    const LayerView& v = views[l];
    const Matrix& a_prev = cache.activations[l];
    double* wgrad = &result.gradient[v.w_off];
    double* bgrad = &result.gradient[v.b_off];
    for (std::size_t r = 0; r < n; ++r) {
      const double* arow = a_prev.data.data() + r * v.n_in;
      const double* drow = delta.data.data() + r * v.n_out;
      for (std::size_t i = 0; i < v.n_in; ++i) {
        const double ai = arow[i];
        double* wg = wgrad + i * v.n_out;
        for (std::size_t j = 0; j < v.n_out; ++j) wg[j] += ai * drow[j];
      }
      for (std::size_t j = 0; j < v.n_out; ++j) bgrad[j] += drow[j];
    }
    if (l > 0) {
      // Propagate: delta_prev = (delta * W^T) ⊙ act'(a_prev).
      Matrix prev(n, v.n_in);
      const double* w = params.values().data() + v.w_off;
      for (std::size_t r = 0; r < n; ++r) {
        const double* drow = delta.data.data() + r * v.n_out;
        double* prow = prev.data.data() + r * v.n_in;
        for (std::size_t i = 0; i < v.n_in; ++i) {
          const double* wrow = w + i * v.n_out;
          double s = 0.0;
          for (std::size_t j = 0; j < v.n_out; ++j) s += drow[j] * wrow[j];
          prow[i] = s;
        }
        const double* arow = a_prev.data.data() + r * v.n_in;
        if (spec.hidden_activation == HiddenActivation::tanh) {
          for (std::size_t i = 0; i < v.n_in; ++i) prow[i] *= 1.0 - arow[i] * arow[i];
        } else {
          for (std::size_t i = 0; i < v.n_in; ++i) prow[i] *= arow[i] > 0.0 ? 1.0 : 0.0;
        }
      }
      delta = std::move(prev);
    }
  }

  for (std::size_t l = 0; l < views.size(); ++l) {
    const auto& v = views[l];
    for (std::size_t i = v.w_off; i < v.b_off + v.n_out; ++i) {
      if (!std::isfinite(result.gradient[i])) {
        throw NumericError("non-finite gradient at layer " + std::to_string(l + 1));
      }
    }
  }
  return result;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double rate) {
  require_same_size(params, grad, "sgd_step");
  if (!std::isfinite(rate)) throw ShapeError("sgd_step: rate must be finite");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - rate * grad[i];
  ensure_finite(out, "sgd_step result");
  return out;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  ParamVector params(spec.param_count());
  Rng rng(rng_seed);
  for (const LayerView& v : layer_views(spec)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(v.n_in + v.n_out));
    for (std::size_t i = 0; i < v.n_in * v.n_out; ++i) {
      params[v.w_off + i] = rng.uniform(-limit, limit);
    }
    // biases already zero
  }
  return params;
}

Batch concat_batches(const std::vector<Batch>& parts) {
  if (parts.empty()) throw ShapeError("concat_batches: no parts");
  std::size_t rows = 0;
  for (const Batch& p : parts) {
    if (p.inputs.cols != parts.front().inputs.cols ||
        p.targets.cols != parts.front().targets.cols ||
        p.loss_kind != parts.front().loss_kind) {
      throw ShapeError("concat_batches: incompatible parts");
    }
    rows += p.inputs.rows;
  }
  Batch out;
  out.loss_kind = parts.front().loss_kind;
  out.inputs = Matrix(rows, parts.front().inputs.cols);
  out.targets = Matrix(rows, parts.front().targets.cols);
  std::size_t r0 = 0;
  for (const Batch& p : parts) {
    std::copy(p.inputs.data.begin(), p.inputs.data.end(),
              out.inputs.data.begin() + r0 * out.inputs.cols);
    std::copy(p.targets.data.begin(), p.targets.data.end(),
              out.targets.data.begin() + r0 * out.targets.cols);
    r0 += p.inputs.rows;
  }
  return out;
}

}  // namespace metagree
