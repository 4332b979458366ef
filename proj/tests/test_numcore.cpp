#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "metagree/numcore.hpp"
#include "metagree/rng.hpp"
#include "support/oracles.hpp"

using namespace metagree;

namespace {

MlpSpec scalar_spec() {
  MlpSpec spec;
  spec.layer_sizes = {1, 1};
  return spec;
}

Batch single_example(double x, double t) {
  Batch b;
  b.inputs = Matrix(1, 1);
  b.targets = Matrix(1, 1);
  b.inputs.at(0, 0) = x;
  b.targets.at(0, 0) = t;
  return b;
}

MlpSpec random_small_spec(Rng& rng, bool softmax) {
  MlpSpec spec;
  const std::size_t layers = 2 + rng.below(2);  // 2 or 3
  for (std::size_t l = 0; l < layers; ++l) spec.layer_sizes.push_back(1 + rng.below(8));
  if (softmax) {
    if (spec.layer_sizes.back() < 2) spec.layer_sizes.back() = 2 + rng.below(4);
    spec.output_activation = OutputActivation::softmax;
  }
  return spec;
}

Batch random_batch(const MlpSpec& spec, Rng& rng) {
  const std::size_t n = 1 + rng.below(4);
  Batch b;
  b.inputs = Matrix(n, spec.input_dim());
  b.targets = Matrix(n, spec.output_dim());
  for (double& v : b.inputs.data) v = rng.uniform(-2.0, 2.0);
  if (spec.output_activation == OutputActivation::softmax) {
    b.loss_kind = LossKind::cross_entropy;
    for (std::size_t r = 0; r < n; ++r) {
      b.targets.at(r, rng.below(spec.output_dim())) = 1.0;
    }
  } else {
    for (double& v : b.targets.data) v = rng.uniform(-2.0, 2.0);
  }
  return b;
}

ParamVector random_params(const MlpSpec& spec, Rng& rng) {
  ParamVector p(spec.param_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(-1.0, 1.0);
  return p;
}

}  // namespace

TEST_CASE("forward: zero params give zero outputs") {
  MlpSpec spec;
  spec.layer_sizes = {1, 64, 64, 1};
  ParamVector zeros(spec.param_count());
  Matrix in(3, 1);
  in.at(0, 0) = -1.0;
  in.at(1, 0) = 0.5;
  in.at(2, 0) = 7.0;
  const Matrix out = forward(spec, zeros, in);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("forward: scalar affine by hand") {
  // w=2, b=1, x=3 -> 7
  ParamVector p(std::vector<double>{2.0, 1.0});
  Matrix in(1, 1);
  in.at(0, 0) = 3.0;
  const Matrix out = forward(scalar_spec(), p, in);
  CHECK(out.at(0, 0) == 7.0);
}

TEST_CASE("forward: matches an independent per-example evaluation") {
  MlpSpec spec;
  spec.layer_sizes = {1, 64, 64, 1};
  const ParamVector params = init_params(spec, 0);
  Matrix in(1, 1);
  in.at(0, 0) = 0.5;
  const Matrix out = forward(spec, params, in);

  // Straightforward re-implementation: walk the same flat layout with plain
  // per-neuron loops.
  std::vector<double> act{0.5};
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const std::size_t n_in = spec.layer_sizes[l];
    const std::size_t n_out = spec.layer_sizes[l + 1];
    std::vector<double> next(n_out);
    for (std::size_t j = 0; j < n_out; ++j) {
      double z = params[off + n_in * n_out + j];
      for (std::size_t i = 0; i < n_in; ++i) z += act[i] * params[off + i * n_out + j];
      next[j] = (l + 2 < spec.layer_sizes.size()) ? std::tanh(z) : z;
    }
    act = std::move(next);
    off += (n_in + 1) * n_out;
  }
  CHECK(out.at(0, 0) == doctest::Approx(act[0]).epsilon(1e-12));
}

TEST_CASE("forward: shape errors are rejected") {
  MlpSpec spec;
  spec.layer_sizes = {2, 3};
  ParamVector p(spec.param_count());
  Matrix wrong(1, 3);
  CHECK_THROWS_AS(forward(spec, p, wrong), ShapeError);
  ParamVector short_params(3);
  Matrix ok(1, 2);
  CHECK_THROWS_AS(forward(spec, short_params, ok), ShapeError);
}

TEST_CASE("loss: zero at an exact interpolant") {
  // y = 2x + 1 fits targets generated by the same expression.
  ParamVector p(std::vector<double>{2.0, 1.0});
  Batch b;
  b.inputs = Matrix(4, 1);
  b.targets = Matrix(4, 1);
  for (std::size_t r = 0; r < 4; ++r) {
    const double x = static_cast<double>(r) - 1.5;
    b.inputs.at(r, 0) = x;
    b.targets.at(r, 0) = 2.0 * x + 1.0;
  }
  const LossGrad lg = loss_and_gradient(scalar_spec(), p, b);
  CHECK(lg.loss == 0.0);
  for (double g : lg.gradient) CHECK(g == 0.0);
}

TEST_CASE("loss: scalar linear model by hand") {
  // y = wx with w=3 (bias 0), one example (x=1, t=0): loss 9, dL/dw 6.
  ParamVector p(std::vector<double>{3.0, 0.0});
  const LossGrad lg = loss_and_gradient(scalar_spec(), p, single_example(1.0, 0.0));
  CHECK(lg.loss == 9.0);
  CHECK(lg.gradient[0] == 6.0);
  CHECK(lg.gradient[1] == 6.0);  // bias sees the same residual
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const MlpSpec spec = random_small_spec(rng, trial % 2 == 1);
    const ParamVector params = random_params(spec, rng);
    const Batch batch = random_batch(spec, rng);
    const LossGrad lg = loss_and_gradient(spec, params, batch);
    const ParamVector fd = testing::fd_gradient(spec, params, batch, 1e-5);
    CHECK(testing::max_scaled_gradient_error(lg.gradient, fd) < 1e-6);
  }
}

TEST_CASE("loss is non-negative") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpSpec spec = random_small_spec(rng, trial % 2 == 1);
    const Batch batch = random_batch(spec, rng);
    const double loss = batch_loss(spec, random_params(spec, rng), batch);
    CHECK(loss >= 0.0);
  }
}

TEST_CASE("forward and loss are bit-pure") {
  Rng rng(5);
  const MlpSpec spec = random_small_spec(rng, false);
  const ParamVector params = random_params(spec, rng);
  const Batch batch = random_batch(spec, rng);
  const Matrix o1 = forward(spec, params, batch.inputs);
  const Matrix o2 = forward(spec, params, batch.inputs);
  CHECK(std::memcmp(o1.data.data(), o2.data.data(), o1.data.size() * sizeof(double)) == 0);
  const LossGrad g1 = loss_and_gradient(spec, params, batch);
  const LossGrad g2 = loss_and_gradient(spec, params, batch);
  CHECK(g1.loss == g2.loss);
  CHECK(bitwise_equal(g1.gradient, g2.gradient));
}

TEST_CASE("numeric overflow names the layer") {
  ParamVector p(std::vector<double>{1e300, 0.0});
  CHECK_THROWS_WITH_AS(loss_and_gradient(scalar_spec(), p, single_example(1e10, 0.0)),
                       doctest::Contains("layer"), NumericError);
}

TEST_CASE("cross_entropy survives huge logits via the logits trick") {
  MlpSpec spec;
  spec.layer_sizes = {1, 2};
  spec.output_activation = OutputActivation::softmax;
  ParamVector p(std::vector<double>{500.0, -500.0, 0.0, 0.0});
  Batch b;
  b.loss_kind = LossKind::cross_entropy;
  b.inputs = Matrix(1, 1);
  b.inputs.at(0, 0) = 2.0;
  b.targets = Matrix(1, 2);
  b.targets.at(0, 0) = 1.0;
  const LossGrad lg = loss_and_gradient(spec, p, b);
  CHECK(std::isfinite(lg.loss));
  CHECK(lg.loss >= 0.0);
}

TEST_CASE("cross_entropy rejects non-one-hot targets") {
  MlpSpec spec;
  spec.layer_sizes = {1, 2};
  spec.output_activation = OutputActivation::softmax;
  ParamVector p(spec.param_count());
  Batch b;
  b.loss_kind = LossKind::cross_entropy;
  b.inputs = Matrix(1, 1);
  b.targets = Matrix(1, 2);
  b.targets.at(0, 0) = 0.5;
  b.targets.at(0, 1) = 0.5;
  CHECK_THROWS_AS(batch_loss(spec, p, b), ShapeError);
}

TEST_CASE("sgd_step basics") {
  ParamVector p(std::vector<double>{1.0, 1.0});
  ParamVector g(std::vector<double>{2.0, -2.0});
  const ParamVector same = sgd_step(p, g, 0.0);
  CHECK(bitwise_equal(same, p));
  const ParamVector stepped = sgd_step(p, g, 0.5);
  CHECK(stepped[0] == 0.0);
  CHECK(stepped[1] == 2.0);
  ParamVector wrong(3);
  CHECK_THROWS_AS(sgd_step(p, wrong, 0.1), ShapeError);
}

TEST_CASE("sgd_step is additive in the rate") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    ParamVector p(8), g(8);
    for (std::size_t i = 0; i < 8; ++i) {
      p[i] = rng.uniform(-3.0, 3.0);
      g[i] = rng.uniform(-3.0, 3.0);
    }
    const double a = rng.uniform(0.0, 1.0), b = rng.uniform(0.0, 1.0);
    const ParamVector joint = sgd_step(p, g, a + b);
    const ParamVector split = sgd_step(sgd_step(p, g, a), g, b);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(joint[i] == doctest::Approx(split[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("sgd iteration converges to the quadratic minimizer") {
  // L(w) = (w - 3)^2, grad = 2(w - 3).
  ParamVector w(std::vector<double>{-10.0});
  for (int i = 0; i < 200; ++i) {
    ParamVector grad(std::vector<double>{2.0 * (w[0] - 3.0)});
    w = sgd_step(w, grad, 0.1);
  }
  CHECK(w[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("init_params: deterministic, seed-sensitive, biases zero") {
  MlpSpec spec;
  spec.layer_sizes = {3, 5, 2};
  const ParamVector a = init_params(spec, 7);
  const ParamVector b = init_params(spec, 7);
  const ParamVector c = init_params(spec, 8);
  CHECK(bitwise_equal(a, b));
  CHECK(!bitwise_equal(a, c));
  // biases live after each weight block
  for (std::size_t j = 0; j < 5; ++j) CHECK(a[15 + j] == 0.0);
  for (std::size_t j = 0; j < 2; ++j) CHECK(a[20 + 10 + j] == 0.0);
}

TEST_CASE("init_params: weights bounded and centered") {
  MlpSpec spec;
  spec.layer_sizes = {99, 99};
  const ParamVector p = init_params(spec, 123);
  const double limit = std::sqrt(6.0 / 198.0);
  double sum = 0.0;
  const std::size_t n_weights = 99 * 99;
  for (std::size_t i = 0; i < n_weights; ++i) {
    CHECK(std::abs(p[i]) <= limit);
    sum += p[i];
  }
  const double mean = sum / static_cast<double>(n_weights);
  // 3 standard errors of a U[-limit, limit] mean over ~1e4 draws
  const double se = limit / std::sqrt(3.0) / std::sqrt(static_cast<double>(n_weights));
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("concat_batches keeps rows in order") {
  Batch a = single_example(1.0, 2.0);
  Batch b = single_example(3.0, 4.0);
  const Batch joined = concat_batches({a, b});
  CHECK(joined.size() == 2);
  CHECK(joined.inputs.at(0, 0) == 1.0);
  CHECK(joined.inputs.at(1, 0) == 3.0);
  CHECK(joined.targets.at(1, 0) == 4.0);
}
