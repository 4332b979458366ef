#include "metagree/agreement.hpp"

#include <cmath>
#include <string>

namespace metagree {

namespace {

void check_gradients(const std::vector<ParamVector>& gradients) {
  if (gradients.empty()) throw ShapeError("agreement: need at least one gradient");
  const std::size_t d = gradients.front().size();
  for (const ParamVector& g : gradients) {
    if (g.size() != d) {
      throw ShapeError("agreement: gradient length mismatch (" + std::to_string(g.size()) +
                       " vs " + std::to_string(d) + ")");
    }
  }
}

}  // namespace

std::vector<double> gram_row_sums(const std::vector<ParamVector>& gradients) {
  check_gradients(gradients);
  const std::size_t d = gradients.front().size();
  ParamVector total(d);
  for (const ParamVector& g : gradients)
    for (std::size_t i = 0; i < d; ++i) total[i] += g[i];
  std::vector<double> sums(gradients.size());
  for (std::size_t i = 0; i < gradients.size(); ++i) sums[i] = dot(gradients[i], total);
  return sums;
}

AgreementWeights agreement_weights(const std::vector<ParamVector>& gradients, double eps) {
  if (!(eps > 0.0)) throw ShapeError("agreement_weights: eps must be > 0");
  const std::vector<double> sums = gram_row_sums(gradients);
  const std::size_t n = sums.size();

  AgreementWeights out;
  out.weights.resize(n);
  double denom = 0.0;
  for (double s : sums) denom += std::abs(s);
  out.denominator = denom;
  if (denom > eps) {
    for (std::size_t i = 0; i < n; ++i) out.weights[i] = sums[i] / denom;
  } else {
    out.degenerate = true;
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out.weights[i] = w;
  }
  return out;
}

AgreementWeights uniform_weights(std::size_t n) {
  if (n == 0) throw ShapeError("uniform_weights: need at least one task");
  AgreementWeights out;
  out.weights.assign(n, 1.0 / static_cast<double>(n));
  return out;
}

double stationarity_residual(const std::vector<ParamVector>& gradients,
                             const AgreementWeights& weights) {
  const std::vector<double> sums = gram_row_sums(gradients);
  if (weights.weights.size() != sums.size()) {
    throw ShapeError("stationarity_residual: weights/gradients count mismatch");
  }
  double ww = 0.0, ss = 0.0, ws = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    ww += weights.weights[i] * weights.weights[i];
    ss += sums[i] * sums[i];
    ws += weights.weights[i] * sums[i];
  }
  if (ww == 0.0 || ss == 0.0) {
    throw ShapeError("stationarity_residual: zero-norm weights or row sums (degenerate)");
  }
  return 1.0 - std::abs(ws) / (std::sqrt(ww) * std::sqrt(ss));
}

}  // namespace metagree
