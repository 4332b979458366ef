#pragma once

// Independent reference implementations the tests check the library against.
// Everything here deliberately avoids the library's computation paths: the
// gradient oracle differentiates numerically through the forward pass only,
// and the weight oracle evaluates the pairwise Gram form with its own loops.

#include <cmath>
#include <cstddef>
#include <vector>

#include "metagree/numcore.hpp"
#include "metagree/tasks.hpp"

namespace metagree::testing {

// Central finite differences of the batch loss.
inline ParamVector fd_gradient(const MlpSpec& spec, const ParamVector& params,
                               const Batch& batch, double h) {
  ParamVector grad(params.size());
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + h;
    const double up = batch_loss(spec, probe, batch);
    probe[i] = params[i] - h;
    const double down = batch_loss(spec, probe, batch);
    probe[i] = params[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Relative error with a unit floor, so near-zero coordinates are compared
// absolutely instead of dividing by noise.
inline double max_scaled_gradient_error(const ParamVector& got, const ParamVector& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max({1.0, std::abs(got[i]), std::abs(want[i])});
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  return worst;
}

// The pairwise O(N^2 d) weight evaluation: s_i = sum_j <g_i, g_j>, then
// w_i = s_i / sum_k |s_k|.
inline std::vector<double> brute_force_weights(const std::vector<ParamVector>& gradients) {
  const std::size_t n = gradients.size();
  std::vector<double> sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double inner = 0.0;
      for (std::size_t k = 0; k < gradients[i].size(); ++k) {
        inner += gradients[i][k] * gradients[j][k];
      }
      sums[i] += inner;
    }
  }
  double denom = 0.0;
  for (double s : sums) denom += std::abs(s);
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = sums[i] / denom;
  return weights;
}

inline std::vector<double> brute_force_row_sums(const std::vector<ParamVector>& gradients) {
  const std::size_t n = gradients.size();
  std::vector<double> sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double inner = 0.0;
      for (std::size_t k = 0; k < gradients[i].size(); ++k) {
        inner += gradients[i][k] * gradients[j][k];
      }
      sums[i] += inner;
    }
  }
  return sums;
}

// Class centroids estimated from a balanced, class-major support set.
inline std::vector<std::vector<double>> support_centroids(const FewShotTask& task) {
  const std::size_t dim = task.support.inputs.cols;
  std::vector<std::vector<double>> centroids(task.n_way, std::vector<double>(dim, 0.0));
  for (std::size_t r = 0; r < task.support.size(); ++r) {
    const std::size_t cls = r / task.k_shot;
    for (std::size_t d = 0; d < dim; ++d) {
      centroids[cls][d] += task.support.inputs.at(r, d) / static_cast<double>(task.k_shot);
    }
  }
  return centroids;
}

// Accuracy of nearest-centroid classification on the query set, with
// centroids taken from the support set.
inline double nearest_centroid_accuracy(const FewShotTask& task) {
  const auto centroids = support_centroids(task);
  const std::size_t dim = task.query.inputs.cols;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < task.query.size(); ++r) {
    std::size_t best = 0;
    double best_dist = 0.0;
    for (std::size_t c = 0; c < task.n_way; ++c) {
      double dist = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = task.query.inputs.at(r, d) - centroids[c][d];
        dist += diff * diff;
      }
      if (c == 0 || dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    std::size_t labeled = 0;
    for (std::size_t c = 0; c < task.n_way; ++c) {
      if (task.query.targets.at(r, c) == 1.0) labeled = c;
    }
    if (best == labeled) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(task.query.size());
}

}  // namespace metagree::testing
