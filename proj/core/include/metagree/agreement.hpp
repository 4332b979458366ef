#pragma once

#include <vector>

#include "metagree/numcore.hpp"

namespace metagree {

// Per-task weights for the outer-loop update. Each task's weight is its
// summed inner product with every task's update vector, L1-normalized so the
// magnitudes add to one. A task pointing along the batch consensus direction
// gets a positive weight, a conflicting task a negative one. The scale
// constants that appear in the derivation cancel under the normalization, so
// the only runtime knob is the degeneracy epsilon.
struct AgreementWeights {
  std::vector<double> weights;
  bool degenerate = false;  // all row sums cancelled; weights fell back to 1/N
  double denominator = 0.0; // sum of |row sums|
};

// s_i = sum_j <g_i, g_j>, computed as <g_i, sum_j g_j> in O(N*d).
std::vector<double> gram_row_sums(const std::vector<ParamVector>& gradients);

// w_i = s_i / sum_k |s_k| when the denominator exceeds eps; otherwise the
// batch is degenerate and every weight is 1/N (plain averaging).
AgreementWeights agreement_weights(const std::vector<ParamVector>& gradients, double eps);

// Uniform 1/N weights, the unweighted-baseline stand-in.
AgreementWeights uniform_weights(std::size_t n);

// 1 - |cos(angle(w, s))|: zero iff the weights are proportional to the
// gram row sums, which is the stationarity condition they solve.
double stationarity_residual(const std::vector<ParamVector>& gradients,
                             const AgreementWeights& weights);

}  // namespace metagree
