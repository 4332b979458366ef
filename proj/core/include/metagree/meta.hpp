#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metagree/agreement.hpp"
#include "metagree/numcore.hpp"
#include "metagree/tasks.hpp"

namespace metagree::meta {

enum class Variant { reptile, ga_reptile, fomaml, ga_fomaml };

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);
bool variant_is_weighted(Variant v);
bool variant_is_maml(Variant v);

// Full experiment description for one training run.
struct MetaConfig {
  Variant variant = Variant::reptile;
  double inner_rate = 0.0;
  double outer_rate = 0.0;
  std::size_t inner_steps = 1;       // k
  std::size_t tasks_per_batch = 1;   // N
  std::size_t outer_iterations = 0;
  std::size_t examples_per_task = 0; // adaptation-set size per task
  std::uint64_t seed = 0;
  double eps_degenerate = 1e-12;

  void validate() const;
};

// Outcome of adapting the shared parameters to one task.
struct AdaptResult {
  ParamVector adapted_params;     // theta_i
  ParamVector displacement;       // theta - theta_i, the task's update vector
  double final_inner_loss = 0.0;  // loss seen at the last inner step
  ParamVector outer_gradient;     // task-loss gradient at theta_i (empty if skipped)
};

// k sequential SGD steps, step t on sub-batch t. The outer gradient is taken
// on the task's full example set (all sub-batches) at the adapted parameters;
// pass compute_outer_gradient=false to skip it when the update rule does not
// need it.
AdaptResult adapt(const MlpSpec& spec, const ParamVector& theta, const TaskBatchPlan& plan,
                  double inner_rate, std::size_t inner_steps,
                  bool compute_outer_gradient = true);

// theta + outer_rate * sum_i w_i * (theta_i - theta).
ParamVector outer_update_reptile(const ParamVector& theta,
                                 const std::vector<AdaptResult>& adapts,
                                 const AgreementWeights& weights, double outer_rate);

// theta - outer_rate * sum_i w_i * grad L_i(theta_i). First-order: the
// gradient is evaluated at theta_i, never differentiated through the inner
// loop.
ParamVector outer_update_maml(const ParamVector& theta,
                              const std::vector<AdaptResult>& adapts,
                              const AgreementWeights& weights, double outer_rate);

struct TrainTraceRecord {
  std::size_t iteration = 0;
  std::vector<double> weights;
  double denominator = 0.0;
  bool degenerate = false;
  double mean_inner_loss = 0.0;
  double param_norm = 0.0;  // after the outer update
};

struct TrainTrace {
  std::vector<TrainTraceRecord> records;
};

std::string trace_to_csv(const TrainTrace& trace);

struct TrainResult {
  ParamVector params;
  TrainTrace trace;
};

// The full outer loop: sample N tasks, split each into k sub-batches, adapt,
// weight (agreement weights for ga_ variants, uniform otherwise), update.
// Per-task RNG streams derive from (seed, iteration, task index), so results
// are bit-identical for any thread count. Weights are always computed from
// the displacement vectors theta - theta_i, for the MAML-style variants too.
TrainResult train(const MetaConfig& config, const TaskSource& source, const MlpSpec& spec,
                  std::optional<ParamVector> initial = std::nullopt, int threads = 1);

}  // namespace metagree::meta
