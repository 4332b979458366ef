#include "metagree/meta.hpp"

#include <cmath>

#include "metagree/io.hpp"
#include "metagree/parallel.hpp"
#include "metagree/rng.hpp"

namespace metagree::meta {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::reptile: return "reptile";
    case Variant::ga_reptile: return "ga_reptile";
    case Variant::fomaml: return "fomaml";
    case Variant::ga_fomaml: return "ga_fomaml";
  }
  return "unknown";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "reptile") return Variant::reptile;
  if (name == "ga_reptile") return Variant::ga_reptile;
  if (name == "fomaml") return Variant::fomaml;
  if (name == "ga_fomaml") return Variant::ga_fomaml;
  return std::nullopt;
}

bool variant_is_weighted(Variant v) {
  return v == Variant::ga_reptile || v == Variant::ga_fomaml;
}

bool variant_is_maml(Variant v) {
  return v == Variant::fomaml || v == Variant::ga_fomaml;
}

void MetaConfig::validate() const {
  if (!(inner_rate > 0.0) || !std::isfinite(inner_rate))
    throw ShapeError("MetaConfig: inner_rate must be positive and finite");
  if (!(outer_rate > 0.0) || !std::isfinite(outer_rate))
    throw ShapeError("MetaConfig: outer_rate must be positive and finite");
  if (inner_steps == 0) throw ShapeError("MetaConfig: inner_steps must be >= 1");
  if (tasks_per_batch == 0) throw ShapeError("MetaConfig: tasks_per_batch must be >= 1");
  if (examples_per_task < inner_steps)
    throw ShapeError("MetaConfig: examples_per_task must be >= inner_steps");
  if (!(eps_degenerate > 0.0)) throw ShapeError("MetaConfig: eps_degenerate must be > 0");
}

AdaptResult adapt(const MlpSpec& spec, const ParamVector& theta, const TaskBatchPlan& plan,
                  double inner_rate, std::size_t inner_steps, bool compute_outer_gradient) {
  if (inner_steps == 0 || plan.sub_batches.size() != inner_steps) {
    throw ShapeError("adapt: plan has " + std::to_string(plan.sub_batches.size()) +
                     " sub-batches, expected " + std::to_string(inner_steps));
  }
  AdaptResult result;
  ParamVector params = theta;
  for (std::size_t t = 0; t < inner_steps; ++t) {
    try {
      LossGrad lg = loss_and_gradient(spec, params, plan.sub_batches[t]);
      result.final_inner_loss = lg.loss;
      params = sgd_step(params, lg.gradient, inner_rate);
    } catch (const NumericError& e) {
      throw NumericError("inner step " + std::to_string(t) + ": " + e.what());
    }
  }
  result.adapted_params = std::move(params);
  result.displacement = subtract(theta, result.adapted_params);
  if (compute_outer_gradient) {
    const Batch full = concat_batches(plan.sub_batches);
    try {
      result.outer_gradient = loss_and_gradient(spec, result.adapted_params, full).gradient;
    } catch (const NumericError& e) {
      throw NumericError(std::string("outer gradient: ") + e.what());
    }
  }
  return result;
}

ParamVector outer_update_reptile(const ParamVector& theta,
                                 const std::vector<AdaptResult>& adapts,
                                 const AgreementWeights& weights, double outer_rate) {
  if (weights.weights.size() != adapts.size()) {
    throw ShapeError("outer_update_reptile: weights/adapts count mismatch");
  }
  const std::size_t d = theta.size();
  ParamVector acc(d);
  for (std::size_t i = 0; i < adapts.size(); ++i) {
    const ParamVector& adapted = adapts[i].adapted_params;
    if (adapted.size() != d) throw ShapeError("outer_update_reptile: params length mismatch");
    const double w = weights.weights[i];
    for (std::size_t j = 0; j < d; ++j) acc[j] += w * (adapted[j] - theta[j]);
  }
  ParamVector out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = theta[j] + outer_rate * acc[j];
  ensure_finite(out, "outer_update_reptile result");
  return out;
}

ParamVector outer_update_maml(const ParamVector& theta,
                              const std::vector<AdaptResult>& adapts,
                              const AgreementWeights& weights, double outer_rate) {
  if (weights.weights.size() != adapts.size()) {
    throw ShapeError("outer_update_maml: weights/adapts count mismatch");
  }
  const std::size_t d = theta.size();
  ParamVector acc(d);
  for (std::size_t i = 0; i < adapts.size(); ++i) {
    const ParamVector& grad = adapts[i].outer_gradient;
    if (grad.size() != d) {
      throw ShapeError("outer_update_maml: missing or mismatched outer gradient");
    }
    const double w = weights.weights[i];
    for (std::size_t j = 0; j < d; ++j) acc[j] += w * grad[j];
  }
  ParamVector out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = theta[j] - outer_rate * acc[j];
  ensure_finite(out, "outer_update_maml result");
  return out;
}

std::string trace_to_csv(const TrainTrace& trace) {
  std::string out = "iteration,w_min,w_mean,w_max,denominator,degenerate,mean_inner_loss,param_norm\n";
  for (const TrainTraceRecord& r : trace.records) {
    double w_min = 0.0, w_max = 0.0, w_sum = 0.0;
    if (!r.weights.empty()) {
      w_min = w_max = r.weights.front();
      for (double w : r.weights) {
        w_min = std::min(w_min, w);
        w_max = std::max(w_max, w);
        w_sum += w;
      }
    }
    const double w_mean = r.weights.empty() ? 0.0 : w_sum / static_cast<double>(r.weights.size());
    out += std::to_string(r.iteration);
    out += ',';
    out += format_double(w_min);
    out += ',';
    out += format_double(w_mean);
    out += ',';
    out += format_double(w_max);
    out += ',';
    out += format_double(r.denominator);
    out += ',';
    out += r.degenerate ? '1' : '0';
    out += ',';
    out += format_double(r.mean_inner_loss);
    out += ',';
    out += format_double(r.param_norm);
    out += '\n';
  }
  return out;
}

TrainResult train(const MetaConfig& config, const TaskSource& source, const MlpSpec& spec,
                  std::optional<ParamVector> initial, int threads) {
  config.validate();
  spec.validate();
  if (source.input_dim() != spec.input_dim() || source.output_dim() != spec.output_dim()) {
    throw ShapeError("train: task source dims (" + std::to_string(source.input_dim()) + "->" +
                     std::to_string(source.output_dim()) + ") do not match network (" +
                     std::to_string(spec.input_dim()) + "->" +
                     std::to_string(spec.output_dim()) + ")");
  }
  if (source.support_size() != config.examples_per_task) {
    throw ShapeError("train: examples_per_task " + std::to_string(config.examples_per_task) +
                     " does not match task source support size " +
                     std::to_string(source.support_size()));
  }

  ParamVector theta = initial ? std::move(*initial) : init_params(spec, config.seed);
  if (theta.size() != spec.param_count()) {
    throw ShapeError("train: initial params length " + std::to_string(theta.size()) +
                     " does not match spec parameter count " +
                     std::to_string(spec.param_count()));
  }

  const std::size_t n_tasks = config.tasks_per_batch;
  const bool weighted = variant_is_weighted(config.variant);
  const bool maml = variant_is_maml(config.variant);

  TrainResult result;
  result.trace.records.reserve(config.outer_iterations);

  for (std::size_t it = 0; it < config.outer_iterations; ++it) {
    try {
      std::vector<AdaptResult> adapts(n_tasks);
      parallel_for(n_tasks, threads, [&](std::size_t i) {
        Rng rng(derive_seed(config.seed, streams::train_task, it, i));
        const TaskSample task = source.sample(rng);
        const TaskBatchPlan plan = split_sub_batches(task.adaptation, config.inner_steps, rng);
        adapts[i] = adapt(spec, theta, plan, config.inner_rate, config.inner_steps, maml);
      });

      AgreementWeights weights;
      if (weighted) {
        std::vector<ParamVector> displacements;
        displacements.reserve(n_tasks);
        for (const AdaptResult& a : adapts) displacements.push_back(a.displacement);
        weights = agreement_weights(displacements, config.eps_degenerate);
      } else {
        weights = uniform_weights(n_tasks);
      }

      theta = maml ? outer_update_maml(theta, adapts, weights, config.outer_rate)
                   : outer_update_reptile(theta, adapts, weights, config.outer_rate);

      double loss_sum = 0.0;
      for (const AdaptResult& a : adapts) loss_sum += a.final_inner_loss;

      TrainTraceRecord rec;
      rec.iteration = it;
      rec.weights = std::move(weights.weights);
      rec.denominator = weights.denominator;
      rec.degenerate = weights.degenerate;
      rec.mean_inner_loss = loss_sum / static_cast<double>(n_tasks);
      rec.param_norm = l2_norm(theta);
      result.trace.records.push_back(std::move(rec));
    } catch (const NumericError& e) {
      throw NumericError("outer iteration " + std::to_string(it) + ": " + e.what());
    }
  }

  result.params = std::move(theta);
  return result;
}

}  // namespace metagree::meta
