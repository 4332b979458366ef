#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metagree/meta.hpp"
#include "metagree/numcore.hpp"
#include "metagree/tasks.hpp"

namespace metagree::evaluate {

struct TaskEval {
  std::string descriptor;
  double loss = 0.0;
  std::optional<double> accuracy;  // classification only
};

struct EvalProtocol {
  std::size_t inner_steps = 0;
  double inner_rate = 0.0;
  std::size_t support_size = 0;
  std::size_t query_size = 0;
};

struct EvalReport {
  std::vector<TaskEval> per_task;
  double mean_loss = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n)
  std::optional<double> mean_accuracy;
  std::optional<double> accuracy_std_error;
  std::size_t n_tasks = 0;
  EvalProtocol protocol;
};

// Fraction of query rows whose argmax prediction hits the labeled class;
// ties go to the lowest index on both sides.
double classification_accuracy(const MlpSpec& spec, const ParamVector& params,
                               const Batch& query);

// Meta-test protocol: per task, sample support and query, adapt inner_steps
// on the support (same sub-batch splitting as training), then score the
// query at the adapted parameters. theta itself is never touched. Task
// streams derive from (eval_seed, task index): deterministic for any thread
// count.
EvalReport meta_test(const ParamVector& theta, const MlpSpec& spec, const TaskSource& source,
                     std::size_t n_tasks, std::size_t inner_steps, double inner_rate,
                     std::uint64_t eval_seed, int threads = 1);

// Dense-grid view of one sine task before/after adaptation, for plotting.
struct CurveExport {
  std::vector<double> grid;
  std::vector<double> true_curve;
  std::vector<double> pre_adaptation;
  std::vector<double> post_adaptation;
  std::vector<std::pair<double, double>> support_points;
};

CurveExport export_curves(const ParamVector& theta_before, const ParamVector& theta_after,
                          const MlpSpec& spec, const SineTask& task, const Batch& support,
                          std::size_t grid_resolution);

std::string curves_to_csv(const CurveExport& curves);          // x,y_true,y_pre,y_post
std::string support_points_to_csv(const CurveExport& curves);  // x,y

struct CompareEntry {
  std::string label;
  meta::MetaConfig config;
};

struct CompareCell {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double mean_loss = 0.0;
  std::optional<double> mean_accuracy;
};

struct CompareRow {
  std::string label;
  std::string variant;
  std::vector<CompareCell> cells;
  double loss_mean = 0.0;
  double loss_std = 0.0;
  std::optional<double> accuracy_mean;
  std::optional<double> accuracy_std;
};

struct ComparisonTable {
  std::vector<CompareRow> rows;
  std::vector<std::uint64_t> seeds;
  std::size_t eval_tasks = 0;
  std::uint64_t eval_seed = 0;
};

// Trains every (entry, seed) pair (the seed overrides the config's), then
// meta-tests all of them on the same held-out task stream. A failing cell is
// recorded with its error instead of aborting the table.
ComparisonTable compare_variants(const std::vector<CompareEntry>& entries,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TaskSource& source, const MlpSpec& spec,
                                 std::size_t eval_tasks, std::uint64_t eval_seed,
                                 int threads = 1);

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string table_to_json(const ComparisonTable& table);
std::string table_to_csv(const ComparisonTable& table);

}  // namespace metagree::evaluate
