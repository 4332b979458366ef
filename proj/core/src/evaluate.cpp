#include "metagree/evaluate.hpp"

#include <cmath>

#include "json.hpp"
#include "metagree/io.hpp"
#include "metagree/parallel.hpp"
#include "metagree/rng.hpp"

namespace metagree::evaluate {

namespace {

using nlohmann::json;

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;  // sample std, n-1 denominator
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double sq = 0.0;
    for (double x : xs) sq += (x - out.mean) * (x - out.mean);
    out.std_dev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::size_t argmax_row(const Matrix& m, std::size_t row) {
  std::size_t best = 0;
  double best_v = m.at(row, 0);
  for (std::size_t c = 1; c < m.cols; ++c) {
    if (m.at(row, c) > best_v) {
      best_v = m.at(row, c);
      best = c;
    }
  }
  return best;
}

}  // namespace

double classification_accuracy(const MlpSpec& spec, const ParamVector& params,
                               const Batch& query) {
  const Matrix outputs = forward(spec, params, query.inputs);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < outputs.rows; ++r) {
    if (argmax_row(outputs, r) == argmax_row(query.targets, r)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outputs.rows);
}

EvalReport meta_test(const ParamVector& theta, const MlpSpec& spec, const TaskSource& source,
                     std::size_t n_tasks, std::size_t inner_steps, double inner_rate,
                     std::uint64_t eval_seed, int threads) {
  if (n_tasks == 0) throw ShapeError("meta_test: n_tasks must be >= 1");
  EvalReport report;
  report.n_tasks = n_tasks;
  report.protocol = {inner_steps, inner_rate, source.support_size(), source.query_size()};
  report.per_task.resize(n_tasks);

  const bool classify = source.classification();
  parallel_for(n_tasks, threads, [&](std::size_t i) {
    Rng rng(derive_seed(eval_seed, streams::eval_task, 0, i));
    const TaskSample task = source.sample(rng);
    const TaskBatchPlan plan = split_sub_batches(task.adaptation, inner_steps, rng);
    const meta::AdaptResult adapted =
        meta::adapt(spec, theta, plan, inner_rate, inner_steps, /*compute_outer_gradient=*/false);
    TaskEval te;
    te.descriptor = task.descriptor;
    te.loss = batch_loss(spec, adapted.adapted_params, task.query);
    if (classify) {
      te.accuracy = classification_accuracy(spec, adapted.adapted_params, task.query);
    }
    report.per_task[i] = std::move(te);
  });

  std::vector<double> losses;
  losses.reserve(n_tasks);
  for (const TaskEval& te : report.per_task) losses.push_back(te.loss);
  const MeanStd loss_stats = mean_std(losses);
  report.mean_loss = loss_stats.mean;
  report.std_error = loss_stats.std_dev / std::sqrt(static_cast<double>(n_tasks));

  if (classify) {
    std::vector<double> accs;
    accs.reserve(n_tasks);
    for (const TaskEval& te : report.per_task) accs.push_back(*te.accuracy);
    const MeanStd acc_stats = mean_std(accs);
    report.mean_accuracy = acc_stats.mean;
    report.accuracy_std_error = acc_stats.std_dev / std::sqrt(static_cast<double>(n_tasks));
  }
  return report;
}

CurveExport export_curves(const ParamVector& theta_before, const ParamVector& theta_after,
                          const MlpSpec& spec, const SineTask& task, const Batch& support,
                          std::size_t grid_resolution) {
  if (spec.input_dim() != 1 || spec.output_dim() != 1 ||
      spec.output_activation != OutputActivation::identity) {
    throw ShapeError("export_curves: needs a scalar regression network");
  }
  if (grid_resolution < 2) throw ShapeError("export_curves: grid_resolution must be >= 2");

  CurveExport out;
  out.grid.resize(grid_resolution);
  Matrix grid_inputs(grid_resolution, 1);
  const double step = 10.0 / static_cast<double>(grid_resolution - 1);
  for (std::size_t i = 0; i < grid_resolution; ++i) {
    const double x = -5.0 + step * static_cast<double>(i);
    out.grid[i] = x;
    grid_inputs.at(i, 0) = x;
  }
  // Pin the endpoints exactly.
  out.grid.back() = 5.0;
  grid_inputs.at(grid_resolution - 1, 0) = 5.0;

  out.true_curve.resize(grid_resolution);
  for (std::size_t i = 0; i < grid_resolution; ++i) {
    out.true_curve[i] = task.amplitude * std::sin(out.grid[i] + task.phase);
  }
  const Matrix pre = forward(spec, theta_before, grid_inputs);
  const Matrix post = forward(spec, theta_after, grid_inputs);
  out.pre_adaptation.assign(pre.data.begin(), pre.data.end());
  out.post_adaptation.assign(post.data.begin(), post.data.end());

  out.support_points.reserve(support.size());
  for (std::size_t r = 0; r < support.size(); ++r) {
    out.support_points.emplace_back(support.inputs.at(r, 0), support.targets.at(r, 0));
  }
  return out;
}

std::string curves_to_csv(const CurveExport& curves) {
  std::string out = "x,y_true,y_pre,y_post\n";
  for (std::size_t i = 0; i < curves.grid.size(); ++i) {
    out += format_double(curves.grid[i]);
    out += ',';
    out += format_double(curves.true_curve[i]);
    out += ',';
    out += format_double(curves.pre_adaptation[i]);
    out += ',';
    out += format_double(curves.post_adaptation[i]);
    out += '\n';
  }
  return out;
}

std::string support_points_to_csv(const CurveExport& curves) {
  std::string out = "x,y\n";
  for (const auto& [x, y] : curves.support_points) {
    out += format_double(x);
    out += ',';
    out += format_double(y);
    out += '\n';
  }
  return out;
}

ComparisonTable compare_variants(const std::vector<CompareEntry>& entries,
                                 const std::vector<std::uint64_t>& seeds,
                                 const TaskSource& source, const MlpSpec& spec,
                                 std::size_t eval_tasks, std::uint64_t eval_seed,
                                 int threads) {
  if (entries.size() < 2) throw ShapeError("compare_variants: need at least 2 configs");
  if (seeds.empty()) throw ShapeError("compare_variants: need at least 1 seed");

  ComparisonTable table;
  table.seeds = seeds;
  table.eval_tasks = eval_tasks;
  table.eval_seed = eval_seed;

  for (const CompareEntry& entry : entries) {
    CompareRow row;
    row.label = entry.label;
    row.variant = meta::variant_name(entry.config.variant);
    std::vector<double> losses;
    std::vector<double> accs;
    for (std::uint64_t seed : seeds) {
      CompareCell cell;
      cell.seed = seed;
      try {
        meta::MetaConfig cfg = entry.config;
        cfg.seed = seed;
        const meta::TrainResult trained = meta::train(cfg, source, spec, std::nullopt, threads);
        const EvalReport report = meta_test(trained.params, spec, source, eval_tasks,
                                            cfg.inner_steps, cfg.inner_rate, eval_seed, threads);
        cell.mean_loss = report.mean_loss;
        cell.mean_accuracy = report.mean_accuracy;
        losses.push_back(report.mean_loss);
        if (report.mean_accuracy) accs.push_back(*report.mean_accuracy);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      row.cells.push_back(std::move(cell));
    }
    const MeanStd loss_stats = mean_std(losses);
    row.loss_mean = loss_stats.mean;
    row.loss_std = loss_stats.std_dev;
    if (!accs.empty()) {
      const MeanStd acc_stats = mean_std(accs);
      row.accuracy_mean = acc_stats.mean;
      row.accuracy_std = acc_stats.std_dev;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["mean_loss"] = report.mean_loss;
  j["std_error"] = report.std_error;
  j["n_tasks"] = report.n_tasks;
  if (report.mean_accuracy) {
    j["mean_accuracy"] = *report.mean_accuracy;
    j["accuracy_std_error"] = *report.accuracy_std_error;
  }
  j["protocol"] = {{"inner_steps", report.protocol.inner_steps},
                   {"inner_rate", report.protocol.inner_rate},
                   {"support_size", report.protocol.support_size},
                   {"query_size", report.protocol.query_size}};
  json per = json::array();
  for (const TaskEval& te : report.per_task) {
    json t;
    t["descriptor"] = te.descriptor;
    t["loss"] = te.loss;
    if (te.accuracy) t["accuracy"] = *te.accuracy;
    per.push_back(std::move(t));
  }
  j["per_task"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
  const bool classify = report.mean_accuracy.has_value();
  std::string out = classify ? "task_index,descriptor,loss,accuracy\n"
                             : "task_index,descriptor,loss\n";
  for (std::size_t i = 0; i < report.per_task.size(); ++i) {
    const TaskEval& te = report.per_task[i];
    out += std::to_string(i);
    out += ',';
    out += csv_field(te.descriptor);
    out += ',';
    out += format_double(te.loss);
    if (classify) {
      out += ',';
      out += format_double(te.accuracy.value_or(0.0));
    }
    out += '\n';
  }
  return out;
}

std::string table_to_json(const ComparisonTable& table) {
  json j;
  j["seeds"] = table.seeds;
  j["eval_tasks"] = table.eval_tasks;
  j["eval_seed"] = table.eval_seed;
  json rows = json::array();
  for (const CompareRow& row : table.rows) {
    json r;
    r["label"] = row.label;
    r["variant"] = row.variant;
    r["loss_mean"] = row.loss_mean;
    r["loss_std"] = row.loss_std;
    if (row.accuracy_mean) {
      r["accuracy_mean"] = *row.accuracy_mean;
      r["accuracy_std"] = *row.accuracy_std;
    }
    json cells = json::array();
    for (const CompareCell& cell : row.cells) {
      json c;
      c["seed"] = cell.seed;
      c["failed"] = cell.failed;
      if (cell.failed) {
        c["error"] = cell.error;
      } else {
        c["mean_loss"] = cell.mean_loss;
        if (cell.mean_accuracy) c["mean_accuracy"] = *cell.mean_accuracy;
      }
      cells.push_back(std::move(c));
    }
    r["cells"] = std::move(cells);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string table_to_csv(const ComparisonTable& table) {
  std::string out = "label,metric";
  for (std::uint64_t seed : table.seeds) out += ",seed_" + std::to_string(seed);
  out += ",mean,std\n";

  auto emit = [&](const CompareRow& row, const char* metric, bool accuracy) {
    out += csv_field(row.label);
    out += ',';
    out += metric;
    for (const CompareCell& cell : row.cells) {
      out += ',';
      if (cell.failed || (accuracy && !cell.mean_accuracy)) {
        out += "NA";
      } else {
        out += format_double(accuracy ? *cell.mean_accuracy : cell.mean_loss);
      }
    }
    out += ',';
    out += format_double(accuracy ? row.accuracy_mean.value_or(0.0) : row.loss_mean);
    out += ',';
    out += format_double(accuracy ? row.accuracy_std.value_or(0.0) : row.loss_std);
    out += '\n';
  };

  for (const CompareRow& row : table.rows) {
    emit(row, "loss", false);
    if (row.accuracy_mean) emit(row, "accuracy", true);
  }
  return out;
}

}  // namespace metagree::evaluate
