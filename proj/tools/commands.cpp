#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>

#include "json.hpp"
#include "metagree/checkpoint.hpp"
#include "metagree/config.hpp"
#include "metagree/evaluate.hpp"
#include "metagree/io.hpp"
#include "metagree/meta.hpp"
#include "metagree/parallel.hpp"
#include "metagree/rng.hpp"

namespace metagree::cli {

namespace fs = std::filesystem;

namespace {

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

// One gradient per row; every row must have the same width.
std::vector<ParamVector> read_gradients_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> rows;

  const bool looks_like_json = [&] {
    for (char c : text) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
      return c == '[';
    }
    return false;
  }();

  if (looks_like_json) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) throw ConfigError(path.string() + ": expected an array of arrays");
    for (const auto& row : doc) {
      if (!row.is_array()) throw ConfigError(path.string() + ": expected an array of arrays");
      std::vector<double> values;
      for (const auto& v : row) {
        if (!v.is_number()) throw ConfigError(path.string() + ": gradients must be numbers");
        values.push_back(v.get<double>());
      }
      rows.push_back(std::move(values));
    }
  } else {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<double> values;
      std::size_t field_start = 0;
      while (true) {
        const std::size_t comma = line.find(',', field_start);
        const std::string field =
            line.substr(field_start, comma == std::string::npos ? std::string::npos
                                                                : comma - field_start);
        try {
          std::size_t consumed = 0;
          const double v = std::stod(field, &consumed);
          while (consumed < field.size() &&
                 (field[consumed] == ' ' || field[consumed] == '\t'))
            ++consumed;
          if (consumed != field.size()) throw std::invalid_argument(field);
          values.push_back(v);
        } catch (const std::exception&) {
          throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                            ": not a number: \"" + field + "\"");
        }
        if (comma == std::string::npos) break;
        field_start = comma + 1;
      }
      rows.push_back(std::move(values));
    }
  }

  if (rows.empty()) throw ConfigError(path.string() + ": no gradient rows");
  const std::size_t width = rows.front().size();
  std::vector<ParamVector> gradients;
  gradients.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      throw ConfigError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                        std::to_string(rows[i].size()) + " entries, expected " +
                        std::to_string(width));
    }
    gradients.emplace_back(std::move(rows[i]));
  }
  return gradients;
}

void check_checkpoint_matches(const Checkpoint& ck, const MlpSpec& spec,
                              const std::string& what) {
  if (ck.layer_sizes != spec.layer_sizes) {
    std::string got, want;
    for (std::size_t s : ck.layer_sizes) got += (got.empty() ? "" : "-") + std::to_string(s);
    for (std::size_t s : spec.layer_sizes) want += (want.empty() ? "" : "-") + std::to_string(s);
    throw ConfigError(what + ": checkpoint layers [" + got + "] do not match config [" + want + "]");
  }
}

}  // namespace

int cmd_train(const TrainOptions& opt) {
  return run_guarded([&] {
    const ExperimentFile exp = load_experiment_file(opt.config_path);
    const std::string out_dir = !opt.out_dir.empty() ? opt.out_dir : exp.output_dir;
    if (out_dir.empty()) {
      throw ConfigError("no output directory: set output_dir in the config or pass --out");
    }
    fs::create_directories(out_dir);

    const MlpSpec spec = exp.make_spec();
    const auto source = exp.make_task_source();

    std::optional<ParamVector> initial;
    if (!opt.resume_path.empty()) {
      Checkpoint ck = load_checkpoint(opt.resume_path);
      check_checkpoint_matches(ck, spec, "--resume");
      initial = std::move(ck.params);
    }

    const int threads = resolve_threads(opt.threads);
    std::cerr << "train: variant=" << meta::variant_name(exp.meta.variant)
              << " iterations=" << exp.meta.outer_iterations << " seed=" << exp.meta.seed
              << " threads=" << threads << "\n";

    const meta::TrainResult result =
        meta::train(exp.meta, *source, spec, std::move(initial), threads);

    const fs::path dir(out_dir);
    save_checkpoint(dir / "checkpoint.mgre", spec.layer_sizes, result.params);
    write_text_file(dir / "config.json", experiment_to_json(exp));
    write_text_file(dir / "trace.csv", meta::trace_to_csv(result.trace));

    if (!result.trace.records.empty()) {
      std::cerr << "train: done, final mean inner loss "
                << result.trace.records.back().mean_inner_loss << "\n";
    } else {
      std::cerr << "train: done (0 iterations, wrote fresh init)\n";
    }
    std::cerr << "train: wrote " << (dir / "checkpoint.mgre").string() << "\n";
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opt) {
  return run_guarded([&] {
    const ExperimentFile exp = load_experiment_file(opt.config_path);
    const Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    const MlpSpec spec = exp.make_spec();
    check_checkpoint_matches(ck, spec, "eval");
    const auto source = exp.make_task_source();

    const std::size_t n_tasks = opt.n_tasks.value_or(exp.eval.n_tasks);
    const std::uint64_t seed = opt.seed.value_or(exp.eval.seed);
    const int threads = resolve_threads(opt.threads);

    const evaluate::EvalReport report =
        evaluate::meta_test(ck.params, spec, *source, n_tasks, exp.meta.inner_steps,
                            exp.meta.inner_rate, seed, threads);

    std::cout << "mean_loss " << format_double(report.mean_loss) << " std_error "
              << format_double(report.std_error) << " n_tasks " << report.n_tasks << "\n";
    if (report.mean_accuracy) {
      std::cout << "mean_accuracy " << format_double(*report.mean_accuracy) << " std_error "
                << format_double(*report.accuracy_std_error) << "\n";
    }

    const fs::path dir = !opt.out_dir.empty()
                             ? fs::path(opt.out_dir)
                             : fs::path(opt.checkpoint_path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    write_text_file(dir / "report.json", evaluate::report_to_json(report));
    write_text_file(dir / "report.csv", evaluate::report_to_csv(report));
    std::cerr << "eval: wrote " << (dir / "report.json").string() << "\n";
    return kExitOk;
  });
}

int cmd_weights(const WeightsOptions& opt) {
  return run_guarded([&] {
    const std::vector<ParamVector> gradients = read_gradients_file(opt.gradients_path);
    const AgreementWeights weights = agreement_weights(gradients, 1e-12);

    nlohmann::json out;
    out["weights"] = weights.weights;
    out["denominator"] = weights.denominator;
    out["degenerate"] = weights.degenerate;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  });
}

int cmd_curves(const CurvesOptions& opt) {
  return run_guarded([&] {
    const Checkpoint ck = load_checkpoint(opt.checkpoint_path);
    const fs::path config_path = !opt.config_path.empty()
                                     ? fs::path(opt.config_path)
                                     : fs::path(opt.checkpoint_path).parent_path() / "config.json";
    const ExperimentFile exp = load_experiment_file(config_path);
    if (exp.family_kind() != "sine") {
      throw ConfigError("curves needs a sine-regression checkpoint, got task family \"" +
                        exp.family_kind() + "\"");
    }
    const MlpSpec spec = exp.make_spec();
    check_checkpoint_matches(ck, spec, "curves");

    Rng rng(derive_seed(opt.seed, streams::curves, 0, 0));
    SineTask task;
    if (opt.task) {
      task.amplitude = opt.task->first;
      task.phase = opt.task->second;
      if (!(task.amplitude >= 0.1 && task.amplitude <= 5.0) ||
          !(task.phase >= 0.0 && task.phase < 2.0 * 3.14159265358979323846)) {
        throw ConfigError("--task wants amplitude in [0.1,5] and phase in [0,2pi)");
      }
    } else {
      task = sample_sine_task(rng);
    }

    const Batch support = sine_batch(task, exp.meta.examples_per_task, rng);
    const TaskBatchPlan plan = split_sub_batches(support, exp.meta.inner_steps, rng);
    const meta::AdaptResult adapted =
        meta::adapt(spec, ck.params, plan, exp.meta.inner_rate, exp.meta.inner_steps,
                    /*compute_outer_gradient=*/false);
    const evaluate::CurveExport curves = evaluate::export_curves(
        ck.params, adapted.adapted_params, spec, task, support, opt.grid_resolution);

    fs::path out_path(opt.out_path);
    fs::path support_path = out_path;
    support_path.replace_filename(out_path.stem().string() + "_support" +
                                  out_path.extension().string());
    write_text_file(out_path, evaluate::curves_to_csv(curves));
    write_text_file(support_path, evaluate::support_points_to_csv(curves));
    std::cerr << "curves: task amplitude=" << task.amplitude << " phase=" << task.phase
              << ", wrote " << out_path.string() << " and " << support_path.string() << "\n";
    return kExitOk;
  });
}

int cmd_compare(const CompareOptions& opt) {
  return run_guarded([&] {
    if (opt.config_paths.size() < 2) throw ConfigError("compare needs at least 2 config files");
    if (opt.seeds.empty()) throw ConfigError("compare needs at least 1 seed");

    std::vector<ExperimentFile> exps;
    std::vector<evaluate::CompareEntry> entries;
    for (const std::string& path : opt.config_paths) {
      ExperimentFile exp = load_experiment_file(path);
      evaluate::CompareEntry entry;
      entry.label = fs::path(path).stem().string();
      entry.config = exp.meta;
      entries.push_back(std::move(entry));
      exps.push_back(std::move(exp));
    }

    // All configs must describe the same task family, network and eval block,
    // otherwise the shared held-out stream would not be comparable.
    auto shared_block = [](const ExperimentFile& e) {
      ExperimentFile copy = e;
      copy.meta = meta::MetaConfig{};
      copy.meta.examples_per_task = e.meta.examples_per_task;
      copy.meta.inner_rate = 1.0;
      copy.meta.outer_rate = 1.0;
      copy.output_dir.clear();
      return experiment_to_json(copy);
    };
    for (std::size_t i = 1; i < exps.size(); ++i) {
      if (shared_block(exps[i]) != shared_block(exps.front())) {
        throw ConfigError(opt.config_paths[i] +
                          ": task_family/network/eval/examples_per_task must match " +
                          opt.config_paths.front() + " for a comparison");
      }
    }

    const MlpSpec spec = exps.front().make_spec();
    const auto source = exps.front().make_task_source();
    const int threads = resolve_threads(opt.threads);

    std::cerr << "compare: " << entries.size() << " configs x " << opt.seeds.size()
              << " seeds, eval n_tasks=" << exps.front().eval.n_tasks << "\n";
    const evaluate::ComparisonTable table =
        evaluate::compare_variants(entries, opt.seeds, *source, spec, exps.front().eval.n_tasks,
                                   exps.front().eval.seed, threads);

    fs::create_directories(opt.out_dir);
    write_text_file(fs::path(opt.out_dir) / "table.csv", evaluate::table_to_csv(table));
    write_text_file(fs::path(opt.out_dir) / "table.json", evaluate::table_to_json(table));

    bool any_failed = false;
    for (const evaluate::CompareRow& row : table.rows) {
      std::cout << row.label << " loss " << format_double(row.loss_mean) << " +- "
                << format_double(row.loss_std);
      if (row.accuracy_mean) {
        std::cout << " accuracy " << format_double(*row.accuracy_mean) << " +- "
                  << format_double(row.accuracy_std.value_or(0.0));
      }
      std::cout << "\n";
      for (const evaluate::CompareCell& cell : row.cells) {
        if (cell.failed) {
          any_failed = true;
          std::cerr << "compare: " << row.label << " seed " << cell.seed
                    << " failed: " << cell.error << "\n";
        }
      }
    }
    std::cerr << "compare: wrote " << (fs::path(opt.out_dir) / "table.csv").string() << "\n";
    return any_failed ? kExitNumeric : kExitOk;
  });
}

}  // namespace metagree::cli
