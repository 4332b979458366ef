#include <CLI11.hpp>
#include <string>

#include "commands.hpp"

namespace cli = metagree::cli;

namespace {

// "a,phi" -> pair of doubles.
bool parse_task_pair(const std::string& text, std::pair<double, double>& out) {
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos) return false;
  try {
    std::size_t used = 0;
    out.first = std::stod(text.substr(0, comma), &used);
    if (used != comma) return false;
    const std::string rest = text.substr(comma + 1);
    out.second = std::stod(rest, &used);
    return used == rest.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_seed_list(const std::string& text, std::vector<std::uint64_t>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string field = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(field, &used));
      if (used != field.size()) return false;
    } catch (const std::exception&) {
      return false;
    }
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return !out.empty();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metagree: gradient-agreement meta-learning experiments"};
  app.require_subcommand(1);

  cli::TrainOptions train_opt;
  CLI::App* train = app.add_subcommand("train", "Train a meta-initialization from a config file");
  train->add_option("config", train_opt.config_path, "Experiment config JSON")->required();
  train->add_option("--out", train_opt.out_dir, "Output directory (overrides output_dir)");
  train->add_option("--resume", train_opt.resume_path, "Checkpoint to continue from");
  train->add_option("--threads", train_opt.threads, "Worker threads (default METAGREE_THREADS or 1)");

  cli::EvalOptions eval_opt;
  std::uint64_t eval_seed = 0;
  std::size_t eval_n_tasks = 0;
  CLI::App* eval = app.add_subcommand("eval", "Meta-test a checkpoint on unseen tasks");
  eval->add_option("checkpoint", eval_opt.checkpoint_path, "Checkpoint file")->required();
  eval->add_option("config", eval_opt.config_path, "Experiment config JSON")->required();
  CLI::Option* n_tasks_opt = eval->add_option("--n-tasks", eval_n_tasks, "Held-out task count");
  CLI::Option* seed_opt = eval->add_option("--seed", eval_seed, "Evaluation seed");
  eval->add_option("--out", eval_opt.out_dir, "Report directory (default: checkpoint's)");
  eval->add_option("--threads", eval_opt.threads, "Worker threads");

  cli::WeightsOptions weights_opt;
  CLI::App* weights = app.add_subcommand("weights", "Agreement weights for a gradient matrix");
  weights->add_option("gradients", weights_opt.gradients_path, "CSV rows or JSON array-of-arrays")
      ->required();

  cli::CurvesOptions curves_opt;
  std::string task_text;
  CLI::App* curves = app.add_subcommand("curves", "Export before/after sine fits as CSV");
  curves->add_option("checkpoint", curves_opt.checkpoint_path, "Regression checkpoint")->required();
  curves->add_option("--config", curves_opt.config_path, "Config (default: sidecar config.json)");
  curves->add_option("--task", task_text, "Fixed task as \"amplitude,phase\"");
  curves->add_option("--seed", curves_opt.seed, "Sampling seed");
  curves->add_option("--out", curves_opt.out_path, "Output CSV path (default curves.csv)");
  curves->add_option("--grid", curves_opt.grid_resolution, "Grid resolution (default 201)");

  cli::CompareOptions compare_opt;
  std::string seeds_text;
  CLI::App* compare = app.add_subcommand("compare", "Train and meta-test several configs");
  compare->add_option("configs", compare_opt.config_paths, "Experiment config JSONs")
      ->required()
      ->expected(-2);
  compare->add_option("--seeds", seeds_text, "Comma-separated training seeds (default 1,2,3)");
  compare->add_option("--out", compare_opt.out_dir, "Table directory (default .)");
  compare->add_option("--threads", compare_opt.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (train->parsed()) return cli::cmd_train(train_opt);

  if (eval->parsed()) {
    if (n_tasks_opt->count() > 0) eval_opt.n_tasks = eval_n_tasks;
    if (seed_opt->count() > 0) eval_opt.seed = eval_seed;
    return cli::cmd_eval(eval_opt);
  }

  if (weights->parsed()) return cli::cmd_weights(weights_opt);

  if (curves->parsed()) {
    if (!task_text.empty()) {
      std::pair<double, double> task;
      if (!parse_task_pair(task_text, task)) {
        std::fprintf(stderr, "error: --task wants \"amplitude,phase\", got \"%s\"\n",
                     task_text.c_str());
        return cli::kExitUsage;
      }
      curves_opt.task = task;
    }
    return cli::cmd_curves(curves_opt);
  }

  if (compare->parsed()) {
    if (!seeds_text.empty() && !parse_seed_list(seeds_text, compare_opt.seeds)) {
      std::fprintf(stderr, "error: --seeds wants comma-separated integers, got \"%s\"\n",
                   seeds_text.c_str());
      return cli::kExitUsage;
    }
    return cli::cmd_compare(compare_opt);
  }

  return cli::kExitUsage;
}
