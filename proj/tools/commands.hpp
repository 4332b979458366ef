#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace metagree::cli {

// Exit codes shared by every subcommand: 0 success, 2 usage/validation,
// 3 numeric failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

struct TrainOptions {
  std::string config_path;
  std::string out_dir;      // overrides the config's output_dir when set
  std::string resume_path;  // checkpoint to continue from
  int threads = 0;          // 0: use METAGREE_THREADS or 1
};

struct EvalOptions {
  std::string checkpoint_path;
  std::string config_path;
  std::optional<std::size_t> n_tasks;
  std::optional<std::uint64_t> seed;
  std::string out_dir;  // default: directory containing the checkpoint
  int threads = 0;
};

struct WeightsOptions {
  std::string gradients_path;  // CSV rows or JSON array-of-arrays
};

struct CurvesOptions {
  std::string checkpoint_path;
  std::string config_path;  // default: config.json next to the checkpoint
  std::optional<std::pair<double, double>> task;  // amplitude, phase
  std::uint64_t seed = 0;
  std::string out_path = "curves.csv";
  std::size_t grid_resolution = 201;
};

struct CompareOptions {
  std::vector<std::string> config_paths;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir = ".";
  int threads = 0;
};

int cmd_train(const TrainOptions& opt);
int cmd_eval(const EvalOptions& opt);
int cmd_weights(const WeightsOptions& opt);
int cmd_curves(const CurvesOptions& opt);
int cmd_compare(const CompareOptions& opt);

}  // namespace metagree::cli
