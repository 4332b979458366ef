#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <variant>

#include "metagree/meta.hpp"
#include "metagree/numcore.hpp"
#include "metagree/tasks.hpp"

namespace metagree {

struct NetworkConfig {
  std::vector<std::size_t> layers;
  HiddenActivation hidden_activation = HiddenActivation::tanh;
  OutputActivation output_activation = OutputActivation::identity;
};

struct SineFamilyConfig {
  std::size_t query_points = 50;
};

struct SyntheticFamilyConfig {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t query_per_class = 0;
  std::size_t dim = 0;
};

struct OmniglotFamilyConfig {
  std::string root;
  std::size_t image_side = 14;
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t query_per_class = 0;
};

using TaskFamilyConfig =
    std::variant<SineFamilyConfig, SyntheticFamilyConfig, OmniglotFamilyConfig>;

struct EvalConfig {
  std::size_t n_tasks = 1000;
  std::uint64_t seed = 0;
};

// The on-disk experiment description. Parsing is schema-strict: any unknown
// key anywhere in the document is rejected, so a typo in a rate name cannot
// silently fall back to a default.
struct ExperimentFile {
  meta::MetaConfig meta;
  NetworkConfig network;
  TaskFamilyConfig family;
  EvalConfig eval;
  std::string output_dir;

  std::string family_kind() const;
  MlpSpec make_spec() const;
  // Builds the task source; loads the Omniglot store from disk when needed.
  std::unique_ptr<TaskSource> make_task_source() const;
};

ExperimentFile parse_experiment_json(const std::string& text);
ExperimentFile load_experiment_file(const std::filesystem::path& path);

// Canonical JSON form (sorted keys, 2-space indent); what cmd_train writes
// as the checkpoint sidecar.
std::string experiment_to_json(const ExperimentFile& exp);

}  // namespace metagree
