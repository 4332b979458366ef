#include "metagree/config.hpp"

#include <cmath>
#include <initializer_list>

#include "json.hpp"
#include "metagree/io.hpp"

namespace metagree {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

const json& require_key(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing key \"" + std::string(key) + "\" in " + where);
  return *it;
}

double as_positive_real(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  const double x = v.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(what + " must be positive and finite");
  return x;
}

std::size_t as_count(const json& v, const std::string& what) {
  if (!v.is_number_unsigned()) throw ConfigError(what + " must be a non-negative integer");
  return v.get<std::size_t>();
}

std::size_t as_positive_count(const json& v, const std::string& what) {
  const std::size_t n = as_count(v, what);
  if (n == 0) throw ConfigError(what + " must be >= 1");
  return n;
}

NetworkConfig parse_network(const json& obj) {
  reject_unknown_keys(obj, {"layers", "hidden_activation", "output_activation"}, "network");
  NetworkConfig net;
  const json& layers = require_key(obj, "layers", "network");
  if (!layers.is_array() || layers.size() < 2) {
    throw ConfigError("network.layers must be an array of at least 2 sizes");
  }
  for (const json& s : layers) net.layers.push_back(as_positive_count(s, "network.layers entry"));
  if (obj.contains("hidden_activation")) {
    const std::string s = obj["hidden_activation"].get<std::string>();
    if (s == "tanh") net.hidden_activation = HiddenActivation::tanh;
    else if (s == "relu") net.hidden_activation = HiddenActivation::relu;
    else throw ConfigError("network.hidden_activation must be \"tanh\" or \"relu\"");
  }
  if (obj.contains("output_activation")) {
    const std::string s = obj["output_activation"].get<std::string>();
    if (s == "identity") net.output_activation = OutputActivation::identity;
    else if (s == "softmax") net.output_activation = OutputActivation::softmax;
    else throw ConfigError("network.output_activation must be \"identity\" or \"softmax\"");
  }
  return net;
}

TaskFamilyConfig parse_family(const json& obj) {
  const std::string kind = require_key(obj, "kind", "task_family").get<std::string>();
  if (kind == "sine") {
    reject_unknown_keys(obj, {"kind", "query_points"}, "task_family (sine)");
    SineFamilyConfig f;
    if (obj.contains("query_points"))
      f.query_points = as_positive_count(obj["query_points"], "task_family.query_points");
    return f;
  }
  if (kind == "synthetic") {
    reject_unknown_keys(obj, {"kind", "n_way", "k_shot", "query_per_class", "dim"},
                        "task_family (synthetic)");
    SyntheticFamilyConfig f;
    f.n_way = as_positive_count(require_key(obj, "n_way", "task_family"), "task_family.n_way");
    f.k_shot = as_positive_count(require_key(obj, "k_shot", "task_family"), "task_family.k_shot");
    f.query_per_class = as_positive_count(require_key(obj, "query_per_class", "task_family"),
                                          "task_family.query_per_class");
    f.dim = as_positive_count(require_key(obj, "dim", "task_family"), "task_family.dim");
    return f;
  }
  if (kind == "omniglot") {
    reject_unknown_keys(obj, {"kind", "root", "image_side", "n_way", "k_shot", "query_per_class"},
                        "task_family (omniglot)");
    OmniglotFamilyConfig f;
    f.root = require_key(obj, "root", "task_family").get<std::string>();
    if (obj.contains("image_side"))
      f.image_side = as_positive_count(obj["image_side"], "task_family.image_side");
    f.n_way = as_positive_count(require_key(obj, "n_way", "task_family"), "task_family.n_way");
    f.k_shot = as_positive_count(require_key(obj, "k_shot", "task_family"), "task_family.k_shot");
    f.query_per_class = as_positive_count(require_key(obj, "query_per_class", "task_family"),
                                          "task_family.query_per_class");
    return f;
  }
  throw ConfigError("task_family.kind must be \"sine\", \"synthetic\" or \"omniglot\"");
}

struct FamilyDims {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t support = 0;
  bool classification = false;
};

FamilyDims family_dims(const TaskFamilyConfig& family, std::size_t examples_per_task) {
  FamilyDims d;
  if (std::holds_alternative<SineFamilyConfig>(family)) {
    d.input = 1;
    d.output = 1;
    d.support = examples_per_task;
  } else if (const auto* syn = std::get_if<SyntheticFamilyConfig>(&family)) {
    d.input = syn->dim;
    d.output = syn->n_way;
    d.support = syn->n_way * syn->k_shot;
    d.classification = true;
  } else {
    const auto& omni = std::get<OmniglotFamilyConfig>(family);
    d.input = omni.image_side * omni.image_side;
    d.output = omni.n_way;
    d.support = omni.n_way * omni.k_shot;
    d.classification = true;
  }
  return d;
}

}  // namespace

std::string ExperimentFile::family_kind() const {
  if (std::holds_alternative<SineFamilyConfig>(family)) return "sine";
  if (std::holds_alternative<SyntheticFamilyConfig>(family)) return "synthetic";
  return "omniglot";
}

MlpSpec ExperimentFile::make_spec() const {
  MlpSpec spec;
  spec.layer_sizes = network.layers;
  spec.hidden_activation = network.hidden_activation;
  spec.output_activation = network.output_activation;
  return spec;
}

std::unique_ptr<TaskSource> ExperimentFile::make_task_source() const {
  if (const auto* sine = std::get_if<SineFamilyConfig>(&family)) {
    return std::make_unique<SineTaskSource>(meta.examples_per_task, sine->query_points);
  }
  if (const auto* syn = std::get_if<SyntheticFamilyConfig>(&family)) {
    return std::make_unique<SyntheticTaskSource>(syn->n_way, syn->k_shot, syn->query_per_class,
                                                 syn->dim);
  }
  const auto& omni = std::get<OmniglotFamilyConfig>(family);
  auto store = std::make_shared<const OmniglotStore>(load_omniglot(omni.root, omni.image_side));
  return std::make_unique<OmniglotTaskSource>(std::move(store), omni.n_way, omni.k_shot,
                                              omni.query_per_class);
}

ExperimentFile parse_experiment_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(doc,
                      {"variant", "inner_rate", "outer_rate", "inner_steps", "tasks_per_batch",
                       "outer_iterations", "examples_per_task", "seed", "eps_degenerate",
                       "network", "task_family", "eval", "output_dir"},
                      "config root");

  ExperimentFile exp;
  const std::string variant = require_key(doc, "variant", "config root").get<std::string>();
  const auto parsed = meta::variant_from_name(variant);
  if (!parsed) {
    throw ConfigError("variant must be one of reptile, ga_reptile, fomaml, ga_fomaml");
  }
  exp.meta.variant = *parsed;
  exp.meta.inner_rate = as_positive_real(require_key(doc, "inner_rate", "config root"), "inner_rate");
  exp.meta.outer_rate = as_positive_real(require_key(doc, "outer_rate", "config root"), "outer_rate");
  exp.meta.inner_steps = as_positive_count(require_key(doc, "inner_steps", "config root"), "inner_steps");
  exp.meta.tasks_per_batch =
      as_positive_count(require_key(doc, "tasks_per_batch", "config root"), "tasks_per_batch");
  exp.meta.outer_iterations =
      as_count(require_key(doc, "outer_iterations", "config root"), "outer_iterations");
  exp.meta.seed = require_key(doc, "seed", "config root").get<std::uint64_t>();
  if (doc.contains("eps_degenerate")) {
    exp.meta.eps_degenerate = as_positive_real(doc["eps_degenerate"], "eps_degenerate");
  }

  exp.family = parse_family(require_key(doc, "task_family", "config root"));
  const bool is_sine = std::holds_alternative<SineFamilyConfig>(exp.family);

  if (doc.contains("examples_per_task")) {
    exp.meta.examples_per_task = as_positive_count(doc["examples_per_task"], "examples_per_task");
  } else if (is_sine) {
    throw ConfigError("missing key \"examples_per_task\" in config root");
  }
  const FamilyDims dims = family_dims(exp.family, exp.meta.examples_per_task);
  if (!is_sine) {
    if (!doc.contains("examples_per_task")) {
      exp.meta.examples_per_task = dims.support;
    } else if (exp.meta.examples_per_task != dims.support) {
      throw ConfigError("examples_per_task must equal n_way*k_shot (" +
                        std::to_string(dims.support) + ") for classification families");
    }
  }
  if (exp.meta.examples_per_task < exp.meta.inner_steps) {
    throw ConfigError("examples_per_task must be >= inner_steps so every sub-batch is non-empty");
  }

  if (doc.contains("network")) {
    exp.network = parse_network(doc["network"]);
  } else {
    exp.network.layers = {dims.input, 64, 64, dims.output};
    exp.network.hidden_activation = HiddenActivation::tanh;
    exp.network.output_activation =
        dims.classification ? OutputActivation::softmax : OutputActivation::identity;
  }
  if (exp.network.layers.front() != dims.input || exp.network.layers.back() != dims.output) {
    throw ConfigError("network layers " + std::to_string(exp.network.layers.front()) + "->" +
                      std::to_string(exp.network.layers.back()) +
                      " do not match the task family dims " + std::to_string(dims.input) + "->" +
                      std::to_string(dims.output));
  }
  if (dims.classification && exp.network.output_activation != OutputActivation::softmax) {
    throw ConfigError("classification families need output_activation \"softmax\"");
  }
  if (!dims.classification && exp.network.output_activation != OutputActivation::identity) {
    throw ConfigError("regression families need output_activation \"identity\"");
  }

  if (doc.contains("eval")) {
    const json& ev = doc["eval"];
    reject_unknown_keys(ev, {"n_tasks", "seed"}, "eval");
    if (ev.contains("n_tasks")) exp.eval.n_tasks = as_positive_count(ev["n_tasks"], "eval.n_tasks");
    if (ev.contains("seed")) exp.eval.seed = ev["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output_dir")) exp.output_dir = doc["output_dir"].get<std::string>();

  exp.meta.validate();
  return exp;
}

ExperimentFile load_experiment_file(const std::filesystem::path& path) {
  try {
    return parse_experiment_json(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string experiment_to_json(const ExperimentFile& exp) {
  json doc;
  doc["variant"] = meta::variant_name(exp.meta.variant);
  doc["inner_rate"] = exp.meta.inner_rate;
  doc["outer_rate"] = exp.meta.outer_rate;
  doc["inner_steps"] = exp.meta.inner_steps;
  doc["tasks_per_batch"] = exp.meta.tasks_per_batch;
  doc["outer_iterations"] = exp.meta.outer_iterations;
  doc["examples_per_task"] = exp.meta.examples_per_task;
  doc["seed"] = exp.meta.seed;
  doc["eps_degenerate"] = exp.meta.eps_degenerate;

  json net;
  net["layers"] = exp.network.layers;
  net["hidden_activation"] =
      exp.network.hidden_activation == HiddenActivation::tanh ? "tanh" : "relu";
  net["output_activation"] =
      exp.network.output_activation == OutputActivation::identity ? "identity" : "softmax";
  doc["network"] = std::move(net);

  json fam;
  if (const auto* sine = std::get_if<SineFamilyConfig>(&exp.family)) {
    fam["kind"] = "sine";
    fam["query_points"] = sine->query_points;
  } else if (const auto* syn = std::get_if<SyntheticFamilyConfig>(&exp.family)) {
    fam["kind"] = "synthetic";
    fam["n_way"] = syn->n_way;
    fam["k_shot"] = syn->k_shot;
    fam["query_per_class"] = syn->query_per_class;
    fam["dim"] = syn->dim;
  } else {
    const auto& omni = std::get<OmniglotFamilyConfig>(exp.family);
    fam["kind"] = "omniglot";
    fam["root"] = omni.root;
    fam["image_side"] = omni.image_side;
    fam["n_way"] = omni.n_way;
    fam["k_shot"] = omni.k_shot;
    fam["query_per_class"] = omni.query_per_class;
  }
  doc["task_family"] = std::move(fam);

  doc["eval"] = {{"n_tasks", exp.eval.n_tasks}, {"seed", exp.eval.seed}};
  doc["output_dir"] = exp.output_dir;
  return doc.dump(2) + "\n";
}

}  // namespace metagree
