#include "pima/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pima/error.hpp"

namespace pima::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads typed keys from one section and rejects anything left over.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    const auto it = root.find(name);
    if (it == root.end()) return;
    if (!it->is_object()) throw ConfigError("config: section '" + name_ + "' must be an object");
    obj_ = &*it;
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    if (!obj_) return;
    const auto it = obj_->find(key);
    if (it == obj_->end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected true/false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<long long>() < 0)) {
          throw ConfigError("expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      target = it->get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) throw ConfigError("config: unknown key " + name_ + "." + key);
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

train::TrainConfig RunConfig::training() const {
  train::TrainConfig t = train;
  t.model = model;
  t.loss = loss;
  return t;
}

RunConfig parse_run_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> sections = {"model", "loss", "train", "data", "scenario"};
  for (const auto& [key, value] : root.items()) {
    if (!sections.count(key)) throw ConfigError("config: unknown section '" + key + "'");
  }
  RunConfig c;

  Section model(root, "model");
  model.read("token_width", c.model.token_width);
  model.read("ff_hidden", c.model.ff_hidden);
  model.read("sage_hidden", c.model.sage_hidden);
  model.read("sage_layers", c.model.sage_layers);
  model.read("projection_hidden", c.model.projection_hidden);
  model.read("projection_width", c.model.projection_width);
  model.read("use_graph", c.model.use_graph);
  model.finish();

  Section loss(root, "loss");
  loss.read("margin", c.loss.margin);
  loss.read("balance", c.loss.balance);
  loss.read("cosine_eps", c.loss.cosine_eps);
  loss.read("threshold", c.loss.threshold);
  loss.finish();
  c.loss.validate();

  Section train(root, "train");
  std::string objective(model::to_string(c.train.objective));
  train.read("epochs", c.train.epochs);
  train.read("batch_size", c.train.batch_size);
  train.read("seed", c.train.seed);
  train.read("lr", c.train.optimizer.lr);
  train.read("beta1", c.train.optimizer.beta1);
  train.read("beta2", c.train.optimizer.beta2);
  train.read("eps", c.train.optimizer.eps);
  train.read("weight_decay", c.train.optimizer.weight_decay);
  train.read("checkpoint_every", c.train.checkpoint_every);
  train.read("objective", objective);
  train.finish();
  c.train.objective = model::parse_objective(objective);
  c.train.optimizer.validate();

  Section data(root, "data");
  data.read("seed", c.data_seed);
  data.read("num_classes", c.data.num_classes);
  data.read("num_prescriptions", c.data.num_prescriptions);
  data.read("min_pills", c.data.min_pills);
  data.read("max_pills", c.data.max_pills);
  data.read("min_distractors", c.data.min_distractors);
  data.read("max_distractors", c.data.max_distractors);
  data.read("feature_dim", c.data.feature_dim);
  data.read("noise_sigma", c.data.noise_sigma);
  data.read("row_spacing", c.data.row_spacing);
  data.read("jitter", c.data.jitter);
  data.finish();
  c.data.validate();
  c.model.feature_width = static_cast<std::size_t>(c.data.feature_dim);

  if (const auto it = root.find("scenario"); it != root.end()) {
    if (!it->is_string()) throw ConfigError("config: scenario must be a string such as \"1-1\"");
    c.scenario = data::parse_scenario(it->get<std::string>());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_run_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_json(const RunConfig& c) {
  ordered_json j;
  j["model"] = {{"token_width", c.model.token_width},
                {"ff_hidden", c.model.ff_hidden},
                {"sage_hidden", c.model.sage_hidden},
                {"sage_layers", c.model.sage_layers},
                {"projection_hidden", c.model.projection_hidden},
                {"projection_width", c.model.projection_width},
                {"use_graph", c.model.use_graph}};
  j["loss"] = {{"margin", c.loss.margin},
               {"balance", c.loss.balance},
               {"cosine_eps", c.loss.cosine_eps},
               {"threshold", c.loss.threshold}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"seed", c.train.seed},
                {"lr", c.train.optimizer.lr},
                {"beta1", c.train.optimizer.beta1},
                {"beta2", c.train.optimizer.beta2},
                {"eps", c.train.optimizer.eps},
                {"weight_decay", c.train.optimizer.weight_decay},
                {"checkpoint_every", c.train.checkpoint_every},
                {"objective", std::string(model::to_string(c.train.objective))}};
  j["data"] = {{"seed", c.data_seed},
               {"num_classes", c.data.num_classes},
               {"num_prescriptions", c.data.num_prescriptions},
               {"min_pills", c.data.min_pills},
               {"max_pills", c.data.max_pills},
               {"min_distractors", c.data.min_distractors},
               {"max_distractors", c.data.max_distractors},
               {"feature_dim", c.data.feature_dim},
               {"noise_sigma", c.data.noise_sigma},
               {"row_spacing", c.data.row_spacing},
               {"jitter", c.data.jitter}};
  j["scenario"] = std::string(data::to_string(c.scenario));
  return j.dump(2) + "\n";
}

}  // namespace pima::cli
