#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "pima/alignment/alignment.hpp"
#include "pima/data/dataset.hpp"
#include "pima/data/split.hpp"
#include "pima/model/model.hpp"
#include "pima/train/trainer.hpp"

namespace pima::cli {

/// Configuration file contents. JSON with the sections model, loss, train,
/// data and scenario; every key is optional, unknown keys are rejected.
struct RunConfig {
  model::ModelConfig model;
  alignment::LossConfig loss;
  train::TrainConfig train;  // model/loss fields are taken from above
  data::GeneratorConfig data;
  std::uint64_t data_seed = 0;
  data::Scenario scenario = data::Scenario::S1_1;

  /// The training config with the model and loss sections folded in.
  train::TrainConfig training() const;
};

/// Throws ConfigError naming the offending key.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// The effective configuration, in the file format.
std::string to_json(const RunConfig& config);

}  // namespace pima::cli
