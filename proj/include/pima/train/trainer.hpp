#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pima/alignment/alignment.hpp"
#include "pima/data/dataset.hpp"
#include "pima/model/model.hpp"
#include "pima/train/checkpoint.hpp"
#include "pima/train/optim.hpp"

namespace pima::train {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  alignment::LossConfig loss;
  AdamWConfig optimizer;
  model::ModelConfig model;
  model::Objective objective = model::Objective::Pima;
  /// Holds log.jsonl, checkpoint.bin and checkpoints/; empty writes nothing.
  std::filesystem::path output_dir;
  std::size_t checkpoint_every = 10;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss_total = 0.0;
  double loss_matching = 0.0;
  double loss_classification = 0.0;
  double train_f1_cor = 0.0;
  double train_f1_mis = 0.0;
  double train_f1_avg = 0.0;
  std::optional<double> test_f1_cor, test_f1_mis, test_f1_avg;

  /// One JSON object, no trailing newline.
  std::string to_json() const;
};

/// Model, optimizer and shuffle state being trained.
struct TrainState {
  model::Model model;
  OptimizerState optimizer;
  Rng rng;
  std::size_t epoch = 0;

  static TrainState fresh(const TrainConfig& config);
  static TrainState resume(const Checkpoint& checkpoint, const TrainConfig& config);
  Checkpoint checkpoint(const TrainConfig& config) const;
};

/// One pass over `prescriptions` in a shuffled order, one optimizer step per
/// batch with the batch-mean gradient. Train F1 comes from the same forward
/// passes.
EpochMetrics train_epoch(TrainState& state, const std::vector<data::Prescription>& prescriptions,
                         std::span<const model::PreparedSample> samples, const TrainConfig& config);

struct FitOptions {
  /// Evaluated after every epoch when set.
  const std::vector<data::Prescription>* monitor = nullptr;
  std::optional<Checkpoint> resume;
  /// Per-epoch progress lines.
  std::ostream* progress = nullptr;
};

struct FitResult {
  TrainState state;
  std::vector<EpochMetrics> log;
};

FitResult fit(const TrainConfig& config, const std::vector<data::Prescription>& train, const FitOptions& options = {});

}  // namespace pima::train
