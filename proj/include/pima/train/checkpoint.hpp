#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pima/alignment/alignment.hpp"
#include "pima/model/model.hpp"
#include "pima/numerics/init.hpp"
#include "pima/train/optim.hpp"

namespace pima::train {

/// Binary layout: "PIMA", u32 version, then records of
///   [u32 name length][name][u32 rank][u64 dims...][f64 values...]
/// all little-endian. Names under config/, optim/, rng/ and train/ are
/// reserved; everything else is a model parameter.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Record {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  bool operator==(const Record&) const = default;
};

std::vector<std::uint8_t> encode_records(const std::vector<Record>& records,
                                         std::uint32_t version = kCheckpointVersion);
/// Throws ParseError on bad magic, unknown version or truncation.
std::vector<Record> decode_records(const std::vector<std::uint8_t>& bytes);

struct Checkpoint {
  model::ModelConfig model;
  alignment::LossConfig loss;
  model::Objective objective = model::Objective::Pima;
  std::vector<Record> parameters;
  OptimizerState optimizer;
  std::vector<std::uint64_t> rng_state;  // mt19937_64 state words
  std::uint64_t epoch = 0;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(const model::Model& model, const OptimizerState& optimizer, const Rng& rng,
                           std::uint64_t epoch, const alignment::LossConfig& loss, model::Objective objective);

/// Rebuilds trainable tensors; throws ConfigError when names or shapes differ.
model::Model restore_model(const Checkpoint& checkpoint);
Rng restore_rng(const Checkpoint& checkpoint);

std::vector<std::uint8_t> serialize(const Checkpoint& checkpoint);
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pima::train
