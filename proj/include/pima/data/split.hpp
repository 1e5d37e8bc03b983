#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pima/data/dataset.hpp"

namespace pima::data {

enum class Scenario { S1_1, S1_2, S1_3, S2_1, S2_2 };

std::string_view to_string(Scenario s);
/// Accepts "1-1", "1-2", "1-3", "2-1", "2-2".
Scenario parse_scenario(std::string_view text);

/// near: closest foreign prototype (2-1 analog); far: random foreign class
/// beyond the median prototype distance (2-2 analog).
enum class MismatchMode { Near, Far };

struct ScenarioSplit {
  Scenario scenario = Scenario::S1_1;
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  double mismatch_fraction = 0.0;
};

/// Share of prescriptions assigned to training in the stratified scenarios.
inline constexpr double kStratifiedTrainFraction = 0.7;
inline constexpr double kMismatchFraction = 0.5;

/// Iterative label stratification over per-example label sets. Returns a
/// subset index in {0, 1} per example, with `fraction` targeting subset 0.
std::vector<int> iterative_stratification(std::span<const std::vector<int>> labels, double fraction,
                                          std::uint64_t seed);

ScenarioSplit split_scenario(const Dataset& dataset, Scenario scenario, std::uint64_t seed);

/// Replaces floor(fraction * M + 0.5) pills of each prescription with pills of
/// a class absent from it, marking them prescribed = false.
std::vector<Prescription> inject_mismatches(std::vector<Prescription> test, std::span<const PillClass> classes,
                                            double noise_sigma, double fraction, MismatchMode mode,
                                            std::uint64_t seed);

/// A split with its prescriptions materialized (mismatches injected for 2-x).
struct SplitDataset {
  GeneratorConfig config;
  std::uint64_t dataset_seed = 0;
  std::uint64_t split_seed = 0;
  std::vector<PillClass> classes;
  encoders::Vocabulary vocab;
  ScenarioSplit split;
  std::vector<Prescription> train;
  std::vector<Prescription> test;
};

SplitDataset make_split(const Dataset& dataset, Scenario scenario, std::uint64_t seed);

}  // namespace pima::data
