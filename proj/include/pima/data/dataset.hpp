#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pima/alignment/alignment.hpp"
#include "pima/encoders/vocab.hpp"
#include "pima/graph/layout.hpp"

namespace pima::data {

struct PillClass {
  int id = 0;
  /// Alternate spellings of the name; the first is canonical.
  std::vector<std::string> name_forms;
  std::vector<double> prototype;

  bool operator==(const PillClass&) const = default;
};

struct Pill {
  int id = 0;
  std::vector<double> features;
  int pill_class = 0;
  bool prescribed = true;

  bool operator==(const Pill&) const = default;
};

struct Prescription {
  int id = 0;
  std::vector<graph::TextBox> boxes;
  std::vector<Pill> pills;

  /// Per pill, the boxes naming its class (empty for foreign pills).
  alignment::CorrespondenceSets correspondence() const;
  /// 1 for pill-name boxes, 0 otherwise.
  std::vector<int> labels() const;
  /// Class ids named by the boxes.
  std::vector<int> named_classes() const;

  bool operator==(const Prescription&) const = default;
};

/// Knobs of the synthetic generator.
struct GeneratorConfig {
  int num_classes = 40;
  int num_prescriptions = 200;
  int min_pills = 2;
  int max_pills = 6;
  int min_distractors = 4;
  int max_distractors = 10;
  int feature_dim = 16;
  double noise_sigma = 0.1;
  double row_spacing = 6.0;
  double jitter = 0.8;

  /// Throws ConfigError for C < 2, max_pills > C and other inconsistent ranges.
  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

struct Dataset {
  GeneratorConfig config;
  std::uint64_t seed = 0;
  std::vector<PillClass> classes;
  encoders::Vocabulary vocab;
  std::vector<Prescription> prescriptions;

  const Prescription& prescription(int id) const;
  const PillClass& pill_class(int id) const;
};

/// Deterministic synthetic dataset: column-structured layouts with name boxes
/// on the left, quantities to their right, headers above and footers below.
Dataset generate_dataset(const GeneratorConfig& config, std::uint64_t seed);

/// Invariant violations of one prescription (empty when valid).
std::vector<std::string> validate_prescription(const Prescription& p, std::size_t feature_dim);

/// Re-tokenizes every box text against `vocab`.
void tokenize_boxes(std::span<Prescription> prescriptions, const encoders::Vocabulary& vocab);

}  // namespace pima::data
