#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pima/alignment/alignment.hpp"
#include "pima/data/dataset.hpp"
#include "pima/encoders/projection.hpp"
#include "pima/encoders/text_encoder.hpp"
#include "pima/graph/sage.hpp"

namespace pima::model {

/// Widths of every trainable block.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t token_width = 32;
  std::size_t ff_hidden = 64;
  std::size_t feature_width = 16;
  std::size_t sage_hidden = 32;
  std::size_t sage_layers = 2;
  std::size_t projection_hidden = 256;
  std::size_t projection_width = encoders::kProjectionWidth;
  /// Off: no pseudo-classifier; every box gets weight 1 and L_cls is zero.
  bool use_graph = true;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Which matching term drives training.
enum class Objective { Pima, Clip };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view text);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Model {
  ModelConfig config;
  encoders::EncoderParams encoder;
  graph::SageParams sage;
  encoders::ProjectionParams text_projection;
  encoders::ProjectionParams image_projection;

  /// Every trainable tensor under a stable name, in a fixed order.
  std::vector<NamedTensor> named_parameters() const;
};

Model init_model(const ModelConfig& config, std::uint64_t seed);

/// Everything about a prescription that does not depend on the parameters.
struct PreparedSample {
  int id = 0;
  std::vector<std::vector<int>> tokens;
  Tensor neighbor_mean;  // N x N
  Tensor features;       // M x feature_width
  std::vector<int> labels;
  alignment::CorrespondenceSets matches;
};

PreparedSample prepare_sample(const data::Prescription& p);
std::vector<PreparedSample> prepare_samples(const std::vector<data::Prescription>& ps);

struct ForwardResult {
  Tensor similarity;  // M x N
  Tensor g;           // N x 1
  Tensor matching;
  Tensor classification;
  Tensor total;
};

/// Text boxes -> graph -> g -> weighted projections; pills -> projections;
/// similarity only. The loss fields stay undefined.
ForwardResult score(const Model& model, const PreparedSample& sample, double cosine_eps);

/// score() plus the losses. Every pill needs a name box.
ForwardResult forward(const Model& model, const PreparedSample& sample, const alignment::LossConfig& loss,
                      Objective objective = Objective::Pima);

/// Match decisions for a sample, without recording gradients.
std::vector<alignment::MatchDecision> predict(const Model& model, const PreparedSample& sample,
                                              const alignment::LossConfig& loss);

}  // namespace pima::model
