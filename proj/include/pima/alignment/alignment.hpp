#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pima/numerics/tensor.hpp"

namespace pima::alignment {

/// Loss and decision hyperparameters.
struct LossConfig {
  double margin = 1.0;       // m: similarities live in [-1, 1]
  double balance = 1.0;      // lambda in L_total = L_match + lambda * L_cls
  double cosine_eps = 1e-8;  // guard in the cosine denominator
  double threshold = 0.8;    // alpha: minimum similarity to declare a match

  /// Throws ConfigError unless m > 0, lambda >= 0, eps > 0, alpha in (0, 1].
  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

/// P_i: box indices naming pill i's class, one entry per pill.
using CorrespondenceSets = std::vector<std::vector<int>>;

/// a . b / max(|a| |b|, eps) on plain vectors.
double cosine_similarity(std::span<const double> a, std::span<const double> b, double eps = 1e-8);

/// Differentiable cosine between two 1 x d rows.
Tensor cosine_similarity(const Tensor& a, const Tensor& b, double eps = 1e-8);

/// M x N cosine similarities between the rows of `pills` and `texts`.
Tensor similarity_matrix(const Tensor& pills, const Tensor& texts, double eps = 1e-8);

/// (1/M) sum_i [ 1/2 sum_{j not in P_i} S_ij^2 + 1/2 sum_{k in P_i} max(0, m - S_ik)^2 ].
Tensor matching_loss(const Tensor& similarity, const CorrespondenceSets& matches, double margin);

/// Matched-pair half of matching_loss(): the CLIP-style ablation.
Tensor clip_style_loss(const Tensor& similarity, const CorrespondenceSets& matches, double margin);

/// Mismatched-pair half of matching_loss().
Tensor mismatch_term(const Tensor& similarity, const CorrespondenceSets& matches);

/// Class-balanced binary cross entropy on the N x 1 probabilities `g`.
/// Positives are weighted 1 - n1/N, negatives n1/N; g is clamped to
/// [1e-12, 1 - 1e-12]. Warns when all labels agree.
Tensor classification_loss(const Tensor& g, std::span<const int> labels);

/// L_match + lambda * L_cls.
Tensor total_loss(const Tensor& matching, const Tensor& classification, double balance);

/// Decision for one pill.
struct MatchDecision {
  std::size_t pill = 0;
  std::optional<int> box;  // nullopt: not in the prescription
  int best_box = -1;       // argmax candidate, -1 when there are no boxes
  double max_similarity = 0.0;
};

/// For each pill, the argmax over boxes with g >= 0.5 (all boxes if none
/// qualify; ties to the lowest index). Matched when that similarity >= alpha.
/// `similarity` is row-major num_pills x num_boxes; with no boxes every pill
/// is flagged.
std::vector<MatchDecision> decide_matches(std::span<const double> similarity, std::size_t num_pills,
                                          std::size_t num_boxes, std::span<const double> g, double alpha);
std::vector<MatchDecision> decide_matches(const Tensor& similarity, std::span<const double> g, double alpha);

}  // namespace pima::alignment
