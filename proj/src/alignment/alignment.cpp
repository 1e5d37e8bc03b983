#include "pima/alignment/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pima/error.hpp"
#include "pima/numerics/ops.hpp"

namespace pima::alignment {
namespace {

constexpr double kProbFloor = 1e-12;

// M x N indicator of matched pairs.
Tensor match_mask(const Tensor& similarity, const CorrespondenceSets& matches, const char* op) {
  const std::size_t m = similarity.rows();
  const std::size_t n = similarity.cols();
  if (matches.size() != m) {
    throw ShapeError(std::string(op) + ": " + std::to_string(matches.size()) + " correspondence sets for " +
                     std::to_string(m) + " pills");
  }
  Tensor mask = Tensor::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (matches[i].empty()) {
      throw ConfigError(std::string(op) + ": pill " + std::to_string(i) + " has no matching text box");
    }
    for (int j : matches[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= n) {
        throw ShapeError(std::string(op) + ": box index " + std::to_string(j) + " out of range for " +
                         std::to_string(n) + " boxes");
      }
      mask.at(i, static_cast<std::size_t>(j)) = 1.0;
    }
  }
  return mask;
}

Tensor complement(const Tensor& mask) {
  Tensor out = Tensor::zeros(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) out.mutable_data()[i] = 1.0 - mask.data()[i];
  return out;
}

Tensor matched_sum(const Tensor& similarity, const Tensor& mask, double margin) {
  using namespace ops;
  // 1/2 sum_{k in P_i} max(0, m - S_ik)^2
  const Tensor shortfall = hinge(add_scalar(scale(similarity, -1.0), margin));
  return scale(sum(mul(mask, square(shortfall))), 0.5);
}

Tensor mismatched_sum(const Tensor& similarity, const Tensor& mask) {
  using namespace ops;
  return scale(sum(mul(complement(mask), square(similarity))), 0.5);
}

}  // namespace

void LossConfig::validate() const {
  if (!(margin > 0.0)) throw ConfigError("loss.margin must be > 0");
  if (!(balance >= 0.0)) throw ConfigError("loss.lambda must be >= 0");
  if (!(cosine_eps > 0.0)) throw ConfigError("loss.eps must be > 0");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("loss.alpha must be in (0, 1]");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b, double eps) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine_similarity: widths " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::max(std::sqrt(na) * std::sqrt(nb), eps);
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b, double eps) {
  if (a.rows() != 1 || b.rows() != 1 || a.cols() != b.cols()) {
    throw ShapeError("cosine_similarity: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  return similarity_matrix(a, b, eps);
}

Tensor similarity_matrix(const Tensor& pills, const Tensor& texts, double eps) {
  using namespace ops;
  if (pills.cols() != texts.cols()) {
    throw ShapeError("similarity_matrix: shape mismatch " + pills.shape().str() + " vs " + texts.shape().str());
  }
  const Tensor dots = matmul(pills, transpose(texts));
  const Tensor norms = matmul(l2norm_rows(pills), transpose(l2norm_rows(texts)));
  return div(dots, clamp(norms, eps));
}

Tensor matching_loss(const Tensor& similarity, const CorrespondenceSets& matches, double margin) {
  const Tensor mask = match_mask(similarity, matches, "matching_loss");
  const double inv_m = 1.0 / static_cast<double>(similarity.rows());
  return ops::scale(ops::add(mismatched_sum(similarity, mask), matched_sum(similarity, mask, margin)), inv_m);
}

Tensor clip_style_loss(const Tensor& similarity, const CorrespondenceSets& matches, double margin) {
  const Tensor mask = match_mask(similarity, matches, "clip_style_loss");
  return ops::scale(matched_sum(similarity, mask, margin), 1.0 / static_cast<double>(similarity.rows()));
}

Tensor mismatch_term(const Tensor& similarity, const CorrespondenceSets& matches) {
  const Tensor mask = match_mask(similarity, matches, "mismatch_term");
  return ops::scale(mismatched_sum(similarity, mask), 1.0 / static_cast<double>(similarity.rows()));
}

Tensor classification_loss(const Tensor& g, std::span<const int> labels) {
  using namespace ops;
  if (g.cols() != 1 || g.rows() != labels.size()) {
    throw ShapeError("classification_loss: " + std::to_string(labels.size()) + " labels for probabilities " +
                     g.shape().str());
  }
  const std::size_t n = labels.size();
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("classification_loss: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == n) {
    warn("classification_loss: all " + std::to_string(n) + " labels are " + (positives == 0 ? "0" : "1") +
         "; class weights degenerate to 0/1");
  }
  const double ratio = static_cast<double>(positives) / static_cast<double>(n);
  Tensor pos_weight = Tensor::zeros(n, 1);
  Tensor neg_weight = Tensor::zeros(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      pos_weight.at(i, 0) = 1.0 - ratio;
    } else {
      neg_weight.at(i, 0) = ratio;
    }
  }
  const Tensor p = clamp(g, kProbFloor, 1.0 - kProbFloor);
  const Tensor log_p = log(p);
  const Tensor log_q = log(add_scalar(scale(p, -1.0), 1.0));
  const Tensor weighted = add(mul(pos_weight, log_p), mul(neg_weight, log_q));
  return scale(sum(weighted), -1.0 / static_cast<double>(n));
}

Tensor total_loss(const Tensor& matching, const Tensor& classification, double balance) {
  if (!std::isfinite(matching.item()) || !std::isfinite(classification.item())) {
    throw NumericError("total_loss: non-finite component");
  }
  return ops::add(matching, ops::scale(classification, balance));
}

std::vector<MatchDecision> decide_matches(std::span<const double> similarity, std::size_t num_pills,
                                          std::size_t num_boxes, std::span<const double> g, double alpha) {
  if (similarity.size() != num_pills * num_boxes) throw ShapeError("decide_matches: similarity size mismatch");
  if (g.size() != num_boxes) {
    throw ShapeError("decide_matches: " + std::to_string(g.size()) + " probabilities for " +
                     std::to_string(num_boxes) + " boxes");
  }
  std::vector<int> candidates;
  for (std::size_t j = 0; j < num_boxes; ++j) {
    if (g[j] >= 0.5) candidates.push_back(static_cast<int>(j));
  }
  if (candidates.empty()) {
    for (std::size_t j = 0; j < num_boxes; ++j) candidates.push_back(static_cast<int>(j));
  }

  std::vector<MatchDecision> decisions(num_pills);
  for (std::size_t i = 0; i < num_pills; ++i) {
    MatchDecision& d = decisions[i];
    d.pill = i;
    if (candidates.empty()) continue;
    const double* row = similarity.data() + i * num_boxes;
    d.best_box = candidates.front();
    d.max_similarity = row[d.best_box];
    for (int j : candidates) {
      if (row[j] > d.max_similarity) {
        d.max_similarity = row[j];
        d.best_box = j;
      }
    }
    if (d.max_similarity >= alpha) d.box = d.best_box;
  }
  return decisions;
}

std::vector<MatchDecision> decide_matches(const Tensor& similarity, std::span<const double> g, double alpha) {
  return decide_matches(similarity.data(), similarity.rows(), similarity.cols(), g, alpha);
}

}  // namespace pima::alignment
