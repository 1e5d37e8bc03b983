#pragma once

#include <cstddef>
#include <vector>

#include "pima/graph/layout.hpp"
#include "pima/numerics/tensor.hpp"

namespace pima::graph {

/// GraphSAGE stack (mean aggregator, relu update) plus the sigmoid head.
struct SageParams {
  /// Layer k maps width d_in to d_out with a (d_out x 2*d_in) matrix applied
  /// to [h_v | mean of neighbours].
  std::vector<Tensor> layers;
  Tensor classifier_weight;  // 1 x d_K
  Tensor classifier_bias;    // 1 x 1

  std::size_t output_width() const;
};

/// N x N constant with row v holding 1/deg(v) at v's neighbours; isolated
/// nodes get an all-zero row, so their aggregate is the zero vector.
Tensor neighbor_mean_matrix(const LayoutGraph& graph);

/// h^k = relu([h^{k-1} | A h^{k-1}] W_k^T) over the full neighbourhood.
Tensor sage_forward(const LayoutGraph& graph, const Tensor& features, const SageParams& params);
/// Same, reusing a precomputed neighbor_mean_matrix().
Tensor sage_forward(const Tensor& neighbor_mean, const Tensor& features, const SageParams& params);

/// g_i = sigmoid(w . h_i + b), returned as N x 1.
Tensor pseudo_classify(const Tensor& embeddings, const Tensor& weight, const Tensor& bias);

/// Row j scaled by g_j.
Tensor weight_text_embeddings(const Tensor& text_projections, const Tensor& g);

}  // namespace pima::graph
