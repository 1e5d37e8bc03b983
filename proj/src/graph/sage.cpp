#include "pima/graph/sage.hpp"

#include "pima/error.hpp"
#include "pima/numerics/ops.hpp"

namespace pima::graph {

std::size_t SageParams::output_width() const {
  if (layers.empty()) throw ConfigError("sage: no layers");
  return layers.back().rows();
}

Tensor neighbor_mean_matrix(const LayoutGraph& graph) {
  const std::size_t n = graph.num_nodes();
  Tensor a = Tensor::zeros(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& nb = graph.neighbors(static_cast<int>(v));
    for (int u : nb) a.at(v, static_cast<std::size_t>(u)) = 1.0 / static_cast<double>(nb.size());
  }
  return a;
}

Tensor sage_forward(const LayoutGraph& graph, const Tensor& features, const SageParams& params) {
  if (features.rows() != graph.num_nodes()) {
    throw ShapeError("sage_forward: " + std::to_string(features.rows()) + " feature rows for " +
                     std::to_string(graph.num_nodes()) + " nodes");
  }
  return sage_forward(neighbor_mean_matrix(graph), features, params);
}

Tensor sage_forward(const Tensor& neighbor_mean, const Tensor& features, const SageParams& params) {
  if (neighbor_mean.rows() != features.rows() || neighbor_mean.cols() != features.rows()) {
    throw ShapeError("sage_forward: adjacency " + neighbor_mean.shape().str() + " vs features " +
                     features.shape().str());
  }
  Tensor h = features;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const Tensor& w = params.layers[k];
    if (w.cols() != 2 * h.cols()) {
      throw ShapeError("sage_forward: layer " + std::to_string(k) + " weight " + w.shape().str() +
                       " for input width " + std::to_string(h.cols()));
    }
    const Tensor aggregated = ops::matmul(neighbor_mean, h);
    h = ops::relu(ops::matmul(ops::hconcat(h, aggregated), ops::transpose(w)));
  }
  return h;
}

Tensor pseudo_classify(const Tensor& embeddings, const Tensor& weight, const Tensor& bias) {
  if (weight.rows() != 1 || weight.cols() != embeddings.cols()) {
    throw ShapeError("pseudo_classify: weight " + weight.shape().str() + " for embeddings " +
                     embeddings.shape().str());
  }
  if (bias.size() != 1) throw ShapeError("pseudo_classify: bias must be 1 x 1, got " + bias.shape().str());
  return ops::sigmoid(ops::add(ops::matmul(embeddings, ops::transpose(weight)), bias));
}

Tensor weight_text_embeddings(const Tensor& text_projections, const Tensor& g) {
  if (g.rows() != text_projections.rows() || g.cols() != 1) {
    throw ShapeError("weight_text_embeddings: " + std::to_string(g.rows()) + " weights for " +
                     std::to_string(text_projections.rows()) + " rows");
  }
  return ops::scale_rows(text_projections, g);
}

}  // namespace pima::graph
