#include "pima/graph/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pima/error.hpp"

namespace pima::graph {

bool LayoutGraph::has_edge(int i, int j) const {
  const auto& n = neighbors(i);
  return std::binary_search(n.begin(), n.end(), j);
}

void LayoutGraph::add_edge(int i, int j) {
  const auto n = static_cast<int>(num_nodes());
  if (i < 0 || j < 0 || i >= n || j >= n) throw Error("layout graph: edge endpoint out of range");
  if (i == j) throw Error("layout graph: self-loop on node " + std::to_string(i));
  if (has_edge(i, j)) return;
  auto insert_sorted = [](std::vector<int>& v, int x) { v.insert(std::lower_bound(v.begin(), v.end(), x), x); };
  insert_sorted(adjacency_[static_cast<std::size_t>(i)], j);
  insert_sorted(adjacency_[static_cast<std::size_t>(j)], i);
  const std::pair<int, int> edge{std::min(i, j), std::max(i, j)};
  edges_.insert(std::lower_bound(edges_.begin(), edges_.end(), edge), edge);
}

std::optional<int> nearest_neighbor(std::span<const BBox> boxes, int i, Axis axis) {
  const BBox& self = boxes[static_cast<std::size_t>(i)];
  auto overlaps = [&](const BBox& other) {
    return axis == Axis::Horizontal ? (self.y_min <= other.y_max && other.y_min <= self.y_max)
                                    : (self.x_min <= other.x_max && other.x_min <= self.x_max);
  };
  auto gap = [&](const BBox& other) {
    return axis == Axis::Horizontal ? std::abs(self.center_x() - other.center_x())
                                    : std::abs(self.center_y() - other.center_y());
  };
  auto euclid = [&](const BBox& other) {
    return std::hypot(self.center_x() - other.center_x(), self.center_y() - other.center_y());
  };

  std::optional<int> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (static_cast<int>(j) == i || !overlaps(boxes[j])) continue;
    const double d = gap(boxes[j]);
    if (d < best_gap) {
      best_gap = d;
      best = static_cast<int>(j);
    }
  }
  if (best) return best;
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (static_cast<int>(j) == i) continue;
    const double d = euclid(boxes[j]);
    if (d < best_gap) {
      best_gap = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

LayoutGraph build_layout_graph(std::span<const BBox> boxes) {
  if (boxes.empty()) throw Error("build_layout_graph: empty box list");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!boxes[i].valid()) throw Error("build_layout_graph: invalid bbox for box " + std::to_string(i));
  }
  LayoutGraph graph(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const int node = static_cast<int>(i);
    for (Axis axis : {Axis::Horizontal, Axis::Vertical}) {
      if (auto j = nearest_neighbor(boxes, node, axis)) graph.add_edge(node, *j);
    }
  }
  return graph;
}

LayoutGraph build_layout_graph(std::span<const TextBox> boxes) {
  std::vector<BBox> rects;
  rects.reserve(boxes.size());
  for (const TextBox& b : boxes) rects.push_back(b.bbox);
  return build_layout_graph(std::span<const BBox>(rects));
}

}  // namespace pima::graph
