#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pima::graph {

/// Axis-aligned box in layout units; y grows downward.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool operator==(const BBox&) const = default;
};

/// One text region of a prescription.
struct TextBox {
  int id = 0;
  BBox bbox;
  std::string text;
  std::vector<int> tokens;
  bool is_pill_name = false;
  std::optional<int> pill_class;  // present iff is_pill_name

  bool operator==(const TextBox&) const = default;
};

/// Undirected spatial graph over text boxes.
class LayoutGraph {
 public:
  explicit LayoutGraph(std::size_t num_nodes = 0) : adjacency_(num_nodes) {}

  std::size_t num_nodes() const { return adjacency_.size(); }
  /// Edges with i < j, sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  /// Sorted neighbor ids of `node`.
  const std::vector<int>& neighbors(int node) const { return adjacency_.at(static_cast<std::size_t>(node)); }
  std::size_t degree(int node) const { return neighbors(node).size(); }
  bool has_edge(int i, int j) const;

  /// Adds (i, j); self-loops are rejected and duplicates ignored.
  void add_edge(int i, int j);

 private:
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
};

/// Nearest box to `i` along one axis. Candidates are boxes whose interval on
/// the other axis overlaps i's; the gap is the center distance along `axis`.
/// With no overlapping candidate, the nearest box by Euclidean center
/// distance is used. Ties go to the lower id. Returns nullopt for one box.
enum class Axis { Horizontal, Vertical };
std::optional<int> nearest_neighbor(std::span<const BBox> boxes, int i, Axis axis);

/// Connects i and j when either is the other's horizontal- or vertical-nearest box.
LayoutGraph build_layout_graph(std::span<const BBox> boxes);
LayoutGraph build_layout_graph(std::span<const TextBox> boxes);

}  // namespace pima::graph
