#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace avgtrack {

/// Undirected simple graph. Edges are stored as (tail, head) with tail < head;
/// that stored order fixes the incidence-matrix orientation.
class Graph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  /// Throws Error(kInvalidArgument) on out-of-range endpoints, self-loops or
  /// duplicate edges. Pairs given as (j, i) with j > i are normalized.
  Graph(std::size_t n_nodes, std::vector<Edge> edges);
  /// Single isolated node.
  Graph() : Graph(1, {}) {}

  static Graph path(std::size_t n);
  static Graph ring(std::size_t n);
  static Graph complete(std::size_t n);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const {
    return neighbors_.at(i);
  }
  std::size_t degree(std::size_t i) const { return neighbors_.at(i).size(); }

  /// Sum over nodes of |N_i|, i.e. the number of ordered neighbor pairs.
  std::size_t ordered_pair_count() const noexcept { return 2 * edges_.size(); }

 private:
  std::size_t n_nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

Eigen::MatrixXd incidence_matrix(const Graph& g);
Eigen::MatrixXd adjacency_matrix(const Graph& g);
Eigen::MatrixXd degree_matrix(const Graph& g);

/// Degree minus adjacency, assembled in integer arithmetic so rows sum to 0
/// exactly.
Eigen::MatrixXd laplacian(const Graph& g);

bool is_connected(const Graph& g);
std::size_t component_count(const Graph& g);

/// Algebraic connectivity. Throws Error(kNotConnected) for disconnected graphs.
double lambda2(const Graph& g);

}  // namespace avgtrack
