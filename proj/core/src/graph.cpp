#include "avgtrack/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "avgtrack/error.hpp"
#include "avgtrack/numerics.hpp"

namespace avgtrack {

Graph::Graph(std::size_t n_nodes, std::vector<Edge> edges)
    : n_nodes_(n_nodes), neighbors_(n_nodes) {
  if (n_nodes == 0) {
    throw Error(ErrorKind::kInvalidArgument, "graph needs at least one node");
  }
  std::set<Edge> seen;
  edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a >= n_nodes || b >= n_nodes) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("edge ({}, {}) has an endpoint outside [0, {})",
                              a, b, n_nodes));
    }
    if (a == b) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("self-loop at node {}", a));
    }
    Edge e{std::min(a, b), std::max(a, b)};
    if (!seen.insert(e).second) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("duplicate edge ({}, {})", e.first, e.second));
    }
    edges_.push_back(e);
    neighbors_[e.first].push_back(e.second);
    neighbors_[e.second].push_back(e.first);
  }
}

Graph Graph::path(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, std::move(edges));
}

Graph Graph::ring(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  if (n > 2) edges.emplace_back(0, n - 1);
  return Graph(n, std::move(edges));
}

Graph Graph::complete(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

Eigen::MatrixXd incidence_matrix(const Graph& g) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(g.n_nodes()),
      static_cast<Eigen::Index>(g.n_edges()));
  for (std::size_t k = 0; k < g.n_edges(); ++k) {
    const auto [tail, head] = g.edges()[k];
    d(static_cast<Eigen::Index>(tail), static_cast<Eigen::Index>(k)) = 1.0;
    d(static_cast<Eigen::Index>(head), static_cast<Eigen::Index>(k)) = -1.0;
  }
  return d;
}

Eigen::MatrixXd adjacency_matrix(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : g.edges()) {
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return a;
}

Eigen::MatrixXd degree_matrix(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n_nodes());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    d(i, i) = static_cast<double>(g.degree(static_cast<std::size_t>(i)));
  return d;
}

Eigen::MatrixXd laplacian(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n_nodes());
  Eigen::MatrixXi l = Eigen::MatrixXi::Zero(n, n);
  for (auto [i, j] : g.edges()) {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    l(a, a) += 1;
    l(b, b) += 1;
    l(a, b) -= 1;
    l(b, a) -= 1;
  }
  return l.cast<double>();
}

std::size_t component_count(const Graph& g) {
  std::vector<std::size_t> parent(g.n_nodes());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::size_t components = g.n_nodes();
  for (auto [i, j] : g.edges()) {
    const auto ri = find(i);
    const auto rj = find(j);
    if (ri != rj) {
      parent[ri] = rj;
      --components;
    }
  }
  return components;
}

bool is_connected(const Graph& g) { return component_count(g) == 1; }

double lambda2(const Graph& g) {
  if (!is_connected(g)) {
    throw Error(ErrorKind::kNotConnected,
                fmt::format("graph has {} components; zero is not a simple "
                            "Laplacian eigenvalue",
                            component_count(g)));
  }
  if (g.n_nodes() == 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "a single node has no nonzero Laplacian eigenvalue");
  }
  return sym_eig(laplacian(g)).values(1);
}

}  // namespace avgtrack
