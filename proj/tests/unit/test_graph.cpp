#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "avgtrack/error.hpp"
#include "avgtrack/graph.hpp"
#include "avgtrack/numerics.hpp"
#include "random_instances.hpp"

namespace avgtrack {
namespace {

using Eigen::MatrixXd;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected avgtrack::Error";
  return ErrorKind::kInvalidArgument;
}

TEST(Graph, RejectsSelfLoopsDuplicatesAndRange) {
  EXPECT_EQ(kind_of([] { Graph(3, {{1, 1}}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { Graph(3, {{0, 1}, {1, 0}}); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { Graph(3, {{0, 3}}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { Graph(0, {}); }), ErrorKind::kInvalidArgument);
}

TEST(Graph, NormalizesEndpointOrder) {
  const Graph g(3, {{2, 0}});
  ASSERT_EQ(g.n_edges(), 1u);
  EXPECT_EQ(g.edges()[0], (Graph::Edge{0, 2}));
  EXPECT_EQ(g.ordered_pair_count(), 2u);
}

TEST(Graph, IncidenceOrientationLowerIndexIsTail) {
  const MatrixXd d = incidence_matrix(Graph::path(2));
  EXPECT_EQ(d(0, 0), 1.0);
  EXPECT_EQ(d(1, 0), -1.0);
}

TEST(Graph, TriangleLaplacian) {
  MatrixXd expected(3, 3);
  expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  EXPECT_TRUE(laplacian(Graph::complete(3)).isApprox(expected));
}

TEST(Graph, RingC6LaplacianIsCirculant) {
  const MatrixXd l = laplacian(Graph::ring(6));
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const int off = (j - i + 6) % 6;
      const double want = off == 0 ? 2.0 : (off == 1 || off == 5) ? -1.0 : 0.0;
      EXPECT_EQ(l(i, j), want) << i << "," << j;
    }
  }
}

TEST(Graph, Connectivity) {
  EXPECT_TRUE(is_connected(Graph::path(2)));
  EXPECT_FALSE(is_connected(Graph(3, {})));
  const Graph two_triangles(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  EXPECT_FALSE(is_connected(two_triangles));
  EXPECT_EQ(component_count(two_triangles), 2u);
}

TEST(Graph, Lambda2Values) {
  EXPECT_NEAR(lambda2(Graph::path(2)), 2.0, 1e-12);
  EXPECT_NEAR(lambda2(Graph::complete(3)), 3.0, 1e-12);
  // brute-force circulant spectrum 2 - 2cos(2 pi k / 6)
  double brute = 1e300;
  for (int k = 1; k < 6; ++k)
    brute = std::min(brute, 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / 6));
  EXPECT_NEAR(lambda2(Graph::ring(6)), brute, 1e-12);
  EXPECT_NEAR(lambda2(Graph::ring(6)), 1.0, 1e-12);
}

TEST(Graph, Lambda2RequiresConnectivity) {
  EXPECT_EQ(kind_of([] { lambda2(Graph(3, {{0, 1}})); }),
            ErrorKind::kNotConnected);
}

TEST(GraphProperty, LaplacianIdentitiesAndOrientationInvariance) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = testing::random_graph(rng, 2 + trial % 7, 0.45);
    const MatrixXd l = laplacian(g);
    const MatrixXd d = incidence_matrix(g);
    EXPECT_LE((l - d * d.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((l - (degree_matrix(g) - adjacency_matrix(g))).cwiseAbs().maxCoeff(),
              1e-12);
    const MatrixXd dr = testing::random_oriented_incidence(rng, g);
    EXPECT_LE((l - dr * dr.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ((l * Eigen::VectorXd::Ones(l.rows())).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(sym_eig(l).values.minCoeff(), -1e-10);
  }
}

TEST(GraphProperty, ZeroEigenvalueMultiplicityEqualsComponents) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = testing::random_graph(rng, 1 + trial % 8, 0.3);
    const Eigen::VectorXd ev = sym_eig(laplacian(g)).values;
    const auto zeros = (ev.array().abs() < 1e-8).count();
    EXPECT_EQ(static_cast<std::size_t>(zeros), component_count(g));
  }
}

TEST(GraphProperty, RayleighLowerBound) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = testing::random_connected_graph(rng, 2 + trial % 7, 0.3);
    const MatrixXd l = laplacian(g);
    const double l2 = lambda2(g);
    for (int s = 0; s < 5; ++s) {
      Eigen::VectorXd x = testing::random_matrix(rng, l.rows(), 1);
      x.array() -= x.mean();
      EXPECT_GE(x.dot(l * x), (l2 - 1e-8) * x.squaredNorm());
    }
  }
}

TEST(GraphProperty, AddingAnEdgeNeverDecreasesLambda2) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + trial % 6;
    const Graph g = testing::random_connected_graph(rng, n, 0.0);
    auto edges = g.edges();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::find(edges.begin(), edges.end(), Graph::Edge{i, j}) ==
            edges.end()) {
          auto more = edges;
          more.emplace_back(i, j);
          EXPECT_GE(lambda2(Graph(n, more)), lambda2(g) - 1e-10);
          i = n;
          break;
        }
      }
    }
  }
}

}  // namespace
}  // namespace avgtrack
