#include <cmath>

#include <gtest/gtest.h>

#include "avgtrack/analysis.hpp"
#include "avgtrack/error.hpp"
#include "avgtrack/numerics.hpp"
#include "avgtrack/sim.hpp"

namespace avgtrack {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LinearPlant damped_plant() {
  LinearPlant p;
  p.a = (MatrixXd(2, 2) << 0, 1, -1, -2).finished();
  p.b = (MatrixXd(2, 1) << 0, 1).finished();
  return p;
}

TEST(Integrate, ZeroFieldIsConstant) {
  const VectorXd x0{{1.0, -2.0, 3.0}};
  const auto traj = integrate([](double, const VectorXd& z) { return VectorXd(VectorXd::Zero(z.size())); },
                              x0, {1.0, 0.1, 1, Integrator::kRk4});
  ASSERT_EQ(traj.times.size(), 11u);
  for (const auto& s : traj.states) EXPECT_EQ(s, x0);
}

TEST(Integrate, ScalarDecayRk4) {
  const auto traj = integrate([](double, const VectorXd& z) { return VectorXd(-z); },
                              VectorXd::Ones(1), {1.0, 0.01, 1, Integrator::kRk4});
  EXPECT_DOUBLE_EQ(traj.times.back(), 1.0);
  EXPECT_NEAR(traj.states.back()(0), std::exp(-1.0), 1e-8);
}

TEST(Integrate, EulerIsFirstOrder) {
  auto err = [](double dt) {
    const auto traj = integrate([](double, const VectorXd& z) { return VectorXd(-z); },
                                VectorXd::Ones(1), {1.0, dt, 1, Integrator::kEuler});
    return std::abs(traj.states.back()(0) - std::exp(-1.0));
  };
  EXPECT_NEAR(err(1e-2) / err(5e-3), 2.0, 0.05);
}

TEST(Integrate, TimesAreExactMultiplesAndRecordEvery) {
  const auto traj = integrate([](double, const VectorXd& z) { return VectorXd(-z); },
                              VectorXd::Ones(1), {2.0, 0.1, 5, Integrator::kRk4});
  ASSERT_EQ(traj.times.size(), 5u);
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    EXPECT_EQ(traj.times[k], static_cast<double>(k * 5) * 0.1);
}

TEST(Integrate, NonFiniteReportsTime) {
  try {
    integrate([](double t, const VectorXd& z) {
                return t > 0.25 ? VectorXd(VectorXd::Constant(z.size(), NAN))
                                : VectorXd(z);
              },
              VectorXd::Ones(1), {1.0, 0.1, 1, Integrator::kRk4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFinite);
    ASSERT_TRUE(e.time().has_value());
    EXPECT_GT(*e.time(), 0.2);
    EXPECT_LT(*e.time(), 0.45);
  }
}

TEST(IntegratorOptions, Validation) {
  EXPECT_THROW((IntegratorOptions{1.0, 0.0, 1, Integrator::kRk4}.validate()), Error);
  EXPECT_THROW((IntegratorOptions{-1.0, 0.1, 1, Integrator::kRk4}.validate()), Error);
  EXPECT_THROW((IntegratorOptions{1.0, 0.1, 0, Integrator::kRk4}.validate()), Error);
  EXPECT_EQ((IntegratorOptions{20.0, 1e-3, 1, Integrator::kRk4}.step_count()), 20000);
  EXPECT_EQ(parse_integrator("euler"), Integrator::kEuler);
  EXPECT_THROW(parse_integrator("rk45"), Error);
}

SimConfig static_config(const Graph& g, ReferenceSet rs, double f0,
                        IntegratorOptions opts) {
  SimConfig cfg;
  cfg.integrator = opts;
  cfg.mode = Algorithm::kStatic;
  cfg.graph = g;
  cfg.refs = std::move(rs);
  cfg.gains = design_gains(cfg.refs.plant, g, MatrixXd::Identity(2, 2), f0,
                           {1.0, 0.5});
  return cfg;
}

TEST(Run, IdenticalStartsStayTogether) {
  ReferenceSet rs;
  rs.plant = damped_plant();
  const VectorXd r0{{1.0, 0.5}};
  for (int i = 0; i < 4; ++i) {
    rs.initial_states.push_back(r0);
    rs.inputs.push_back(InputDescriptor::zero(1));
  }
  const auto traj = run(static_config(Graph::ring(4), rs, 0.0, {3.0, 1e-3, 100}));
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const VectorXd want = matrix_exp(rs.plant.a, traj.times[k]) * r0;
    for (const auto& x : traj.states[k].x) EXPECT_LE((x - want).norm(), 1e-6);
  }
}

TEST(Run, TwoAgentsConvergeToAverageReference) {
  ReferenceSet rs;
  rs.plant = damped_plant();
  rs.initial_states = {VectorXd{{1.0, -1.0}}, VectorXd{{-1.0, 1.0}}};
  const auto f = InputDescriptor::sinusoid(VectorXd::Ones(1), 1.0, 0.0);
  rs.inputs = {f, f};
  const auto traj = run(static_config(Graph::path(2), rs, 1.0, {10.0, 1e-3, 100}));
  const double t = traj.times.back();
  const VectorXd avg = consensus_manifold(rs, t, default_quad_steps(t));
  // mean(r0) = 0, so the average reference is the forced response alone.
  const VectorXd mean_ref = 0.5 * (traj.references.back()[0] + traj.references.back()[1]);
  EXPECT_LE((avg - mean_ref).norm(), 1e-9);
  for (const auto& x : traj.states.back().x) EXPECT_LE((x - avg).norm(), 1e-3);
}

TEST(Run, AdaptiveModeCarriesEdgeGains) {
  ReferenceSet rs;
  rs.plant = damped_plant();
  rs.initial_states = {VectorXd{{1.0, 0.0}}, VectorXd{{0.0, 1.0}}, VectorXd{{-1.0, 0.0}}};
  rs.inputs.assign(3, InputDescriptor::zero(1));
  SimConfig cfg;
  cfg.integrator = {1.0, 1e-3, 10};
  cfg.mode = Algorithm::kAdaptive;
  cfg.graph = Graph::path(3);
  cfg.refs = rs;
  cfg.adaptive = design_adaptive(rs.plant, cfg.graph, MatrixXd::Identity(2, 2),
                                 {1.0, 0.5}, 1, 1, 0.1, 0.1, 0.5, 0.25);
  const auto traj = run(cfg);
  ASSERT_EQ(traj.states.front().alpha.size(), 2u);
  EXPECT_EQ(traj.states.front().alpha[0], 0.5);
  EXPECT_EQ(traj.states.front().beta[1], 0.25);
  EXPECT_EQ(traj.states.size(), 101u);
}

TEST(Run, MissingGainsIsAConfigError) {
  SimConfig cfg;
  cfg.graph = Graph::path(2);
  cfg.refs.plant = damped_plant();
  cfg.refs.initial_states = {VectorXd::Zero(2), VectorXd::Zero(2)};
  cfg.refs.inputs.assign(2, InputDescriptor::zero(1));
  EXPECT_THROW(run(cfg), Error);
}

TEST(Run, Deterministic) {
  ReferenceSet rs;
  rs.plant = damped_plant();
  for (int i = 1; i <= 5; ++i) {
    rs.initial_states.push_back(VectorXd{{double(i), -double(i)}});
    rs.inputs.push_back(InputDescriptor::sinusoid(VectorXd::Constant(1, i / 2.0), 1.0, 0.0));
  }
  const auto cfg = static_config(Graph::ring(5), rs, input_bound(rs), {2.0, 1e-3, 50});
  const auto a = run(cfg);
  const auto b = run(cfg);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k)
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a.states[k].x[i], b.states[k].x[i]);
}

}  // namespace
}  // namespace avgtrack
