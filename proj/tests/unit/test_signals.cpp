#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "avgtrack/error.hpp"
#include "avgtrack/numerics.hpp"
#include "avgtrack/signals.hpp"

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

ReferenceSet single(LinearPlant plant, VectorXd r0, InputDescriptor f) {
  ReferenceSet rs;
  rs.plant = std::move(plant);
  rs.initial_states = {std::move(r0)};
  rs.inputs = {std::move(f)};
  return rs;
}

TEST(Inputs, Examples) {
  EXPECT_EQ(eval_input(InputDescriptor::zero(2), 3.0).value, VectorXd::Zero(2));
  const auto s = InputDescriptor::sinusoid(VectorXd::Constant(1, 3.5), 1.0, 0.0);
  EXPECT_NEAR(eval_input(s, std::numbers::pi / 2).value(0), 3.5, 1e-15);
  const VectorXd c{{1.5, -2.0}};
  EXPECT_EQ(eval_input(InputDescriptor::constant(c), 7.0).value, c);
}

TEST(Inputs, SinusoidPhaseAndOffset) {
  const auto s = InputDescriptor::sinusoid(VectorXd::Constant(1, 2.0), 3.0, 0.5,
                                           VectorXd::Constant(1, 1.0));
  EXPECT_NEAR(eval_input(s, 0.2).value(0), 1.0 + 2.0 * std::sin(0.6 + 0.5), 1e-15);
  EXPECT_NEAR(s.bound(), 3.0, 1e-15);
}

TEST(Inputs, TableInterpolatesAndHolds) {
  const auto tab = InputDescriptor::table(
      {0.0, 1.0, 3.0},
      {VectorXd::Constant(1, 0.0), VectorXd::Constant(1, 2.0),
       VectorXd::Constant(1, -2.0)});
  EXPECT_NEAR(eval_input(tab, 0.5).value(0), 1.0, 1e-15);
  EXPECT_NEAR(eval_input(tab, 2.0).value(0), 0.0, 1e-15);
  EXPECT_FALSE(eval_input(tab, 2.0).held_last);
  const InputSample past = eval_input(tab, 10.0);
  EXPECT_NEAR(past.value(0), -2.0, 1e-15);
  EXPECT_TRUE(past.held_last);
  EXPECT_NEAR(tab.bound(), 2.0, 1e-15);
}

TEST(Inputs, ValidationErrors) {
  EXPECT_THROW(eval_input(InputDescriptor::zero(1), -1.0), Error);
  EXPECT_THROW(InputDescriptor::table({0.0, 0.0}, {VectorXd::Zero(1), VectorXd::Zero(1)})
                   .validate(),
               Error);
  EXPECT_THROW(InputDescriptor::table({0.5}, {VectorXd::Zero(1)}).validate(), Error);
}

TEST(InputBound, Examples) {
  ReferenceSet rs;
  rs.plant = damped_plant();
  for (int i = 0; i < 3; ++i) {
    rs.initial_states.push_back(VectorXd::Zero(2));
    rs.inputs.push_back(InputDescriptor::zero(1));
  }
  EXPECT_EQ(input_bound(rs), 0.0);

  ReferenceSet sec;
  sec.plant = damped_plant();
  for (int i = 1; i <= 6; ++i) {
    sec.initial_states.push_back(VectorXd::Zero(2));
    sec.inputs.push_back(
        InputDescriptor::sinusoid(VectorXd::Constant(1, (i + 1) / 2.0), 1.0, 0.0));
  }
  EXPECT_NEAR(input_bound(sec), 3.5, 1e-15);

  ReferenceSet consts;
  consts.plant.a = MatrixXd::Zero(2, 2);
  consts.plant.b = MatrixXd::Identity(2, 2);
  consts.initial_states = {VectorXd::Zero(2), VectorXd::Zero(2)};
  consts.inputs = {InputDescriptor::constant(VectorXd{{1.0, 0.0}}),
                   InputDescriptor::constant(VectorXd{{0.0, 2.0}})};
  EXPECT_NEAR(input_bound(consts), 2.0, 1e-15);
}

TEST(ReferenceTrajectory, HomogeneousCase) {
  const VectorXd r0{{1.0, -0.5}};
  const auto rs = single(damped_plant(), r0, InputDescriptor::zero(1));
  for (double t : {0.0, 0.7, 4.0}) {
    EXPECT_LE((reference_trajectory(rs, 0, t, 100) -
               matrix_exp(rs.plant.a, t) * r0).norm(), 1e-13);
  }
}

TEST(ReferenceTrajectory, IntegratorWithConstantInput) {
  LinearPlant p;
  p.a = MatrixXd::Zero(2, 2);
  p.b = MatrixXd::Identity(2, 2);
  const VectorXd c{{0.5, -1.5}};
  const VectorXd r0{{1.0, 2.0}};
  const auto rs = single(p, r0, InputDescriptor::constant(c));
  EXPECT_LE((reference_trajectory(rs, 0, 3.0, 8) - (r0 + c * 3.0)).norm(), 1e-13);
}

TEST(ReferenceTrajectory, MatchesFineRk4) {
  const VectorXd r0{{1.0, 0.0}};
  const auto rs = single(damped_plant(), r0,
                         InputDescriptor::sinusoid(VectorXd::Ones(1), 1.0, 0.0));
  VectorXd x = r0;
  const double h = 1e-4;
  auto f = [&](double t, const VectorXd& y) -> VectorXd {
    return rs.plant.a * y + rs.plant.b * std::sin(t);
  };
  for (int k = 0; k < 10000; ++k) {
    const double t = k * h;
    const VectorXd k1 = f(t, x);
    const VectorXd k2 = f(t + h / 2, x + h / 2 * k1);
    const VectorXd k3 = f(t + h / 2, x + h / 2 * k2);
    const VectorXd k4 = f(t + h, x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_LE((reference_trajectory(rs, 0, 1.0, default_quad_steps(1.0)) - x)
                .cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ReferenceTrajectory, LinearInInputs) {
  const VectorXd r0{{0.3, 0.1}};
  const auto f1 = InputDescriptor::sinusoid(VectorXd::Ones(1), 2.0, 0.1);
  const auto f2 = InputDescriptor::constant(VectorXd::Constant(1, -0.7));
  const auto both = InputDescriptor::sinusoid(VectorXd::Ones(1), 2.0, 0.1,
                                              VectorXd::Constant(1, -0.7));
  const double t = 2.5;
  const int q = default_quad_steps(t);
  const VectorXd a = reference_trajectory(single(damped_plant(), r0, f1), 0, t, q);
  const VectorXd b = reference_trajectory(
      single(damped_plant(), VectorXd::Zero(2), f2), 0, t, q);
  const VectorXd ab = reference_trajectory(single(damped_plant(), r0, both), 0, t, q);
  EXPECT_LE((a + b - ab).norm(), 1e-12);
}

TEST(ReferenceSet, ValidationRejectsMismatches) {
  ReferenceSet rs;
  rs.plant = damped_plant();
  rs.initial_states = {VectorXd::Zero(2)};
  rs.inputs = {InputDescriptor::zero(1)};
  EXPECT_THROW(rs.validate(), Error);  // N >= 2 required
  rs.initial_states.push_back(VectorXd::Zero(3));
  rs.inputs.push_back(InputDescriptor::zero(1));
  EXPECT_THROW(rs.validate(), Error);
}

}  // namespace
}  // namespace avgtrack
