#include "avgtrack/signals.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "avgtrack/error.hpp"
#include "avgtrack/numerics.hpp"

namespace avgtrack {

void LinearPlant::validate() const {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("A must be square and nonempty, got {}x{}",
                            a.rows(), a.cols()));
  }
  if (b.rows() != a.rows() || b.cols() == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("B must have {} rows and at least one column, got "
                            "{}x{}",
                            a.rows(), b.rows(), b.cols()));
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "plant has non-finite entries");
  }
}

InputDescriptor InputDescriptor::zero(Eigen::Index dim) {
  InputDescriptor d;
  d.kind = Kind::kZero;
  d.dim = dim;
  return d;
}

InputDescriptor InputDescriptor::constant(Eigen::VectorXd value) {
  InputDescriptor d;
  d.kind = Kind::kConstant;
  d.dim = value.size();
  d.value = std::move(value);
  return d;
}

InputDescriptor InputDescriptor::sinusoid(Eigen::VectorXd amplitude,
                                          double omega, double phase,
                                          Eigen::VectorXd offset) {
  InputDescriptor d;
  d.kind = Kind::kSinusoid;
  d.dim = amplitude.size();
  d.value = offset.size() == 0 ? Eigen::VectorXd::Zero(d.dim)
                               : std::move(offset);
  d.amplitude = std::move(amplitude);
  d.omega = omega;
  d.phase = phase;
  return d;
}

InputDescriptor InputDescriptor::table(std::vector<double> times,
                                       std::vector<Eigen::VectorXd> samples) {
  InputDescriptor d;
  d.kind = Kind::kTable;
  d.dim = samples.empty() ? 0 : samples.front().size();
  d.times = std::move(times);
  d.samples = std::move(samples);
  return d;
}

void InputDescriptor::validate() const {
  switch (kind) {
    case Kind::kZero:
      break;
    case Kind::kConstant:
      if (value.size() != dim || !value.allFinite())
        throw Error(ErrorKind::kInvalidArgument, "bad constant input");
      break;
    case Kind::kSinusoid:
      if (amplitude.size() != dim || value.size() != dim ||
          !amplitude.allFinite() || !value.allFinite() ||
          !std::isfinite(omega) || !std::isfinite(phase))
        throw Error(ErrorKind::kInvalidArgument, "bad sinusoid input");
      break;
    case Kind::kTable:
      if (times.empty() || times.size() != samples.size())
        throw Error(ErrorKind::kInvalidArgument,
                    "table input needs matching, nonempty times/values");
      if (times.front() != 0.0)
        throw Error(ErrorKind::kInvalidArgument,
                    "table input grid must start at t = 0");
      for (std::size_t k = 0; k < times.size(); ++k) {
        if (samples[k].size() != dim || !samples[k].allFinite())
          throw Error(ErrorKind::kInvalidArgument, "bad table sample");
        if (k > 0 && !(times[k] > times[k - 1]))
          throw Error(ErrorKind::kInvalidArgument,
                      "table times must be strictly increasing");
      }
      break;
  }
}

double InputDescriptor::bound() const {
  switch (kind) {
    case Kind::kZero:
      return 0.0;
    case Kind::kConstant:
      return value.norm();
    case Kind::kSinusoid:
      return value.norm() + amplitude.norm();
    case Kind::kTable: {
      double m = 0.0;
      for (const auto& s : samples) m = std::max(m, s.norm());
      return m;
    }
  }
  return 0.0;
}

InputSample eval_input(const InputDescriptor& d, double t) {
  if (!(t >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("input evaluated at t = {} < 0", t));
  }
  switch (d.kind) {
    case InputDescriptor::Kind::kZero:
      return {Eigen::VectorXd::Zero(d.dim), false};
    case InputDescriptor::Kind::kConstant:
      return {d.value, false};
    case InputDescriptor::Kind::kSinusoid:
      return {d.value + d.amplitude * std::sin(d.omega * t + d.phase), false};
    case InputDescriptor::Kind::kTable: {
      if (t >= d.times.back()) return {d.samples.back(), t > d.times.back()};
      const auto it = std::upper_bound(d.times.begin(), d.times.end(), t);
      const auto hi = static_cast<std::size_t>(it - d.times.begin());
      const auto lo = hi - 1;
      const double w = (t - d.times[lo]) / (d.times[hi] - d.times[lo]);
      return {(1.0 - w) * d.samples[lo] + w * d.samples[hi], false};
    }
  }
  return {};
}

void ReferenceSet::validate() const {
  plant.validate();
  if (initial_states.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "need at least two reference signals");
  }
  if (inputs.size() != initial_states.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("{} initial states but {} inputs",
                            initial_states.size(), inputs.size()));
  }
  for (std::size_t i = 0; i < initial_states.size(); ++i) {
    if (initial_states[i].size() != plant.state_dim() ||
        !initial_states[i].allFinite()) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("agent {}: r0 must have {} finite entries",
                              i + 1, plant.state_dim()));
    }
    if (inputs[i].dim != plant.input_dim()) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("agent {}: input dimension {} != {}", i + 1,
                              inputs[i].dim, plant.input_dim()));
    }
    inputs[i].validate();
  }
}

double input_bound(const ReferenceSet& rs) {
  double f0 = 0.0;
  for (const auto& d : rs.inputs) f0 = std::max(f0, d.bound());
  return f0;
}

int default_quad_steps(double t) {
  return std::max(1, static_cast<int>(std::ceil(2000.0 * t)));
}

Eigen::VectorXd reference_trajectory(const ReferenceSet& rs, std::size_t agent,
                                     double t, int quad_steps) {
  if (!(t >= 0.0) || quad_steps < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "reference_trajectory needs t >= 0 and quad_steps >= 1");
  }
  const auto& plant = rs.plant;
  const auto& input = rs.inputs.at(agent);
  Eigen::VectorXd r = matrix_exp(plant.a, t) * rs.initial_states.at(agent);
  if (t == 0.0 || input.kind == InputDescriptor::Kind::kZero) return r;

  // Simpson nodes tau_k = k h, k = 0..2q. Horner-style accumulation
  // acc <- E acc + w_k B f(tau_k) with E = e^{Ah} yields
  // sum_k w_k e^{A(t - tau_k)} B f(tau_k).
  const int nodes = 2 * quad_steps;
  const double h = t / nodes;
  const Eigen::MatrixXd step = matrix_exp(plant.a, h);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(plant.state_dim());
  for (int k = 0; k <= nodes; ++k) {
    const double w = (k == 0 || k == nodes) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    const double tau = (k == nodes) ? t : k * h;
    acc = step * acc + w * (plant.b * eval_input(input, tau).value);
  }
  return r + (h / 3.0) * acc;
}

}  // namespace avgtrack
