#include <random>

#include <benchmark/benchmark.h>

#include "avgtrack/analysis.hpp"
#include "avgtrack/control.hpp"
#include "avgtrack/numerics.hpp"
#include "avgtrack/scenario.hpp"

namespace {

using namespace avgtrack;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> normal;
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

void BM_SolveAre(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  MatrixXd a, b;
  do {
    a = random_matrix(rng, n, n) / std::sqrt(double(n));
    b = random_matrix(rng, n, 2);
  } while (!is_stabilizable(a, b));
  const MatrixXd q = MatrixXd::Identity(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(solve_are(a, b, q));
}
BENCHMARK(BM_SolveAre)->Arg(2)->Arg(4)->Arg(8);

void BM_MatrixExp(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(2);
  const MatrixXd a = random_matrix(rng, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(matrix_exp(a, 1.7));
}
BENCHMARK(BM_MatrixExp)->Arg(2)->Arg(6)->Arg(16);

void BM_StaticRhs(benchmark::State& state) {
  Scenario s = canned_scenario("paper-sec5-static");
  const SimConfig cfg = build_sim_config(s);
  const StaticClosedLoop loop(cfg.graph, cfg.refs, *cfg.gains);
  std::mt19937_64 rng(3);
  const VectorXd z = random_matrix(rng, 12, 1);
  for (auto _ : state) benchmark::DoNotOptimize(loop(1.0, z));
}
BENCHMARK(BM_StaticRhs);

void BM_AdaptiveRhs(benchmark::State& state) {
  Scenario s = canned_scenario("paper-sec5-adaptive");
  const SimConfig cfg = build_sim_config(s);
  const AdaptiveClosedLoop loop(cfg.graph, cfg.refs, *cfg.adaptive);
  std::mt19937_64 rng(4);
  const VectorXd z = random_matrix(rng, 24, 1);
  for (auto _ : state) benchmark::DoNotOptimize(loop(1.0, z));
}
BENCHMARK(BM_AdaptiveRhs);

void BM_ConsensusManifold(benchmark::State& state) {
  const Scenario s = canned_scenario("paper-sec5-static");
  for (auto _ : state)
    benchmark::DoNotOptimize(consensus_manifold(s.refs, 20.0, default_quad_steps(20.0)));
}
BENCHMARK(BM_ConsensusManifold)->Unit(benchmark::kMillisecond);

void BM_FullRun(benchmark::State& state) {
  Scenario s = canned_scenario(state.range(0) ? "paper-sec5-adaptive"
                                              : "paper-sec5-static");
  s.sim.t_end = 5.0;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(s));
}
BENCHMARK(BM_FullRun)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
