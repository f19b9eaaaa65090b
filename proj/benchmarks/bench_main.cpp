// Microbenchmarks for the hot paths: projections, single subproblems, a full
// trace and a portfolio run.

#include <benchmark/benchmark.h>

#include <random>

#include "robustpath/path_engine.hpp"
#include "robustpath/portfolio.hpp"

using namespace robustpath;

namespace {

Vector gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> d;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// SPD matrix with condition number about 10.
Matrix spd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix B = gaussian(rng, n * n).reshaped(n, n);
  const Eigen::HouseholderQR<Matrix> qr(B);
  const Matrix Q = qr.householderQ();
  Vector eig(n);
  for (Eigen::Index i = 0; i < n; ++i) eig[i] = std::pow(10.0, static_cast<double>(i) / std::max<Eigen::Index>(1, n - 1));
  return Q * eig.asDiagonal() * Q.transpose();
}

DistanceGenerator generator(int kind, std::mt19937_64& rng, Eigen::Index n) {
  switch (kind) {
    case 0:
      return DistanceGenerator::euclidean(n);
    case 1:
      return DistanceGenerator(GaugeSet::ellipsoid(spd(rng, n)), PostComposition::half_square());
    default:
      return DistanceGenerator(GaugeSet::lp_ball(n, 2.5), PostComposition::power_mean(1.5));
  }
}

const char* generator_name(int kind) {
  static const char* names[] = {"euclidean", "ellipsoid", "lp2.5_power1.5"};
  return names[kind];
}

void BM_SimplexProjection(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const int kind = static_cast<int>(state.range(1));
  std::mt19937_64 rng(1);
  const DistanceGenerator phi = generator(kind, rng, n);
  const FeasibleRegion X = FeasibleRegion::simplex(n);
  const Vector y = gaussian(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(bregman_project(phi, X, y));
  state.SetLabel(generator_name(kind));
}
BENCHMARK(BM_SimplexProjection)->ArgsProduct({{10, 50, 200}, {0, 1, 2}});

void BM_BallProjection(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(2);
  const DistanceGenerator phi = generator(1, rng, n);
  const FeasibleRegion X = FeasibleRegion::norm_ball(GaugeSet::ellipsoid(spd(rng, n)), 1.0);
  const Vector y = 3.0 * gaussian(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(bregman_project(phi, X, y));
}
BENCHMARK(BM_BallProjection)->Arg(10)->Arg(50);

void BM_ProximalStep(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const int kind = static_cast<int>(state.range(1));
  std::mt19937_64 rng(3);
  const Vector ub = Vector::Constant(n, 3.0 / static_cast<double>(n));
  const ProblemInstance inst(gaussian(rng, n),
                             FeasibleRegion::eq_box(Matrix::Ones(1, n), Vector::Ones(1), Vector::Zero(n), ub),
                             generator(kind, rng, n));
  const Vector x0 = solve_regularized(inst, kOmegaInfinity).x;
  for (auto _ : state) benchmark::DoNotOptimize(proximal_step(inst, 1.0, x0));
  state.SetLabel(generator_name(kind));
}
BENCHMARK(BM_ProximalStep)->ArgsProduct({{10, 50}, {0, 1, 2}});

void BM_RcDual(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(4);
  const ProblemInstance inst(gaussian(rng, n), FeasibleRegion::simplex(n), generator(1, rng, n));
  for (auto _ : state) benchmark::DoNotOptimize(solve_rc_dual(inst, 0.5));
}
BENCHMARK(BM_RcDual)->Arg(10)->Arg(50);

void BM_TraceProximalPath(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(5);
  const ProblemInstance inst(gaussian(rng, n), FeasibleRegion::simplex(n), generator(1, rng, n));
  const StepSchedule schedule = StepSchedule::geometric_omega(200);
  for (auto _ : state) benchmark::DoNotOptimize(trace_proximal_path(inst, schedule));
}
BENCHMARK(BM_TraceProximalPath)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_PortfolioRun(benchmark::State& state) {
  const ReturnsTable table = synthetic_returns(20240607);
  PortfolioOptions opt;
  opt.region = static_cast<PortfolioRegion>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_portfolio(table, opt));
  state.SetLabel(to_string(opt.region));
}
BENCHMARK(BM_PortfolioRun)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
