#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "robustpath/path_engine.hpp"
#include "robustpath/path_io.hpp"

using namespace robustpath;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

double inf_dist(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

ProblemInstance simplex3(const Vector& a0 = vec({3, 1, 2})) {
  return ProblemInstance(a0, FeasibleRegion::simplex(3), DistanceGenerator::euclidean(3));
}

ProblemInstance sharpness() {
  Matrix A(1, 2);
  A << 1.0, 2.0;
  return ProblemInstance(vec({-1, 1}), FeasibleRegion::eq_box(A, vec({2.0}), vec({0.5, 0.0}), vec({kInf, kInf})),
                         DistanceGenerator::euclidean(2));
}

std::vector<double> omegas_of(const TracedPath& p) {
  std::vector<double> out;
  for (const PathPoint& q : p.points) out.push_back(q.omega);
  return out;
}

}  // namespace

TEST(Omega, AccumulatesHarmonically) {
  const auto w = accumulate_omega({1, 1, 1});
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  EXPECT_DOUBLE_EQ(w[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(accumulate_omega({2})[0], 2.0);
  const auto v = accumulate_omega({1, 2, 4});
  EXPECT_DOUBLE_EQ(v[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(v[2], 4.0 / 7.0);
  EXPECT_THROW(accumulate_omega({1, 0}), InputError);
}

TEST(Schedule, RejectsSummableSteps) {
  EXPECT_THROW(StepSchedule::geometric(1.0, 1.5).validate(), InputError);
  EXPECT_THROW(StepSchedule::constant(0.0).validate(), InputError);
  EXPECT_THROW(StepSchedule::explicit_steps({}).validate(), InputError);
  EXPECT_NO_THROW(StepSchedule::geometric(1.0, 0.5).validate());
}

TEST(Trace, ZeroCostStaysAtPhiMinimizer) {
  const ProblemInstance inst = simplex3(Vector::Zero(3));
  const TracedPath p = trace_proximal_path(inst, StepSchedule::constant(1.0), StopRule{0.0, 5});
  ASSERT_FALSE(p.points.empty());
  for (const PathPoint& q : p.points) EXPECT_LE(inf_dist(q.x, Vector::Constant(3, 1.0 / 3.0)), 1e-12);
}

TEST(Trace, SimplexUnitStepReachesVertex) {
  const TracedPath p = trace_proximal_path(simplex3(), StepSchedule::constant(1.0));
  ASSERT_GE(p.points.size(), 2u);
  EXPECT_LE(inf_dist(p.points[0].x, Vector::Constant(3, 1.0 / 3.0)), 1e-12);
  EXPECT_LE(inf_dist(p.points[1].x, vec({0, 1, 0})), 1e-12);
  EXPECT_EQ(p.points.size(), 2u);  // x_E reached, stop rule fires
  EXPECT_TRUE(p.complete);
}

TEST(Trace, SharpnessEndpoints) {
  const TracedPath p = trace_proximal_path(sharpness(), StepSchedule::geometric_omega(200));
  ASSERT_TRUE(p.complete);
  EXPECT_LE(inf_dist(p.points.front().x, vec({0.5, 0.75})), 1e-12);
  EXPECT_LE(inf_dist(p.points.back().x, vec({2.0, 0.0})), 1e-6);
  ASSERT_TRUE(p.nominal_optimum.has_value());
  EXPECT_NEAR(*p.nominal_optimum, -2.0, 1e-12);
}

TEST(Trace, OmegaAndRadiusColumnsAreConsistent) {
  const ProblemInstance inst = sharpness();
  const TracedPath p = trace_proximal_path(inst, StepSchedule::harmonic(0.5), StopRule{1e-10, 50});
  double inv = 0.0;
  for (std::size_t k = 1; k < p.points.size(); ++k) {
    inv += 1.0 / p.points[k].lambda;
    EXPECT_NEAR(p.points[k].omega, 1.0 / inv, 1e-12 / inv);
    EXPECT_NEAR(p.points[k].r, radius_for(inst, p.points[k].omega, p.points[k].x), 1e-12);
  }
  EXPECT_TRUE(std::isinf(p.points[0].r));
}

TEST(Trace, ReferenceGridMatchesClosedForm) {
  const TracedPath p = trace_reference_robust_path(sharpness(), {2.0, 1.0, 0.8});
  ASSERT_EQ(p.points.size(), 3u);
  for (const PathPoint& q : p.points) {
    EXPECT_LE(inf_dist(q.x, oracle::SharpnessSegment::regularized(q.omega)), 1e-10);
  }
  EXPECT_THROW(trace_reference_robust_path(sharpness(), {1.0, 2.0}), InputError);
}

TEST(Trace, CentralGridMatchesClosedForm) {
  const TracedPath p = trace_central_path(sharpness(), {kInf, 4.0, 1.0, 0.5}, vec({0.5, 0.75}));
  for (const PathPoint& q : p.points) {
    const Vector ref = std::isinf(q.omega) ? vec({0.5, 0.75}) : oracle::SharpnessSegment::central(q.omega);
    EXPECT_LE(inf_dist(q.x, ref), 1e-10);
  }
  EXPECT_THROW(trace_central_path(sharpness(), {1.0}, vec({0.0, 0.0})), InfeasibleError);
}

TEST(Monotone, ReentryIntoInteriorIsDetected) {
  TracedPath p;
  PathPoint a;
  a.x = vec({0.8, 0.2, 0.0});
  PathPoint b;
  b.x = vec({0.4, 0.3, 0.3});
  p.points = {a, b};
  EXPECT_FALSE(check_monotone(p, FeasibleRegion::simplex(3)).monotone);
  p.points = {b, a};
  EXPECT_TRUE(check_monotone(p, FeasibleRegion::simplex(3)).monotone);
}

TEST(Monotone, SimplexPathIsMonotoneAndSharpnessPathIsNot) {
  EXPECT_EQ(trace_proximal_path(simplex3(), StepSchedule::geometric_omega(100)).monotone, std::optional<bool>(true));
  // The sharpness path leaves the face x1 = 0.5 immediately.
  EXPECT_EQ(trace_proximal_path(sharpness(), StepSchedule::geometric_omega(50)).monotone, std::optional<bool>(false));
}

TEST(Bounds, AnchorGapVanishesWhenOriginIsFeasible) {
  const ProblemInstance inst(vec({1, -1}), FeasibleRegion::hyperplane(vec({1, 1}), 0.0),
                             DistanceGenerator::euclidean(2));
  EXPECT_NEAR(theorem2_bound(inst).anchor_gap, 0.0, 1e-15);
}

TEST(Bounds, SharpnessAnchorGap) {
  const BoundReport r = theorem2_bound(sharpness());
  EXPECT_NEAR(r.anchor_gap, oracle::SharpnessSegment::kAnchorGap, 1e-12);
  EXPECT_NEAR(r.theorem2_bound, oracle::SharpnessSegment::kAnchorGap, 1e-12);
  EXPECT_DOUBLE_EQ(r.kappa, 1.0);
  EXPECT_FALSE(anchors_coincide(sharpness()));
}

TEST(Bounds, SimplexAnchorsCoincide) {
  EXPECT_NEAR(theorem2_bound(simplex3()).anchor_gap, 0.0, 1e-15);
  EXPECT_TRUE(anchors_coincide(simplex3()));
}

TEST(Bounds, KappaNeedsQuadraticGenerator) {
  const ProblemInstance inst(vec({1, 0, 0}), FeasibleRegion::simplex(3),
                             DistanceGenerator(GaugeSet::lp_ball(3, 3.0), PostComposition::half_square()));
  EXPECT_THROW(instance_kappa(inst), InputError);
}

TEST(Bounds, Theorem3ObservesNothingWhenPathsCoincide) {
  // Without bounds there is a single face, and proximal and central points coincide.
  const ProblemInstance inst(vec({1, 0, 0}), FeasibleRegion::hyperplane(vec({1, 1, 1}), 1.0),
                             DistanceGenerator::euclidean(3));
  const TracedPath prox = trace_proximal_path(inst, StepSchedule::geometric_omega(40, 10.0, 0.1));
  const TracedPath central = trace_central_path(inst, omegas_of(prox), prox.anchor);
  const BoundReport r = theorem3_bound(inst, prox, central, 1.0);
  EXPECT_LE(r.observed_max_gap, 1e-24);
  EXPECT_THROW(theorem3_bound(inst, central, prox, 1.0), InputError);
}

TEST(Bounds, Theorem3HoldsAcrossFaceChanges) {
  const ProblemInstance inst = simplex3();
  const TracedPath prox = trace_proximal_path(inst, StepSchedule::geometric_omega(60));
  const TracedPath central = trace_central_path(inst, omegas_of(prox), prox.anchor);
  const BoundReport r = theorem3_bound(inst, prox, central, 1.0);
  ASSERT_FALSE(r.per_face.empty());
  for (const FaceBound& f : r.per_face) {
    if (f.applicable) EXPECT_LE(f.observed, f.bound + 1e-8) << f.face.to_string();
  }
}

TEST(Compare, IdenticalPathsHaveZeroDivergence) {
  const TracedPath p = trace_proximal_path(sharpness(), StepSchedule::geometric_omega(30));
  EXPECT_EQ(compare_paths(p, p, sharpness().phi(), Matching::ByOmega), 0.0);
  EXPECT_EQ(compare_paths(p, p, sharpness().phi(), Matching::Nearest), 0.0);
}

TEST(Io, FormatsNonFiniteValues) {
  EXPECT_EQ(format_double(kInf), "inf");
  EXPECT_EQ(format_double(-kInf), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
}

TEST(Io, CsvHasOneRowPerPointAndRejectsBadRadius) {
  const ProblemInstance inst = sharpness();
  TracedPath p = trace_proximal_path(inst, StepSchedule::geometric_omega(20));
  std::ostringstream out;
  write_path_csv(out, p, inst);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,omega,r,lambda,x1,x2,nominal,phi,face,vi_residual");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, p.points.size());
  p.points[3].r *= 1.01;
  std::ostringstream bad;
  EXPECT_THROW(write_path_csv(bad, p, inst), SolverError);
}

// ----------------------------------------------------------- properties

TEST(PathProperty, ProximalPathIsReferencePathOnSimplices) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 3 + trial;
    const Vector a0 = oracle::gaussian(rng, n);
    const ProblemInstance inst(a0, FeasibleRegion::simplex(n), DistanceGenerator::euclidean(n));
    const TracedPath p = trace_proximal_path(inst, StepSchedule::geometric_omega(80));
    ASSERT_TRUE(p.complete);
    EXPECT_EQ(p.monotone, std::optional<bool>(true));
    for (std::size_t k = 1; k < p.points.size(); ++k) {
      EXPECT_LE(inf_dist(p.points[k].x, oracle::simplex_projection_sort(-a0 / p.points[k].omega)), 1e-9);
    }
  }
}

TEST(PathProperty, FirstProximalPointIsCentralPoint) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 3 + trial % 3;
    const Matrix G = oracle::random_spd(rng, n, 10.0);
    const ProblemInstance inst(oracle::gaussian(rng, n), FeasibleRegion::simplex(n),
                               DistanceGenerator(GaugeSet::ellipsoid(G), PostComposition::half_square()));
    const TracedPath p = trace_proximal_path(inst, StepSchedule::constant(0.3 + trial), StopRule{1e-8, 3});
    ASSERT_GE(p.points.size(), 2u);
    const Vector cp = central_point(inst, p.points[1].lambda, p.points[0].x).x;
    EXPECT_LE(inf_dist(p.points[1].x, cp), 1e-8);
  }
}

TEST(PathProperty, CentralPathNeverExceedsAnchorGapBound) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 15; ++trial) {
    const Eigen::Index n = 3 + trial % 3;
    const Vector ub = Vector::Constant(n, 0.4 + 0.4 * u(rng));
    const FeasibleRegion X = FeasibleRegion::eq_box(Matrix::Ones(1, n), vec({1.0}), Vector::Zero(n), ub);
    const Matrix G = oracle::random_spd(rng, n, 4.0);
    const ProblemInstance inst(oracle::gaussian(rng, n), X,
                               DistanceGenerator(GaugeSet::ellipsoid(G), PostComposition::half_square()));
    const BoundReport b = theorem2_bound(inst);
    const Vector x_r = solve_regularized(inst, kOmegaInfinity).x;
    for (double omega = 50.0; omega > 0.02; omega /= 1.4) {
      const Vector xc = central_point(inst, omega, x_r).x;
      const Vector xr = solve_regularized(inst, omega).x;
      EXPECT_LE(bregman_divergence(inst.phi(), xc, xr), b.theorem2_bound + 1e-8) << trial << " " << omega;
    }
  }
}

TEST(PathProperty, NominalCostDecreasesAlongProximalPath) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 4;
    const ProblemInstance inst(oracle::gaussian(rng, n), FeasibleRegion::simplex(n),
                               DistanceGenerator(GaugeSet::lp_ball(n, 2.5), PostComposition::power_mean(1.5)));
    const TracedPath p = trace_proximal_path(inst, StepSchedule::geometric_omega(60));
    ASSERT_TRUE(p.complete) << p.failure;
    for (std::size_t k = 1; k < p.points.size(); ++k) {
      EXPECT_LE(p.points[k].objective_nominal, p.points[k - 1].objective_nominal + 1e-10);
    }
  }
}
