#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "robustpath/regions.hpp"

using namespace robustpath;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

FeasibleRegion sharpness_region() {
  Matrix A(1, 2);
  A << 1.0, 2.0;
  return FeasibleRegion::eq_box(A, vec({2.0}), vec({0.5, 0.0}), vec({kInf, kInf}));
}

struct RandomPolyhedron {
  Matrix A;
  Vector b, lb, ub;
  FeasibleRegion region;
};

// Bounded polyhedron {A x = b, lb <= x <= ub} around a random interior point.
RandomPolyhedron random_polyhedron(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index m = 1 + static_cast<Eigen::Index>(u(rng) * 2.0) % n;
  RandomPolyhedron p{oracle::gaussian(rng, m * n).reshaped(m, n), Vector(), Vector(n), Vector(n),
                     FeasibleRegion::simplex(1)};
  Vector interior(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.lb[i] = u(rng) < 0.5 ? 0.0 : -1.0;
    p.ub[i] = p.lb[i] + 0.5 + u(rng);
    interior[i] = p.lb[i] + (p.ub[i] - p.lb[i]) * (0.2 + 0.6 * u(rng));
  }
  p.b = p.A * interior;
  p.region = FeasibleRegion::eq_box(p.A, p.b, p.lb, p.ub);
  return p;
}

// Convex combination of LP vertices of a bounded region.
Vector random_feasible(std::mt19937_64& rng, const FeasibleRegion& region) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector z = Vector::Zero(region.dimension());
  double total = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double w = u(rng);
    z += w * region.linear_minimize(oracle::gaussian(rng, region.dimension())).x;
    total += w;
  }
  return z / total;
}

std::vector<DistanceGenerator> generators(std::mt19937_64& rng, Eigen::Index n) {
  return {DistanceGenerator::euclidean(n),
          DistanceGenerator(GaugeSet::ellipsoid(oracle::random_spd(rng, n, 10.0)), PostComposition::half_square()),
          DistanceGenerator(GaugeSet::lp_ball(n, 1.5), PostComposition::half_square()),
          DistanceGenerator(GaugeSet::lp_ball(n, 2.5), PostComposition::power_mean(3.0))};
}

}  // namespace

TEST(Membership, Hyperplane) {
  const FeasibleRegion h = FeasibleRegion::hyperplane(vec({1, 1}), 1.0);
  EXPECT_TRUE(h.contains(vec({0.5, 0.5})));
  EXPECT_FALSE(h.contains(vec({0.5, 0.6})));
}

TEST(Membership, SimplexRejectsNegativeCoordinate) {
  EXPECT_FALSE(FeasibleRegion::simplex(3).contains(vec({0.5, 0.6, -0.1})));
  EXPECT_TRUE(FeasibleRegion::simplex(3).contains(vec({0.5, 0.5, 0.0})));
}

TEST(Membership, EuclideanBallBoundary) {
  EXPECT_TRUE(FeasibleRegion::norm_ball(GaugeSet::lp_ball(2, 2.0), 1.0).contains(vec({0.6, 0.8})));
  EXPECT_FALSE(FeasibleRegion::norm_ball(GaugeSet::lp_ball(2, 2.0), 1.0).contains(vec({0.6, 0.81})));
}

TEST(Membership, RejectsEmptyRegion) {
  Matrix A(1, 2);
  A << 1.0, 1.0;
  EXPECT_THROW(FeasibleRegion::eq_box(A, vec({3.0}), vec({0, 0}), vec({1, 1})), InfeasibleError);
}

TEST(Face, SimplexInterior) {
  const FaceSignature f = face_signature(FeasibleRegion::simplex(3), Vector::Constant(3, 1.0 / 3.0));
  EXPECT_TRUE(f.active_lower.empty());
  EXPECT_TRUE(f.active_upper.empty());
}

TEST(Face, SimplexEdge) {
  const FaceSignature f = face_signature(FeasibleRegion::simplex(3), vec({0.8, 0.2, 0.0}));
  EXPECT_EQ(f.active_lower, std::vector<int>{2});
  EXPECT_TRUE(f.active_upper.empty());
}

TEST(Face, SharpnessLowerBound) {
  const FaceSignature f = face_signature(sharpness_region(), vec({0.5, 0.75}));
  EXPECT_EQ(f.active_lower, std::vector<int>{0});
  EXPECT_TRUE(f.subset_of(face_signature(sharpness_region(), vec({0.5, 0.75}))));
}

TEST(Face, BallBoundaryFlag) {
  const FeasibleRegion ball = FeasibleRegion::norm_ball(GaugeSet::lp_ball(2, 2.0), 1.0);
  EXPECT_TRUE(face_signature(ball, vec({0.6, 0.8})).on_gauge_boundary);
  EXPECT_FALSE(face_signature(ball, vec({0.3, 0.4})).on_gauge_boundary);
}

TEST(Projection, SimplexFromOriginIsUniform) {
  const Vector x = bregman_project(DistanceGenerator::euclidean(3), FeasibleRegion::simplex(3), Vector::Zero(3));
  EXPECT_LE((x - Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, SimplexEdgeAgreesWithSortingAndEnumeration) {
  const Vector y = vec({0.9, 0.3, -0.2});
  const Vector x = bregman_project(DistanceGenerator::euclidean(3), FeasibleRegion::simplex(3), y);
  EXPECT_LE((x - vec({0.8, 0.2, 0.0})).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((oracle::simplex_projection_sort(y) - x).cwiseAbs().maxCoeff(), 1e-12);
  const Vector kkt = oracle::kkt_enumeration_qp(Matrix::Identity(3, 3), -y, Matrix::Ones(1, 3), vec({1.0}),
                                                Vector::Zero(3), Vector::Constant(3, kInf));
  EXPECT_LE((kkt - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, LineFromOrigin) {
  const Vector x = bregman_project(DistanceGenerator::euclidean(2), FeasibleRegion::hyperplane(vec({1, 2}), 2.0),
                                   Vector::Zero(2));
  EXPECT_LE((x - vec({0.4, 0.8})).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, SharpnessRegionFromOrigin) {
  const Vector x = bregman_project(DistanceGenerator::euclidean(2), sharpness_region(), Vector::Zero(2));
  EXPECT_LE((x - vec({0.5, 0.75})).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AffineHull, SharpnessRegion) {
  const Vector x = project_affine_hull(DistanceGenerator::euclidean(2), sharpness_region(), Vector::Zero(2));
  EXPECT_LE((x - vec({0.4, 0.8})).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AffineHull, SimplexHullFromOrigin) {
  const Vector x = project_affine_hull(DistanceGenerator::euclidean(3), FeasibleRegion::simplex(3), Vector::Zero(3));
  EXPECT_LE((x - Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AffineHull, IdentityOnHullPoints) {
  const Vector y = vec({0.7, -0.2, 0.5});
  const Vector x = project_affine_hull(DistanceGenerator::euclidean(3), FeasibleRegion::simplex(3), y);
  EXPECT_LE((x - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AffineHull, ImplicitEqualityIsDetected) {
  // x1 + x2 = 1 with x1 >= 1 forces x2 <= 0, and x2 >= 0 pins x2 = 0.
  Matrix A(1, 2);
  A << 1.0, 1.0;
  const FeasibleRegion r = FeasibleRegion::eq_box(A, vec({1.0}), vec({1.0, 0.0}), vec({kInf, kInf}));
  EXPECT_EQ(r.affine_hull_matrix().rows(), 2);
  const Vector x = project_affine_hull(DistanceGenerator::euclidean(2), r, vec({5.0, 3.0}));
  EXPECT_LE((x - vec({1.0, 0.0})).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Linear, SimplexVertex) {
  const LpResult r = FeasibleRegion::simplex(3).linear_minimize(vec({3, 1, 2}));
  EXPECT_EQ(r.status, LpStatus::Optimal);
  EXPECT_LE((r.x - vec({0, 1, 0})).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Linear, UnboundedThrows) {
  EXPECT_THROW(FeasibleRegion::hyperplane(vec({1, 1}), 1.0).linear_minimize(vec({1, 0})), UnboundedError);
}

// ----------------------------------------------------------- properties

TEST(ProjectionProperty, EuclideanMatchesKktEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const RandomPolyhedron p = random_polyhedron(rng, n);
    const Vector y = 2.0 * oracle::gaussian(rng, n);
    const Vector x = bregman_project(DistanceGenerator::euclidean(n), p.region, y);
    const Vector ref = oracle::kkt_enumeration_qp(Matrix::Identity(n, n), -y, p.A, p.b, p.lb, p.ub);
    ASSERT_EQ(ref.size(), n);
    EXPECT_LE((x - ref).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
  }
}

TEST(ProjectionProperty, EllipsoidalMatchesKktEnumeration) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const RandomPolyhedron p = random_polyhedron(rng, n);
    const Matrix A = oracle::random_spd(rng, n, 20.0);
    const DistanceGenerator phi(GaugeSet::ellipsoid(A), PostComposition::half_square());
    const Matrix M = A.inverse();
    const Vector y = 2.0 * oracle::gaussian(rng, n);
    const Vector x = bregman_project(phi, p.region, y);
    const Vector ref = oracle::kkt_enumeration_qp(M, -M * y, p.A, p.b, p.lb, p.ub);
    EXPECT_LE((x - ref).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
  }
}

TEST(ProjectionProperty, SimplexMatchesSorting) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + trial % 30;
    const Vector y = oracle::gaussian(rng, n);
    const Vector x = bregman_project(DistanceGenerator::euclidean(n), FeasibleRegion::simplex(n), y);
    EXPECT_LE((x - oracle::simplex_projection_sort(y)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ProjectionProperty, Idempotent) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 3 + trial % 3;
    const RandomPolyhedron p = random_polyhedron(rng, n);
    for (const DistanceGenerator& phi : generators(rng, n)) {
      const Vector x = bregman_project(phi, p.region, 2.0 * oracle::gaussian(rng, n));
      EXPECT_LE((bregman_project(phi, p.region, x) - x).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(ProjectionProperty, ProjectionThroughAffineHullIsUnchanged) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 3 + trial % 3;
    const RandomPolyhedron p = random_polyhedron(rng, n);
    for (const DistanceGenerator& phi : generators(rng, n)) {
      const Vector y = 2.0 * oracle::gaussian(rng, n);
      const Vector direct = bregman_project(phi, p.region, y);
      const Vector via = bregman_project(phi, p.region, project_affine_hull(phi, p.region, y));
      EXPECT_LE((direct - via).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    }
  }
}

TEST(ProjectionProperty, EuclideanAffineHullMatchesClosedForm) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 3 + trial % 4;
    const RandomPolyhedron p = random_polyhedron(rng, n);
    const Matrix A = oracle::random_spd(rng, n, 10.0);
    const DistanceGenerator phi(GaugeSet::ellipsoid(A), PostComposition::half_square());
    const Vector y = oracle::gaussian(rng, n);
    // The random polyhedra have interior points, so Aff X = {A x = b}; M^{-1} = A.
    const Vector ref = oracle::affine_projection(y, p.A, p.b, A);
    EXPECT_LE((project_affine_hull(phi, p.region, y) - ref).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ProjectionProperty, VariationalInequality) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 3 + trial % 3;
    const RandomPolyhedron p = random_polyhedron(rng, n);
    for (const DistanceGenerator& phi : generators(rng, n)) {
      const Vector y = 2.0 * oracle::gaussian(rng, n);
      const Vector x = bregman_project(phi, p.region, y);
      const Vector g = dgf_grad(phi, x) - dgf_grad(phi, y);
      const double scale = 1.0 + dgf_grad(phi, y).cwiseAbs().maxCoeff();
      double worst = kInf;
      for (int s = 0; s < 1000; ++s) worst = std::min(worst, g.dot(random_feasible(rng, p.region) - x));
      EXPECT_GE(worst, -1e-7 * scale) << "trial " << trial;
    }
  }
}

TEST(ProjectionProperty, BallProjectionMatchesMultiplierSearch) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const Matrix U = oracle::random_spd(rng, n, 10.0);
    const Matrix A = oracle::random_spd(rng, n, 10.0);
    const FeasibleRegion ball = FeasibleRegion::norm_ball(GaugeSet::ellipsoid(U), 0.7);
    const DistanceGenerator phi(GaugeSet::ellipsoid(A), PostComposition::half_square());
    const Matrix M = A.inverse();
    const Vector y = 2.0 * oracle::gaussian(rng, n);
    const Vector ref = oracle::ellipsoid_ball_qp(M, -M * y, U, 0.7);
    EXPECT_LE((bregman_project(phi, ball, y) - ref).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
  }
}

TEST(ProjectionProperty, NonExpansiveUpToKappa) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 3 + trial % 3;
    const RandomPolyhedron p = random_polyhedron(rng, n);
    const DistanceGenerator phi(GaugeSet::ellipsoid(oracle::random_spd(rng, n, 3.0)), PostComposition::half_square());
    const double kappa = kappa_bound(*phi.smoothness());
    const Vector a = 2.0 * oracle::gaussian(rng, n);
    const Vector b = 2.0 * oracle::gaussian(rng, n);
    const double lhs = bregman_divergence(phi, bregman_project(phi, p.region, a), bregman_project(phi, p.region, b));
    EXPECT_LE(lhs, kappa * bregman_divergence(phi, a, b) * (1.0 + 1e-6));
  }
}

TEST(ProjectionProperty, GridBruteForceInTwoDimensions) {
  std::mt19937_64 rng(20);
  const Vector lb = vec({-1.0, 0.0});
  const Vector ub = vec({1.0, 2.0});
  const FeasibleRegion box = FeasibleRegion::eq_box(Matrix(0, 2), Vector(0), lb, ub);
  const int per_axis = 801;
  const double spacing = 2.0 / (per_axis - 1);
  for (const DistanceGenerator& phi : generators(rng, 2)) {
    for (int trial = 0; trial < 5; ++trial) {
      const Vector y = 3.0 * oracle::gaussian(rng, 2);
      const Vector x = bregman_project(phi, box, y);
      const Vector grid = oracle::grid_minimize([&](const oracle::Vec& z) { return bregman_divergence(phi, z, y); },
                                                [](const oracle::Vec&) { return true; }, lb, ub, per_axis);
      EXPECT_LE(bregman_divergence(phi, x, y), bregman_divergence(phi, grid, y) + 1e-12);
      EXPECT_LE((x - grid).cwiseAbs().maxCoeff(), 4.0 * spacing);
    }
  }
}
