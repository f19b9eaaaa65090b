#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "robustpath/gauge.hpp"

using namespace robustpath;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

Matrix diag41() { return Vector(v2(4.0, 1.0)).asDiagonal(); }

// Every shape/post-composition pair the tests sweep over.
std::vector<DistanceGenerator> generator_family(std::mt19937_64& rng, Eigen::Index n) {
  std::vector<DistanceGenerator> out;
  const PostComposition posts[] = {PostComposition::half_square(), PostComposition::power_mean(1.5),
                                   PostComposition::power_mean(3.0)};
  for (const PostComposition& g : posts) {
    for (double p : {1.5, 2.0, 2.5}) out.emplace_back(GaugeSet::lp_ball(n, p), g);
    for (double cond : {1.0, 10.0, 100.0}) out.emplace_back(GaugeSet::ellipsoid(oracle::random_spd(rng, n, cond)), g);
  }
  return out;
}

}  // namespace

TEST(GaugeNorm, EuclideanLength) { EXPECT_NEAR(gauge_norm(GaugeSet::lp_ball(2, 2.0), v2(3, 4)), 5.0, 1e-12); }

TEST(GaugeNorm, EllipsoidBoundaryPoint) {
  EXPECT_NEAR(gauge_norm(GaugeSet::ellipsoid(diag41()), v2(0.5, 0.0)), 1.0, 1e-12);
}

TEST(GaugeNorm, FractionalExponentMatchesBisection) {
  const double p = 5.0 / 3.0;
  const Vector x = v2(1.0, 1.0);
  const double expected = std::pow(2.0, 3.0 / 5.0);
  EXPECT_NEAR(gauge_norm(GaugeSet::lp_ball(2, p), x), expected, 1e-12);
  const double bis = oracle::bisection_gauge([p](const oracle::Vec& u) { return oracle::in_lp_ball(u, p); }, x);
  EXPECT_NEAR(bis, expected, 1e-12);
}

TEST(GaugeNorm, EllipsoidPolarNorm) {
  EXPECT_NEAR(polar_gauge_norm(GaugeSet::ellipsoid(diag41()), v2(1.0, 0.0)), 0.5, 1e-12);
}

TEST(GaugeNorm, PolarNormAtOrigin) {
  EXPECT_EQ(polar_gauge_norm(GaugeSet::lp_ball(3, 1.7), Vector::Zero(3)), 0.0);
  EXPECT_EQ(polar_gauge_norm(GaugeSet::ellipsoid(Matrix::Identity(3, 3) * 2.0), Vector::Zero(3)), 0.0);
}

TEST(GaugeNorm, RejectsBadParameters) {
  EXPECT_THROW(GaugeSet::lp_ball(2, 1.0), InputError);
  EXPECT_THROW(GaugeSet::lp_ball(2, std::numeric_limits<double>::infinity()), InputError);
  Matrix indefinite = diag41();
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(GaugeSet::ellipsoid(indefinite), InputError);
  EXPECT_THROW(PostComposition::power_mean(1.0), InputError);
}

TEST(GaugeNorm, PolarOfPolarIsOriginal) {
  std::mt19937_64 rng(1);
  const GaugeSet e = GaugeSet::ellipsoid(oracle::random_spd(rng, 3, 20.0));
  EXPECT_TRUE(e.polar_set().polar_set().approx_equal(e, 1e-10));
  const GaugeSet l = GaugeSet::lp_ball(3, 1.5);
  EXPECT_NEAR(l.polar_set().p(), 3.0, 1e-12);
}

TEST(Dgf, EuclideanGradientIsIdentity) {
  const DistanceGenerator phi = DistanceGenerator::euclidean(3);
  const Vector x = (Vector(3) << 1.0, -2.0, 0.5).finished();
  EXPECT_LE((dgf_grad(phi, x) - x).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(dgf_value(phi, x), 0.5 * x.squaredNorm(), 1e-15);
}

TEST(Dgf, EllipsoidHalfSquareGradient) {
  const DistanceGenerator phi(GaugeSet::ellipsoid(diag41()), PostComposition::half_square());
  EXPECT_LE((dgf_grad(phi, v2(1, 2)) - v2(0.25, 2.0)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(phi.is_quadratic());
}

TEST(Dgf, VanishesAtOrigin) {
  std::mt19937_64 rng(2);
  for (const DistanceGenerator& phi : generator_family(rng, 3)) {
    EXPECT_EQ(dgf_value(phi, Vector::Zero(3)), 0.0);
    EXPECT_EQ(dgf_grad(phi, Vector::Zero(3)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Bregman, EuclideanUnitStep) {
  EXPECT_NEAR(bregman_divergence(DistanceGenerator::euclidean(2), v2(1, 0), v2(0, 0)), 0.5, 1e-15);
}

TEST(Bregman, AsymmetricForNonQuadraticGenerator) {
  const DistanceGenerator phi(GaugeSet::lp_ball(2, 5.0 / 3.0), PostComposition::half_square());
  const Vector x = v2(1.0, 0.1);
  const Vector y = v2(0.2, 0.9);
  EXPECT_GT(std::abs(bregman_divergence(phi, x, y) - bregman_divergence(phi, y, x)), 1e-6);
}

TEST(Kappa, CubeOfConditionRatio) {
  EXPECT_DOUBLE_EQ(kappa_bound(DgfSmoothness::from_constants(1.0, 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(kappa_bound(DgfSmoothness::from_constants(2.0, 1.0)), 8.0);
}

TEST(Kappa, QuadraticGeneratorConstantsAreMetricEigenvalues) {
  const DistanceGenerator phi(GaugeSet::ellipsoid(diag41()), PostComposition::half_square());
  const auto s = phi.smoothness();
  ASSERT_TRUE(s.has_value());
  // phi = x' A^{-1} x / 2 with A^{-1} = diag(1/4, 1).
  EXPECT_NEAR(s->L, 1.0, 1e-12);
  EXPECT_NEAR(s->mu, 0.25, 1e-12);
  EXPECT_NEAR(s->kappa, 64.0, 1e-9);
  EXPECT_FALSE(DistanceGenerator(GaugeSet::lp_ball(2, 3.0), PostComposition::half_square()).smoothness());
}

// ----------------------------------------------------------- properties

TEST(GaugeProperty, PositiveHomogeneity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const GaugeSet s = trial % 2 ? GaugeSet::lp_ball(n, 1.2 + 0.1 * (trial % 30))
                                 : GaugeSet::ellipsoid(oracle::random_spd(rng, n, 50.0));
    const Vector x = oracle::gaussian(rng, n);
    const double a = t(rng);
    EXPECT_NEAR(gauge_norm(s, a * x), a * gauge_norm(s, x), 1e-12 * a * gauge_norm(s, x));
    EXPECT_NEAR(polar_gauge_norm(s, a * x), a * polar_gauge_norm(s, x), 1e-12 * a * polar_gauge_norm(s, x));
  }
}

TEST(GaugeProperty, GaugeMatchesBisection) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const double p = 1.3 + 0.05 * trial;
    const Matrix A = oracle::random_spd(rng, n, 30.0);
    const Vector x = oracle::gaussian(rng, n);
    const double lp = oracle::bisection_gauge([p](const oracle::Vec& u) { return oracle::in_lp_ball(u, p); }, x);
    const double el = oracle::bisection_gauge([&A](const oracle::Vec& u) { return oracle::in_ellipsoid(u, A); }, x);
    EXPECT_NEAR(gauge_norm(GaugeSet::lp_ball(n, p), x), lp, 1e-11 * lp);
    EXPECT_NEAR(gauge_norm(GaugeSet::ellipsoid(A), x), el, 1e-11 * el);
  }
}

TEST(GaugeProperty, PolarNormIsSupportFunction) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double p = 1.5 + 0.1 * trial;
    const Matrix A = oracle::random_spd(rng, 2, 10.0);
    const Vector x = oracle::gaussian(rng, 2);
    const double lp = oracle::sampled_support([p](std::mt19937_64& r) { return oracle::lp_boundary_point(r, 2, p); },
                                              x, 20000, 100 + trial);
    const double el = oracle::sampled_support(
        [&A](std::mt19937_64& r) { return oracle::ellipsoid_boundary_point(r, A); }, x, 20000, 200 + trial);
    const double lp_closed = polar_gauge_norm(GaugeSet::lp_ball(2, p), x);
    const double el_closed = polar_gauge_norm(GaugeSet::ellipsoid(A), x);
    EXPECT_LE(lp, lp_closed * (1.0 + 1e-12));
    EXPECT_LE(el, el_closed * (1.0 + 1e-12));
    EXPECT_LE((lp_closed - lp) / lp_closed, 1e-3);
    EXPECT_LE((el_closed - el) / el_closed, 1e-3);
  }
}

TEST(DgfProperty, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  for (const DistanceGenerator& phi : generator_family(rng, 4)) {
    for (int trial = 0; trial < 20; ++trial) {
      Vector x = oracle::gaussian(rng, 4);
      x *= std::pow(10.0, logscale(rng)) / x.norm();
      const Vector g = dgf_grad(phi, x);
      const Vector fd = oracle::finite_difference_gradient([&phi](const oracle::Vec& z) { return dgf_value(phi, z); },
                                                           x, 1e-6);
      EXPECT_LE((g - fd).cwiseAbs().maxCoeff(), 1e-6 * g.cwiseAbs().maxCoeff());
    }
  }
}

TEST(DgfProperty, ConjugateGradientInvertsGradient) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  for (const DistanceGenerator& phi : generator_family(rng, 5)) {
    for (int trial = 0; trial < 50; ++trial) {
      Vector x = oracle::gaussian(rng, 5);
      x *= std::pow(10.0, logscale(rng)) / x.norm();
      EXPECT_LE((dgf_grad_conj(phi, dgf_grad(phi, x)) - x).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(DgfProperty, FenchelYoungEquality) {
  std::mt19937_64 rng(8);
  for (const DistanceGenerator& phi : generator_family(rng, 3)) {
    const Vector x = oracle::gaussian(rng, 3);
    const Vector y = dgf_grad(phi, x);
    EXPECT_NEAR(dgf_value(phi, x) + phi.conjugate_value(y), x.dot(y), 1e-10 * (1.0 + std::abs(x.dot(y))));
  }
}

TEST(BregmanProperty, NonnegativeAndZeroOnDiagonal) {
  std::mt19937_64 rng(9);
  for (const DistanceGenerator& phi : generator_family(rng, 3)) {
    for (int trial = 0; trial < 30; ++trial) {
      const Vector x = oracle::gaussian(rng, 3);
      const Vector y = oracle::gaussian(rng, 3);
      EXPECT_GE(bregman_divergence(phi, x, y), 0.0);
      EXPECT_EQ(bregman_divergence(phi, x, x), 0.0);
      EXPECT_GT(bregman_divergence(phi, x, y), 0.0);
    }
  }
}

TEST(BregmanProperty, QuadraticGeneratorGivesMetricDistance) {
  std::mt19937_64 rng(10);
  const Matrix A = oracle::random_spd(rng, 4, 10.0);
  const DistanceGenerator phi(GaugeSet::ellipsoid(A), PostComposition::half_square());
  const Matrix Ainv = A.inverse();
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::gaussian(rng, 4);
    const Vector y = oracle::gaussian(rng, 4);
    const double expected = 0.5 * (x - y).dot(Ainv * (x - y));
    EXPECT_NEAR(bregman_divergence(phi, x, y), expected, 1e-12 * (1.0 + expected));
  }
}
