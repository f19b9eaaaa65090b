#pragma once

// Gauge sets, their polar norms, and the Legendre distance-generating
// functions phi = g o ||.||_{V polar} built from them.

#include <memory>
#include <optional>

#include "robustpath/linalg.hpp"

namespace robustpath {

/// A smooth norm on R^n: either the l_r norm (1 < r < inf) or the
/// ellipsoidal norm sqrt(x' Q x) with Q symmetric positive definite.
class NormFunction {
 public:
  enum class Kind { Lr, Quadratic };

  static NormFunction lr(Eigen::Index dimension, double r);
  static NormFunction quadratic(std::shared_ptr<const Matrix> q);

  Kind kind() const { return kind_; }
  Eigen::Index dimension() const { return dimension_; }
  double exponent() const { return r_; }
  /// Q for the quadratic kind.
  const Matrix& weight() const { return *q_; }

  double value(const Vector& x) const;
  /// Gradient of the norm; the zero vector at the origin.
  Vector gradient(const Vector& x) const;
  /// Hessian of the norm, with the l_r diagonal capped near zero coordinates.
  Matrix hessian(const Vector& x) const;

 private:
  Kind kind_ = Kind::Lr;
  Eigen::Index dimension_ = 0;
  double r_ = 2.0;
  std::shared_ptr<const Matrix> q_;
};

/// Uncertainty-set shape V: an l_p ball or an ellipsoid {x : x' A x <= 1}.
/// Only smooth, strictly convex, compact shapes with 0 in the interior.
class GaugeSet {
 public:
  enum class Kind { LpBall, Ellipsoid };

  /// Requires 1 < p < inf.
  static GaugeSet lp_ball(Eigen::Index dimension, double p);
  /// Requires A symmetric positive definite.
  static GaugeSet ellipsoid(const Matrix& a);
  /// Ellipsoid given through A^{-1}, so that the polar norm sqrt(x' A^{-1} x)
  /// uses the supplied matrix verbatim.
  static GaugeSet ellipsoid_from_inverse(const Matrix& a_inverse);

  Kind kind() const { return kind_; }
  Eigen::Index dimension() const { return dimension_; }
  double p() const { return p_; }
  /// Conjugate exponent q with 1/p + 1/q = 1.
  double q() const { return p_ / (p_ - 1.0); }
  const Matrix& matrix() const;
  const Matrix& inverse_matrix() const;
  double min_eigenvalue() const { return eig_min_; }
  double max_eigenvalue() const { return eig_max_; }

  const NormFunction& gauge() const { return gauge_; }
  const NormFunction& polar() const { return polar_; }

  /// The polar set V°, itself a valid gauge set.
  GaugeSet polar_set() const;

  bool approx_equal(const GaugeSet& other, double tol = 1e-12) const;

 private:
  GaugeSet() = default;

  Kind kind_ = Kind::LpBall;
  Eigen::Index dimension_ = 0;
  double p_ = 2.0;
  std::shared_ptr<const Matrix> a_;
  std::shared_ptr<const Matrix> a_inv_;
  double eig_min_ = 1.0;
  double eig_max_ = 1.0;
  NormFunction gauge_;
  NormFunction polar_;
};

/// ||x||_V = inf{t >= 0 : x in tV}.
double gauge_norm(const GaugeSet& set, const Vector& x);
/// ||x||_{V°} = sup_{u in V} <x, u>.
double polar_gauge_norm(const GaugeSet& set, const Vector& x);

/// Scalar post-composition g with g(0) = 0, g'(0) = 0.
class PostComposition {
 public:
  enum class Kind { HalfSquare, PowerMean };

  /// g(t) = t^2 / 2.
  static PostComposition half_square();
  /// g(t) = t^s / s for 1 < s <= 4.
  static PostComposition power_mean(double s);

  Kind kind() const { return kind_; }
  double exponent() const { return s_; }

  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
  /// (g')^{-1}, which equals the derivative of the conjugate g*.
  double inverse_derivative(double u) const;
  /// The convex conjugate g*, again of power form.
  PostComposition conjugate() const;

 private:
  PostComposition(Kind kind, double s) : kind_(kind), s_(s) {}

  Kind kind_;
  double s_;
};

/// Smoothness data of a distance-generating function with respect to the
/// Euclidean norm.
struct DgfSmoothness {
  double L = 1.0;
  double mu = 1.0;
  double kappa = 1.0;

  static DgfSmoothness from_constants(double L, double mu);
};

/// kappa = (L / mu)^3.
double kappa_bound(const DgfSmoothness& s);

/// phi(x) = g(||x||_{V°}), a Legendre function with phi(0) = 0, grad phi(0) = 0.
class DistanceGenerator {
 public:
  DistanceGenerator(GaugeSet shape, PostComposition post);

  /// phi(x) = ||x||_2^2 / 2.
  static DistanceGenerator euclidean(Eigen::Index dimension);

  const GaugeSet& shape() const { return shape_; }
  const PostComposition& post() const { return post_; }
  Eigen::Index dimension() const { return shape_.dimension(); }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

  /// phi*(y) = g*(||y||_V).
  double conjugate_value(const Vector& y) const;
  /// grad phi* = (grad phi)^{-1}.
  Vector conjugate_gradient(const Vector& y) const;
  Matrix conjugate_hessian(const Vector& y) const;

  /// True when phi(x) = x' M x / 2 for a constant SPD matrix M.
  bool is_quadratic() const { return quadratic_; }
  /// M for quadratic generators (identity-like otherwise unavailable).
  const Matrix& metric() const;
  const Matrix& inverse_metric() const;
  bool is_euclidean() const { return euclidean_; }

  /// Global (L, mu) pair; only quadratic generators have one.
  std::optional<DgfSmoothness> smoothness() const;

 private:
  GaugeSet shape_;
  PostComposition post_;
  PostComposition post_conj_;
  bool quadratic_ = false;
  bool euclidean_ = false;
  std::shared_ptr<const Matrix> metric_;
  std::shared_ptr<const Matrix> inverse_metric_;
};

double dgf_value(const DistanceGenerator& phi, const Vector& x);
Vector dgf_grad(const DistanceGenerator& phi, const Vector& x);
Vector dgf_grad_conj(const DistanceGenerator& phi, const Vector& y);

/// D(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>, clamped at zero.
double bregman_divergence(const DistanceGenerator& phi, const Vector& x, const Vector& y);

}  // namespace robustpath
