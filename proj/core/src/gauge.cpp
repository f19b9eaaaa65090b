#include "robustpath/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace robustpath {

namespace {

constexpr double kOriginThreshold = 1e-14;
// Upper cap for (|x_i|/N)^(r-2) when r < 2 and a coordinate is near zero.
constexpr double kHessianCap = 1e12;

void check_symmetric_pd(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InputError(std::string(what) + ": matrix must be square and nonempty");
  }
  if (!a.allFinite()) {
    throw InputError(std::string(what) + ": non-finite matrix entry");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InputError(std::string(what) + ": matrix is not symmetric");
  }
}

}  // namespace

// ---------------------------------------------------------------- NormFunction

NormFunction NormFunction::lr(Eigen::Index dimension, double r) {
  if (dimension <= 0) throw InputError("norm: dimension must be positive");
  if (!(r > 1.0) || !std::isfinite(r)) {
    throw InputError("norm: exponent must satisfy 1 < r < inf (got " + std::to_string(r) + ")");
  }
  NormFunction f;
  f.kind_ = Kind::Lr;
  f.dimension_ = dimension;
  f.r_ = r;
  return f;
}

NormFunction NormFunction::quadratic(std::shared_ptr<const Matrix> q) {
  NormFunction f;
  f.kind_ = Kind::Quadratic;
  f.dimension_ = q->rows();
  f.r_ = 2.0;
  f.q_ = std::move(q);
  return f;
}

double NormFunction::value(const Vector& x) const {
  if (kind_ == Kind::Quadratic) {
    return std::sqrt(std::max(0.0, x.dot(*q_ * x)));
  }
  if (r_ == 2.0) return x.norm();
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, r_);
  return m * std::pow(s, 1.0 / r_);
}

Vector NormFunction::gradient(const Vector& x) const {
  const double n = value(x);
  if (n < kOriginThreshold) return Vector::Zero(x.size());
  if (kind_ == Kind::Quadratic) return (*q_ * x) / n;
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]) / n;
    g[i] = (x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0)) * std::pow(a, r_ - 1.0);
  }
  return g;
}

Matrix NormFunction::hessian(const Vector& x) const {
  const Eigen::Index dim = x.size();
  const double n = value(x);
  if (n < kOriginThreshold) return Matrix::Zero(dim, dim);
  const Vector u = gradient(x);
  if (kind_ == Kind::Quadratic) return (*q_ - u * u.transpose()) / n;
  Matrix h = -u * u.transpose();
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double a = std::abs(x[i]) / n;
    double d;
    if (r_ >= 2.0) {
      d = std::pow(a, r_ - 2.0);
    } else {
      d = a > 0.0 ? std::min(kHessianCap, std::pow(a, r_ - 2.0)) : kHessianCap;
    }
    h(i, i) += d;
  }
  return (r_ - 1.0) / n * h;
}

// -------------------------------------------------------------------- GaugeSet

GaugeSet GaugeSet::lp_ball(Eigen::Index dimension, double p) {
  if (dimension <= 0) throw InputError("gauge set: dimension must be positive");
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw InputError("gauge set: l_p ball requires 1 < p < inf (got " + std::to_string(p) + ")");
  }
  GaugeSet s;
  s.kind_ = Kind::LpBall;
  s.dimension_ = dimension;
  s.p_ = p;
  s.gauge_ = NormFunction::lr(dimension, p);
  s.polar_ = NormFunction::lr(dimension, p / (p - 1.0));
  return s;
}

namespace {

struct EllipsoidData {
  std::shared_ptr<const Matrix> a;
  std::shared_ptr<const Matrix> a_inv;
  double eig_min;
  double eig_max;
};

// Eigendecomposition of the given SPD matrix, used to build its inverse.
// Returns the given matrix untouched plus its inverse.
EllipsoidData decompose(const Matrix& given, bool given_is_inverse) {
  Matrix sym = 0.5 * (given + given.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw InputError("ellipsoid: eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) {
    throw InputError("ellipsoid: matrix is not positive definite (min eigenvalue " +
                     std::to_string(ev.minCoeff()) + ")");
  }
  if (ev.maxCoeff() / ev.minCoeff() > 1e14) {
    throw InputError("ellipsoid: matrix is numerically singular");
  }
  Matrix inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  inv = 0.5 * (inv + inv.transpose());
  EllipsoidData d;
  auto g = std::make_shared<const Matrix>(std::move(sym));
  auto i = std::make_shared<const Matrix>(std::move(inv));
  if (given_is_inverse) {
    d.a = i;
    d.a_inv = g;
    d.eig_min = 1.0 / ev.maxCoeff();
    d.eig_max = 1.0 / ev.minCoeff();
  } else {
    d.a = g;
    d.a_inv = i;
    d.eig_min = ev.minCoeff();
    d.eig_max = ev.maxCoeff();
  }
  return d;
}

}  // namespace

GaugeSet GaugeSet::ellipsoid(const Matrix& a) {
  check_symmetric_pd(a, "ellipsoid");
  const EllipsoidData d = decompose(a, false);
  GaugeSet s;
  s.kind_ = Kind::Ellipsoid;
  s.dimension_ = a.rows();
  s.a_ = d.a;
  s.a_inv_ = d.a_inv;
  s.eig_min_ = d.eig_min;
  s.eig_max_ = d.eig_max;
  s.gauge_ = NormFunction::quadratic(s.a_);
  s.polar_ = NormFunction::quadratic(s.a_inv_);
  return s;
}

GaugeSet GaugeSet::ellipsoid_from_inverse(const Matrix& a_inverse) {
  check_symmetric_pd(a_inverse, "ellipsoid");
  const EllipsoidData d = decompose(a_inverse, true);
  GaugeSet s;
  s.kind_ = Kind::Ellipsoid;
  s.dimension_ = a_inverse.rows();
  s.a_ = d.a;
  s.a_inv_ = d.a_inv;
  s.eig_min_ = d.eig_min;
  s.eig_max_ = d.eig_max;
  s.gauge_ = NormFunction::quadratic(s.a_);
  s.polar_ = NormFunction::quadratic(s.a_inv_);
  return s;
}

const Matrix& GaugeSet::matrix() const {
  if (kind_ != Kind::Ellipsoid) throw InputError("gauge set: matrix() requires an ellipsoid");
  return *a_;
}

const Matrix& GaugeSet::inverse_matrix() const {
  if (kind_ != Kind::Ellipsoid) throw InputError("gauge set: inverse_matrix() requires an ellipsoid");
  return *a_inv_;
}

GaugeSet GaugeSet::polar_set() const {
  if (kind_ == Kind::LpBall) return lp_ball(dimension_, q());
  GaugeSet s = *this;
  std::swap(s.a_, s.a_inv_);
  s.eig_min_ = 1.0 / eig_max_;
  s.eig_max_ = 1.0 / eig_min_;
  std::swap(s.gauge_, s.polar_);
  return s;
}

bool GaugeSet::approx_equal(const GaugeSet& other, double tol) const {
  if (kind_ != other.kind_ || dimension_ != other.dimension_) return false;
  if (kind_ == Kind::LpBall) return std::abs(p_ - other.p_) <= tol * std::max(1.0, p_);
  const double scale = std::max(1.0, a_->cwiseAbs().maxCoeff());
  return (*a_ - *other.a_).cwiseAbs().maxCoeff() <= tol * scale;
}

double gauge_norm(const GaugeSet& set, const Vector& x) {
  require_dimension(x, set.dimension(), "gauge_norm");
  require_finite(x, "gauge_norm");
  return set.gauge().value(x);
}

double polar_gauge_norm(const GaugeSet& set, const Vector& x) {
  require_dimension(x, set.dimension(), "polar_gauge_norm");
  require_finite(x, "polar_gauge_norm");
  return set.polar().value(x);
}

// ------------------------------------------------------------- PostComposition

PostComposition PostComposition::half_square() { return {Kind::HalfSquare, 2.0}; }

PostComposition PostComposition::power_mean(double s) {
  if (!(s > 1.0) || !(s <= 4.0)) {
    throw InputError("post-composition: power exponent must lie in (1, 4] (got " +
                     std::to_string(s) + ")");
  }
  return {Kind::PowerMean, s};
}

double PostComposition::value(double t) const {
  if (t <= 0.0) return 0.0;
  if (kind_ == Kind::HalfSquare) return 0.5 * t * t;
  return std::pow(t, s_) / s_;
}

double PostComposition::derivative(double t) const {
  if (t <= 0.0) return 0.0;
  if (kind_ == Kind::HalfSquare) return t;
  return std::pow(t, s_ - 1.0);
}

double PostComposition::second_derivative(double t) const {
  if (kind_ == Kind::HalfSquare || s_ == 2.0) return 1.0;
  if (t <= 0.0) return s_ > 2.0 ? 0.0 : kHessianCap;
  return (s_ - 1.0) * std::pow(t, s_ - 2.0);
}

double PostComposition::inverse_derivative(double u) const {
  if (u <= 0.0) return 0.0;
  if (kind_ == Kind::HalfSquare) return u;
  return std::pow(u, 1.0 / (s_ - 1.0));
}

PostComposition PostComposition::conjugate() const {
  if (kind_ == Kind::HalfSquare) return *this;
  return {Kind::PowerMean, s_ / (s_ - 1.0)};
}

// --------------------------------------------------------------- Smoothness

DgfSmoothness DgfSmoothness::from_constants(double L, double mu) {
  DgfSmoothness s;
  s.L = L;
  s.mu = mu;
  s.kappa = kappa_bound(s);
  return s;
}

double kappa_bound(const DgfSmoothness& s) {
  if (!(s.L > 0.0) || !(s.mu > 0.0)) throw InputError("kappa_bound: constants must be positive");
  if (s.mu > s.L * (1.0 + 1e-12)) throw InputError("kappa_bound: requires mu <= L");
  const double ratio = s.L / s.mu;
  return ratio * ratio * ratio;
}

// ----------------------------------------------------------- DistanceGenerator

DistanceGenerator::DistanceGenerator(GaugeSet shape, PostComposition post)
    : shape_(std::move(shape)), post_(post), post_conj_(post.conjugate()) {
  const bool quadratic_g = post_.kind() == PostComposition::Kind::HalfSquare || post_.exponent() == 2.0;
  const bool quadratic_norm =
      shape_.kind() == GaugeSet::Kind::Ellipsoid || shape_.p() == 2.0;
  quadratic_ = quadratic_g && quadratic_norm;
  if (quadratic_) {
    const Eigen::Index n = shape_.dimension();
    if (shape_.kind() == GaugeSet::Kind::Ellipsoid) {
      metric_ = std::make_shared<const Matrix>(shape_.inverse_matrix());
      inverse_metric_ = std::make_shared<const Matrix>(shape_.matrix());
    } else {
      metric_ = std::make_shared<const Matrix>(Matrix::Identity(n, n));
      inverse_metric_ = metric_;
      euclidean_ = true;
    }
  }
}

DistanceGenerator DistanceGenerator::euclidean(Eigen::Index dimension) {
  return {GaugeSet::lp_ball(dimension, 2.0), PostComposition::half_square()};
}

double DistanceGenerator::value(const Vector& x) const {
  require_dimension(x, dimension(), "dgf_value");
  if (quadratic_) return euclidean_ ? 0.5 * x.squaredNorm() : 0.5 * x.dot(*metric_ * x);
  return post_.value(shape_.polar().value(x));
}

Vector DistanceGenerator::gradient(const Vector& x) const {
  require_dimension(x, dimension(), "dgf_grad");
  if (quadratic_) return euclidean_ ? Vector(x) : Vector(*metric_ * x);
  const double n = shape_.polar().value(x);
  if (n < kOriginThreshold) return Vector::Zero(x.size());
  return post_.derivative(n) * shape_.polar().gradient(x);
}

Matrix DistanceGenerator::hessian(const Vector& x) const {
  require_dimension(x, dimension(), "dgf_hessian");
  if (quadratic_) return *metric_;
  const NormFunction& nf = shape_.polar();
  const double n = nf.value(x);
  const Eigen::Index d = x.size();
  if (n < kOriginThreshold) {
    // Only reached for non-quadratic generators; use a scaled identity so
    // Newton-type callers still get a usable model at the origin.
    return post_.second_derivative(0.0) * Matrix::Identity(d, d);
  }
  const Vector u = nf.gradient(x);
  return post_.second_derivative(n) * u * u.transpose() + post_.derivative(n) * nf.hessian(x);
}

double DistanceGenerator::conjugate_value(const Vector& y) const {
  require_dimension(y, dimension(), "dgf_conj_value");
  if (quadratic_) return euclidean_ ? 0.5 * y.squaredNorm() : 0.5 * y.dot(*inverse_metric_ * y);
  return post_conj_.value(shape_.gauge().value(y));
}

Vector DistanceGenerator::conjugate_gradient(const Vector& y) const {
  require_dimension(y, dimension(), "dgf_grad_conj");
  if (quadratic_) return euclidean_ ? Vector(y) : Vector(*inverse_metric_ * y);
  const double n = shape_.gauge().value(y);
  if (n < kOriginThreshold) return Vector::Zero(y.size());
  return post_.inverse_derivative(n) * shape_.gauge().gradient(y);
}

Matrix DistanceGenerator::conjugate_hessian(const Vector& y) const {
  require_dimension(y, dimension(), "dgf_conj_hessian");
  if (quadratic_) return *inverse_metric_;
  const NormFunction& nf = shape_.gauge();
  const double n = nf.value(y);
  const Eigen::Index d = y.size();
  if (n < kOriginThreshold) return post_conj_.second_derivative(0.0) * Matrix::Identity(d, d);
  const Vector u = nf.gradient(y);
  return post_conj_.second_derivative(n) * u * u.transpose() +
         post_conj_.derivative(n) * nf.hessian(y);
}

const Matrix& DistanceGenerator::metric() const {
  if (!quadratic_) throw InputError("distance generator: metric() requires a quadratic generator");
  return *metric_;
}

const Matrix& DistanceGenerator::inverse_metric() const {
  if (!quadratic_) throw InputError("distance generator: inverse_metric() requires a quadratic generator");
  return *inverse_metric_;
}

std::optional<DgfSmoothness> DistanceGenerator::smoothness() const {
  if (!quadratic_) return std::nullopt;
  if (euclidean_) return DgfSmoothness::from_constants(1.0, 1.0);
  // metric = A^{-1}: its extreme eigenvalues are reciprocals of A's.
  return DgfSmoothness::from_constants(1.0 / shape_.min_eigenvalue(), 1.0 / shape_.max_eigenvalue());
}

double dgf_value(const DistanceGenerator& phi, const Vector& x) {
  require_finite(x, "dgf_value");
  return phi.value(x);
}

Vector dgf_grad(const DistanceGenerator& phi, const Vector& x) {
  require_finite(x, "dgf_grad");
  return phi.gradient(x);
}

Vector dgf_grad_conj(const DistanceGenerator& phi, const Vector& y) {
  require_finite(y, "dgf_grad_conj");
  return phi.conjugate_gradient(y);
}

double bregman_divergence(const DistanceGenerator& phi, const Vector& x, const Vector& y) {
  require_dimension(x, phi.dimension(), "bregman_divergence");
  require_dimension(y, phi.dimension(), "bregman_divergence");
  require_finite(x, "bregman_divergence");
  require_finite(y, "bregman_divergence");
  const Vector d = x - y;
  if (phi.is_quadratic()) {
    return phi.is_euclidean() ? 0.5 * d.squaredNorm() : std::max(0.0, 0.5 * d.dot(phi.metric() * d));
  }
  const double v = phi.value(x) - phi.value(y) - phi.gradient(y).dot(d);
  return std::max(0.0, v);
}

}  // namespace robustpath
