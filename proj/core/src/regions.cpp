#include "robustpath/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace robustpath {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Keeps a maximal linearly independent subset of the rows of [A b].
void dedupe_rows(const Matrix& A, const Vector& b, Matrix& A_out, Vector& b_out) {
  if (A.rows() == 0) {
    A_out = A;
    b_out = b;
    return;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  qr.setThreshold(1e-10);
  const Eigen::Index r = qr.rank();
  std::vector<Eigen::Index> keep;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = 0; k < r; ++k) keep.push_back(perm[k]);
  std::sort(keep.begin(), keep.end());
  A_out.resize(r, A.cols());
  b_out.resize(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    A_out.row(k) = A.row(keep[k]);
    b_out[k] = b[keep[k]];
  }
}

bool is_diagonal(const Matrix& M) {
  const double d = M.diagonal().cwiseAbs().maxCoeff();
  Matrix off = M;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, d);
}

// x(nu) = clamp(y + nu * a / d) with a'x(nu) = b; exact breakpoint search.
Vector knapsack_project(const Vector& y, const Vector& d, const Vector& a, double b, const Vector& lb,
                        const Vector& ub) {
  const Eigen::Index n = y.size();
  auto x_of = [&](double nu) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::clamp(y[i] + nu * a[i] / d[i], lb[i], ub[i]);
    return x;
  };
  auto h = [&](double nu) { return a.dot(x_of(nu)) - b; };
  std::vector<double> bp;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    if (std::isfinite(lb[i])) bp.push_back((lb[i] - y[i]) * d[i] / a[i]);
    if (std::isfinite(ub[i])) bp.push_back((ub[i] - y[i]) * d[i] / a[i]);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

  double lo = -kInf;
  double hi = kInf;
  double h_lo = -kInf;
  double h_hi = kInf;
  for (double v : bp) {
    const double hv = h(v);
    if (hv >= 0.0) {
      hi = v;
      h_hi = hv;
      break;
    }
    lo = v;
    h_lo = hv;
  }
  if (std::isfinite(hi) && h_hi == 0.0) return x_of(hi);
  // h is affine on (lo, hi); its slope is set by the free coordinates there.
  double probe;
  if (std::isfinite(lo) && std::isfinite(hi)) probe = 0.5 * (lo + hi);
  else if (std::isfinite(lo)) probe = lo + 1.0;
  else if (std::isfinite(hi)) probe = hi - 1.0;
  else probe = 0.0;
  double slope = 0.0;
  const Vector xp = x_of(probe);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] != 0.0 && xp[i] > lb[i] && xp[i] < ub[i]) slope += a[i] * a[i] / d[i];
  }
  if (slope <= 0.0) {
    if (std::isfinite(hi)) return x_of(hi);
    throw InfeasibleError("knapsack projection: no multiplier satisfies the equality");
  }
  double nu;
  if (std::isfinite(hi)) nu = hi - h_hi / slope;
  else if (std::isfinite(lo)) nu = lo - h_lo / slope;
  else nu = probe - h(probe) / slope;
  if (std::isfinite(lo)) nu = std::max(nu, lo);
  if (std::isfinite(hi)) nu = std::min(nu, hi);
  return x_of(nu);
}

// x = y + Minv A' (A Minv A')^{-1} (b - A y).
Vector metric_affine_project(const Vector& y, const Matrix& Minv, const Matrix& A, const Vector& b) {
  if (A.rows() == 0) return y;
  const Matrix MA = Minv * A.transpose();
  const Matrix S = A * MA;
  const Vector nu = S.ldlt().solve(b - A * y);
  return y + MA * nu;
}

}  // namespace

// ------------------------------------------------------------------ faces

bool FaceSignature::subset_of(const FaceSignature& o) const {
  auto inc = [](const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  return inc(active_lower, o.active_lower) && inc(active_upper, o.active_upper) &&
         (!on_gauge_boundary || o.on_gauge_boundary);
}

std::string FaceSignature::to_string() const {
  std::ostringstream os;
  auto list = [&](const std::vector<int>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
    os << ']';
  };
  os << 'L';
  list(active_lower);
  os << 'U';
  list(active_upper);
  if (on_gauge_boundary) os << "B1";
  if (ambiguous) os << '?';
  return os.str();
}

// ----------------------------------------------------------------- region

struct FeasibleRegion::Data {
  EqBoxData original;
  EqBoxData canon;
  Matrix aff_A;
  Vector aff_b;
  bool affine_only = false;  // no bound constraints besides fixed variables
  Vector feasible;
  std::optional<GaugeSet> shape;
  double level = 0.0;
};

FeasibleRegion FeasibleRegion::make_polyhedral(Kind kind, const Matrix& A, const Vector& b,
                                               const Vector& lb, const Vector& ub,
                                               bool detect_implicit) {
  const Eigen::Index n = lb.size();
  if (n <= 0) throw InputError("region: dimension must be positive");
  if (A.cols() != n && A.rows() > 0) throw InputError("region: constraint matrix has wrong column count");
  if (b.size() != A.rows()) throw InputError("region: right-hand side length mismatch");
  if (ub.size() != n) throw InputError("region: bound length mismatch");
  if (!A.allFinite() || !b.allFinite()) throw InputError("region: non-finite constraint data");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(lb[i]) || std::isnan(ub[i])) throw InputError("region: NaN bound");
    if (lb[i] > ub[i]) throw InputError("region: lb > ub at index " + std::to_string(i));
    if (lb[i] == kInf || ub[i] == -kInf) throw InputError("region: empty bound interval");
  }

  auto d = std::make_shared<Data>();
  d->original.A = A.rows() > 0 ? A : Matrix(0, n);
  d->original.b = b;
  d->original.lb = lb;
  d->original.ub = ub;

  const LpResult feas = solve_lp(d->original, Vector::Zero(n));
  if (feas.status == LpStatus::Infeasible) throw InfeasibleError("region is empty");
  if (feas.status != LpStatus::Optimal) {
    throw SolverError("region feasibility check did not finish", kInf, feas.iterations);
  }

  d->canon.lb = lb;
  d->canon.ub = ub;
  dedupe_rows(d->original.A, d->original.b, d->canon.A, d->canon.b);
  if (d->canon.A.rows() == 0) d->canon.A = Matrix(0, n);

  if (detect_implicit) {
    // Candidates are one-sided bounds of non-fixed variables. Maximize the sum
    // of capped slacks; any candidate whose slack can be positive is not an
    // implicit equality. Repeat until no new candidate is released.
    struct Cand {
      Eigen::Index var;
      bool lower;
      bool released = false;
    };
    std::vector<Cand> cands;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (lb[i] == ub[i]) continue;
      if (std::isfinite(lb[i])) cands.push_back({i, true});
      if (std::isfinite(ub[i])) cands.push_back({i, false});
    }
    const auto K = static_cast<Eigen::Index>(cands.size());
    if (K > 0) {
      const Eigen::Index m = d->canon.A.rows();
      EqBoxData big;
      big.A = Matrix::Zero(m + K, n + 2 * K);
      big.b = Vector::Zero(m + K);
      big.lb = Vector::Zero(n + 2 * K);
      big.ub = Vector::Constant(n + 2 * K, kInf);
      big.A.topLeftCorner(m, n) = d->canon.A;
      big.b.head(m) = d->canon.b;
      big.lb.head(n) = lb;
      big.ub.head(n) = ub;
      for (Eigen::Index k = 0; k < K; ++k) {
        const Cand& cd = cands[k];
        const double s = cd.lower ? 1.0 : -1.0;
        big.A(m + k, cd.var) = s;
        big.A(m + k, n + k) = -1.0;
        big.A(m + k, n + K + k) = -1.0;
        big.b[m + k] = cd.lower ? lb[cd.var] : -ub[cd.var];
        big.ub[n + k] = 1.0;
      }
      for (int round = 0; round < K + 1; ++round) {
        Vector cost = Vector::Zero(n + 2 * K);
        bool any = false;
        for (Eigen::Index k = 0; k < K; ++k) {
          if (!cands[k].released) {
            cost[n + k] = -1.0;
            any = true;
          }
        }
        if (!any) break;
        const LpResult r = solve_lp(big, cost);
        if (r.status != LpStatus::Optimal) {
          throw SolverError("implicit equality detection failed", kInf, r.iterations);
        }
        bool released_new = false;
        for (Eigen::Index k = 0; k < K; ++k) {
          if (!cands[k].released && r.x[n + k] > 1e-9) {
            cands[k].released = true;
            released_new = true;
          }
        }
        if (!released_new) break;
      }
      for (const Cand& cd : cands) {
        if (cd.released) continue;
        const double v = cd.lower ? lb[cd.var] : ub[cd.var];
        d->canon.lb[cd.var] = v;
        d->canon.ub[cd.var] = v;
      }
    }
  }

  d->feasible = feas.x;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d->canon.lb[i] == d->canon.ub[i]) d->feasible[i] = d->canon.lb[i];
  }

  // Aff(X): equality rows plus unit rows of fixed variables.
  std::vector<Eigen::Index> fixed;
  bool any_bound = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d->canon.lb[i] == d->canon.ub[i]) fixed.push_back(i);
    else if (std::isfinite(d->canon.lb[i]) || std::isfinite(d->canon.ub[i])) any_bound = true;
  }
  d->affine_only = !any_bound;
  const Eigen::Index m = d->canon.A.rows();
  const auto nf = static_cast<Eigen::Index>(fixed.size());
  Matrix affA = Matrix::Zero(m + nf, n);
  Vector affb(m + nf);
  affA.topRows(m) = d->canon.A;
  affb.head(m) = d->canon.b;
  for (Eigen::Index k = 0; k < nf; ++k) {
    affA(m + k, fixed[k]) = 1.0;
    affb[m + k] = d->canon.lb[fixed[k]];
  }
  dedupe_rows(affA, affb, d->aff_A, d->aff_b);
  if (d->aff_A.rows() == 0) d->aff_A = Matrix(0, n);

  FeasibleRegion r;
  r.kind_ = kind;
  r.n_ = n;
  r.data_ = std::move(d);
  return r;
}

FeasibleRegion FeasibleRegion::hyperplane(const Vector& a, double b) {
  if (a.size() == 0 || !a.allFinite() || a.isZero(0.0)) throw InputError("hyperplane: normal must be nonzero and finite");
  if (!std::isfinite(b)) throw InputError("hyperplane: offset must be finite");
  const Eigen::Index n = a.size();
  Matrix A = a.transpose();
  Vector bb = Vector::Constant(1, b);
  return make_polyhedral(Kind::Hyperplane, A, bb, Vector::Constant(n, -kInf), Vector::Constant(n, kInf), false);
}

FeasibleRegion FeasibleRegion::affine(const Matrix& A, const Vector& b) {
  const Eigen::Index n = A.cols();
  if (n == 0) throw InputError("affine subspace: matrix has no columns");
  return make_polyhedral(Kind::AffineSubspace, A, b, Vector::Constant(n, -kInf), Vector::Constant(n, kInf), false);
}

FeasibleRegion FeasibleRegion::eq_box(const Matrix& A, const Vector& b, const Vector& lb, const Vector& ub) {
  return make_polyhedral(Kind::EqBoxPolyhedron, A, b, lb, ub, true);
}

FeasibleRegion FeasibleRegion::simplex(Eigen::Index n, double budget) {
  if (n <= 0) throw InputError("simplex: dimension must be positive");
  if (!(budget > 0.0) || !std::isfinite(budget)) throw InputError("simplex: budget must be positive");
  Matrix A = Matrix::Ones(1, n);
  Vector b = Vector::Constant(1, budget);
  return eq_box(A, b, Vector::Zero(n), Vector::Constant(n, kInf));
}

FeasibleRegion FeasibleRegion::norm_ball(const GaugeSet& shape, double level) {
  if (!(level > 0.0) || !std::isfinite(level)) throw InputError("norm ball: level must be positive and finite");
  auto d = std::make_shared<Data>();
  d->shape = shape;
  d->level = level;
  d->feasible = Vector::Zero(shape.dimension());
  FeasibleRegion r;
  r.kind_ = Kind::NormBall;
  r.n_ = shape.dimension();
  r.data_ = std::move(d);
  return r;
}

FeasibleRegion region_with_extra_row(const FeasibleRegion& region, const Vector& a, double v) {
  const EqBoxData& c = region.canonical();
  Matrix A(c.A.rows() + 1, region.dimension());
  A.topRows(c.A.rows()) = c.A;
  A.bottomRows(1) = a.transpose();
  Vector b(c.b.size() + 1);
  b.head(c.b.size()) = c.b;
  b[c.b.size()] = v;
  return FeasibleRegion::make_polyhedral(FeasibleRegion::Kind::EqBoxPolyhedron, A, b, c.lb, c.ub, false);
}

const Vector& FeasibleRegion::feasible_point() const { return data_->feasible; }

const EqBoxData& FeasibleRegion::constraints() const {
  if (!is_polyhedral()) throw InputError("region: constraint data requires a polyhedral region");
  return data_->original;
}

const EqBoxData& FeasibleRegion::canonical() const {
  if (!is_polyhedral()) throw InputError("region: constraint data requires a polyhedral region");
  return data_->canon;
}

const Matrix& FeasibleRegion::affine_hull_matrix() const {
  if (!is_polyhedral()) throw InputError("region: affine hull requires a polyhedral region");
  return data_->aff_A;
}

const Vector& FeasibleRegion::affine_hull_rhs() const {
  if (!is_polyhedral()) throw InputError("region: affine hull requires a polyhedral region");
  return data_->aff_b;
}

const GaugeSet& FeasibleRegion::ball_shape() const {
  if (is_polyhedral()) throw InputError("region: not a norm ball");
  return *data_->shape;
}

double FeasibleRegion::ball_level() const {
  if (is_polyhedral()) throw InputError("region: not a norm ball");
  return data_->level;
}

bool FeasibleRegion::contains(const Vector& x, double tol) const {
  require_dimension(x, n_, "contains");
  if (!(tol > 0.0)) throw InputError("contains: tolerance must be positive");
  if (!x.allFinite()) return false;
  if (!is_polyhedral()) return data_->shape->gauge().value(x) <= data_->level + tol;
  const EqBoxData& c = data_->original;
  if (c.A.rows() > 0 && inf_norm(c.A * x - c.b) > tol) return false;
  for (Eigen::Index i = 0; i < n_; ++i) {
    if (x[i] < c.lb[i] - tol || x[i] > c.ub[i] + tol) return false;
  }
  return true;
}

FaceSignature FeasibleRegion::face_signature(const Vector& x, double tol) const {
  if (!contains(x, tol)) throw InputError("face_signature: point is not feasible");
  FaceSignature f;
  const double near = 100.0 * tol;
  if (!is_polyhedral()) {
    const double gap = data_->level - data_->shape->gauge().value(x);
    f.on_gauge_boundary = gap <= tol;
    f.ambiguous = gap > tol && gap <= near;
    return f;
  }
  const EqBoxData& c = data_->original;
  for (Eigen::Index i = 0; i < n_; ++i) {
    if (std::isfinite(c.lb[i])) {
      const double s = x[i] - c.lb[i];
      if (s <= tol) f.active_lower.push_back(static_cast<int>(i));
      else if (s <= near) f.ambiguous = true;
    }
    if (std::isfinite(c.ub[i])) {
      const double s = c.ub[i] - x[i];
      if (s <= tol) f.active_upper.push_back(static_cast<int>(i));
      else if (s <= near) f.ambiguous = true;
    }
  }
  return f;
}

LpResult FeasibleRegion::linear_minimize(const Vector& c) const {
  require_dimension(c, n_, "linear_minimize");
  require_finite(c, "linear_minimize");
  if (!is_polyhedral()) {
    LpResult r;
    r.status = LpStatus::Optimal;
    if (c.isZero(0.0)) {
      r.x = Vector::Zero(n_);
    } else {
      r.x = -data_->level * data_->shape->polar().gradient(c);
    }
    r.objective = c.dot(r.x);
    return r;
  }
  LpResult r = solve_lp(data_->canon, c);
  switch (r.status) {
    case LpStatus::Optimal:
      return r;
    case LpStatus::Unbounded:
      throw UnboundedError("linear objective is unbounded below on the region");
    case LpStatus::Infeasible:
      throw InfeasibleError("region is empty");
    case LpStatus::IterationLimit:
      break;
  }
  throw SolverError("linear program hit its iteration cap", kInf, r.iterations);
}

Vector FeasibleRegion::euclidean_project(const Vector& y) const {
  require_dimension(y, n_, "euclidean_project");
  const DistanceGenerator e = DistanceGenerator::euclidean(n_);
  if (is_polyhedral()) return minimize_polyhedral(e, -y, 1.0, {}, true, false).x;
  return minimize_ball(e, -y, 1.0, {}, true).x;
}

namespace {
double term_scale(const Vector& a, const Vector& b) { return std::max(inf_norm(a), inf_norm(b)); }
}  // namespace

double FeasibleRegion::natural_residual(const Vector& x, const Vector& g, double g_scale) const {
  if (inf_norm(g) == 0.0) return 0.0;
  const double gn = std::max(inf_norm(g), g_scale);
  if (!is_polyhedral()) {
    // Radial certificate for balls: g must be a nonpositive multiple of the
    // outward normal when x is on the boundary, and zero otherwise.
    const NormFunction& N = data_->shape->gauge();
    const double nx = N.value(x);
    const Vector gh = g / gn;
    if (nx < data_->level * (1.0 - 1e-9)) return inf_norm(gh);
    const Vector nrm = N.gradient(x);
    const double t = std::max(0.0, -gh.dot(nrm) / nrm.squaredNorm());
    return std::max(inf_norm(gh + t * nrm), std::abs(nx - data_->level) / data_->level);
  }
  const Vector gh = g / gn;
  return inf_norm(x - euclidean_project(x - gh));
}

MinimizeResult FeasibleRegion::minimize(const DistanceGenerator& phi, const Vector& c, double weight,
                                        WarmStart warm, bool allow_closed_form) const {
  require_dimension(c, n_, "minimize");
  require_finite(c, "minimize");
  if (phi.dimension() != n_) throw InputError("minimize: distance generator dimension mismatch");
  if (!(weight > 0.0) || !std::isfinite(weight)) throw InputError("minimize: weight must be positive and finite");
  if (c.isZero(0.0) && contains(Vector::Zero(n_), std::numeric_limits<double>::min())) {
    // phi >= 0 vanishes only at the origin. The residual certificate cannot
    // see this, since g and every term in it are zero up to rounding there.
    MinimizeResult out;
    out.x = Vector::Zero(n_);
    out.converged = true;
    return out;
  }
  if (is_polyhedral()) return minimize_polyhedral(phi, c, weight, warm, allow_closed_form, true);
  return minimize_ball(phi, c, weight, warm, allow_closed_form);
}

MinimizeResult FeasibleRegion::minimize_polyhedral(const DistanceGenerator& phi, const Vector& c,
                                                   double weight, WarmStart warm,
                                                   bool allow_closed_form, bool certify) const {
  const Data& d = *data_;
  const EqBoxData& cn = d.canon;
  const Vector cs = c / weight;
  MinimizeResult out;

  Vector start = d.feasible;
  if (warm.x != nullptr && warm.x->size() == n_ && contains(*warm.x, 1e-9)) start = *warm.x;

  if (phi.is_quadratic()) {
    const Matrix& M = phi.metric();
    const Matrix& Minv = phi.inverse_metric();
    if (allow_closed_form) {
      const Vector y = -(Minv * cs);
      bool done = false;
      if (d.affine_only) {
        out.x = metric_affine_project(y, Minv, d.aff_A, d.aff_b);
        done = true;
      } else if (cn.A.rows() <= 1 && is_diagonal(M)) {
        const Vector diag = M.diagonal();
        if (cn.A.rows() == 0) {
          out.x = y.cwiseMax(cn.lb).cwiseMin(cn.ub);
        } else {
          out.x = knapsack_project(y, diag, cn.A.row(0).transpose(), cn.b[0], cn.lb, cn.ub);
        }
        done = true;
      }
      if (done) {
        out.iterations = 1;
        out.vi_residual = certify ? natural_residual(out.x, cs + M * out.x, term_scale(cs, M * out.x)) : 0.0;
        out.converged = out.vi_residual <= 1e-9;
        return out;
      }
    }
    const QpResult qp = solve_qp(cn, M, cs, start, warm.working_set);
    out.x = qp.x;
    out.iterations = qp.iterations;
    out.working_set = qp.working_set;
    out.vi_residual = qp.kkt_residual;
    if (certify) {
      const Vector Mx = M * out.x;
      out.vi_residual = std::max(out.vi_residual, natural_residual(out.x, cs + Mx, term_scale(cs, Mx)));
    }
    out.converged = qp.converged && out.vi_residual <= 1e-9;
    return out;
  }

  // Sequential quadratic programming with exact Hessians and an Armijo search.
  if (warm.x == nullptr) {
    start = euclidean_project(phi.conjugate_gradient(-cs));
  }
  Vector x = start;
  std::vector<BoundState> ws;
  if (warm.working_set != nullptr) ws = *warm.working_set;
  auto F = [&](const Vector& z) { return cs.dot(z) + phi.value(z); };
  int it = 0;
  double cap_factor = 1e6;
  auto certified = [&](const Vector& z) {
    const Vector gz = phi.gradient(z);
    return natural_residual(z, cs + gz, term_scale(cs, gz)) <= 1e-9;
  };
  for (; it < 2000; ++it) {
    const Vector g = cs + phi.gradient(x);
    Matrix H = phi.hessian(x);
    H = 0.5 * (H + H.transpose());
    // Gauges with q < 2 have unbounded curvature at x_i = 0; left alone it
    // pins such coordinates to a bound forever.
    double hmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (H(i, i) > 0.0) hmin = std::min(hmin, H(i, i));
    }
    const double cap = std::isfinite(hmin) ? cap_factor * hmin : std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n_; ++i) H(i, i) = std::min(H(i, i), cap);
    const double hs = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    H.diagonal().array() += 1e-12 * hs;
    const QpResult qp = solve_qp(cn, H, g - H * x, x, ws.empty() ? nullptr : &ws);
    const Vector dstep = qp.x - x;
    const double dn = inf_norm(dstep);
    if (dn <= 1e-15 * (1.0 + inf_norm(x))) {
      // A stalled step next to a capped coordinate may just mean the cap is
      // too stiff there; relax it before giving up.
      if (cap_factor > 1.0 && !certified(x)) {
        cap_factor *= 1e-2;
        continue;
      }
      break;
    }
    const double slope = g.dot(dstep);
    const double f0 = F(x);
    double t = 1.0;
    // Below the rounding noise of F the Armijo test is meaningless; take the
    // full Newton step.
    if (std::abs(slope) > 1e-13 * (1.0 + std::abs(f0))) {
      while (t > 1e-12 && F(x + t * dstep) > f0 + 1e-4 * t * slope + 1e-15 * std::abs(f0)) t *= 0.5;
      if (t <= 1e-12) t = dn < 1e-8 ? 1.0 : t;
    }
    x += t * dstep;
    if (t == 1.0) ws = qp.working_set;
    if (t == 1.0 && dn <= 1e-13 * (1.0 + inf_norm(x))) {
      if (cap_factor > 1.0 && !certified(x)) {
        cap_factor *= 1e-2;
        continue;
      }
      ++it;
      break;
    }
  }
  for (Eigen::Index i = 0; i < n_; ++i) x[i] = std::clamp(x[i], cn.lb[i], cn.ub[i]);
  out.x = x;
  out.iterations = it;
  out.working_set = ws;
  out.vi_residual = natural_residual(x, cs + phi.gradient(x), term_scale(cs, phi.gradient(x)));
  out.converged = out.vi_residual <= 1e-9;
  return out;
}

MinimizeResult FeasibleRegion::minimize_ball(const DistanceGenerator& phi, const Vector& c, double weight,
                                             WarmStart warm, bool allow_closed_form) const {
  const Data& d = *data_;
  const GaugeSet& U = *d.shape;
  const NormFunction& N = U.gauge();
  const double l = d.level;
  const Vector cs = c / weight;
  MinimizeResult out;

  const Vector z = -cs;
  const Vector y = phi.conjugate_gradient(z);
  if (N.value(y) <= l) {
    out.x = y;
    out.iterations = 1;
    out.vi_residual = natural_residual(y, cs + phi.gradient(y), term_scale(cs, phi.gradient(y)));
    out.converged = out.vi_residual <= 1e-9;
    return out;
  }

  const bool matched = U.approx_equal(phi.shape().polar_set(), 1e-10);
  if (matched && allow_closed_form) {
    // Radial rescaling in the dual space: x = grad phi*(theta z) with theta
    // chosen so that x lands on the boundary.
    const double theta = phi.post().derivative(l) / phi.shape().gauge().value(z);
    out.x = phi.conjugate_gradient(theta * z);
    out.iterations = 1;
    out.vi_residual = natural_residual(out.x, cs + phi.gradient(out.x), term_scale(cs, phi.gradient(out.x)));
    out.converged = out.vi_residual <= 1e-9;
    return out;
  }

  // Multiplier search: x(mu) minimizes <cs,x> + phi(x) + mu/2 ||x||_U^2 and
  // ||x(mu)||_U decreases in mu.
  Vector x = (warm.x != nullptr && warm.x->size() == n_) ? *warm.x : y;
  int total = 0;
  auto inner = [&](double mu) {
    auto F = [&](const Vector& v) {
      const double nv = N.value(v);
      return cs.dot(v) + phi.value(v) + 0.5 * mu * nv * nv;
    };
    for (int k = 0; k < 100; ++k) {
      ++total;
      const double nx = N.value(x);
      const Vector gN = N.gradient(x);
      const Vector g = cs + phi.gradient(x) + mu * nx * gN;
      Matrix H = phi.hessian(x) + mu * (gN * gN.transpose() + nx * N.hessian(x));
      H.diagonal().array() += 1e-13 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
      const Vector step = -H.ldlt().solve(g);
      const double sn = inf_norm(step);
      if (!std::isfinite(sn)) throw SolverError("ball multiplier search: singular Newton system", inf_norm(g), total);
      double t = 1.0;
      const double f0 = F(x);
      while (t > 1e-12 && F(x + t * step) > f0 + 1e-4 * t * g.dot(step) + 1e-15 * std::abs(f0)) t *= 0.5;
      if (t <= 1e-12) t = 1.0;
      x += t * step;
      if (sn <= 1e-14 * (1.0 + inf_norm(x))) break;
    }
    return N.value(x);
  };

  double mu_lo = 0.0;
  double mu_hi = 1.0;
  while (inner(mu_hi) > l) {
    mu_lo = mu_hi;
    mu_hi *= 4.0;
    if (mu_hi > 1e30) throw SolverError("ball multiplier search: no bracket", inf_norm(x), total);
  }
  std::uintmax_t max_iter = 200;
  auto fn = [&](double mu) { return inner(mu) - l; };
  const auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(b)); };
  const double f_lo = mu_lo == 0.0 ? N.value(y) - l : fn(mu_lo);
  const double f_hi = fn(mu_hi);
  double mu_star = mu_hi;
  if (f_lo * f_hi < 0.0) {
    const auto br = boost::math::tools::toms748_solve(fn, mu_lo, mu_hi, f_lo, f_hi, tol, max_iter);
    mu_star = 0.5 * (br.first + br.second);
  }
  inner(mu_star);
  // Snap onto the boundary; the multiplier search leaves O(eps) drift.
  const double nx = N.value(x);
  if (nx > l) x *= l / nx;
  out.x = x;
  out.iterations = total;
  out.vi_residual = natural_residual(x, cs + phi.gradient(x), term_scale(cs, phi.gradient(x)));
  out.converged = out.vi_residual <= 1e-8;
  return out;
}

// ------------------------------------------------------------ free functions

bool contains(const FeasibleRegion& region, const Vector& x, double tol) { return region.contains(x, tol); }

FaceSignature face_signature(const FeasibleRegion& region, const Vector& x, double tol) {
  return region.face_signature(x, tol);
}

MinimizeResult bregman_project_report(const DistanceGenerator& phi, const FeasibleRegion& region,
                                      const Vector& y, WarmStart warm) {
  require_dimension(y, region.dimension(), "bregman_project");
  require_finite(y, "bregman_project");
  MinimizeResult r = region.minimize(phi, -phi.gradient(y), 1.0, warm);
  if (!r.converged) throw SolverError("Bregman projection did not converge", r.vi_residual, r.iterations);
  return r;
}

Vector bregman_project(const DistanceGenerator& phi, const FeasibleRegion& region, const Vector& y) {
  return bregman_project_report(phi, region, y).x;
}

Vector project_affine_hull(const DistanceGenerator& phi, const FeasibleRegion& region, const Vector& y) {
  if (!region.is_polyhedral()) throw InputError("project_affine_hull: region must be polyhedral");
  require_dimension(y, region.dimension(), "project_affine_hull");
  require_finite(y, "project_affine_hull");
  const Matrix& A = region.affine_hull_matrix();
  const Vector& b = region.affine_hull_rhs();
  if (A.rows() == 0) return y;
  if (phi.is_quadratic()) return metric_affine_project(y, phi.inverse_metric(), A, b);

  // Dual problem: x(nu) = grad phi*(grad phi(y) + A' nu) with A x(nu) = b,
  // minimizing the convex dual phi*(grad phi(y) + A' nu) - b' nu.
  const Vector gy = phi.gradient(y);
  const double bscale = 1.0 + inf_norm(b);
  auto x_of = [&](const Vector& v) { return phi.conjugate_gradient(gy + A.transpose() * v); };
  auto accept = [&](const Vector& v, int iterations, const char* what) {
    const Vector xf = x_of(v);
    const double res = inf_norm(A * xf - b) / bscale;
    if (res <= 1e-10) return xf;
    throw SolverError(what, res, iterations);
  };

  if (A.rows() == 1) {
    // One row: A x(nu) - b is nondecreasing in nu, so bracket and root-find.
    // Newton is unreliable here because the conjugate Hessian blows up at
    // zero coordinates when q < 2.
    const Vector a = A.row(0).transpose();
    Vector v(1);
    auto h = [&](double t) {
      v[0] = t;
      return a.dot(x_of(v)) - b[0];
    };
    const double h0 = h(0.0);
    if (std::abs(h0) <= 1e-13 * bscale) return accept(Vector::Zero(1), 0, "affine hull projection stalled");
    const double dir = h0 > 0.0 ? -1.0 : 1.0;
    double near = 0.0;
    double h_near = h0;
    double far = dir * std::max(1.0, inf_norm(gy)) / std::max(1e-300, inf_norm(a));
    double h_far = h(far);
    int expand = 0;
    while ((h_far > 0.0) == (h0 > 0.0) && h_far != 0.0 && expand++ < 200) {
      near = far;
      h_near = h_far;
      far *= 4.0;
      h_far = h(far);
    }
    if ((h_far > 0.0) == (h0 > 0.0) && h_far != 0.0) {
      throw SolverError("affine hull projection: no bracket", std::abs(h_far) / bscale, expand);
    }
    if (h_far == 0.0) return accept(Vector::Constant(1, far), expand, "affine hull projection stalled");
    double lo = std::min(near, far);
    double hi = std::max(near, far);
    double f_lo = lo == near ? h_near : h_far;
    double f_hi = hi == near ? h_near : h_far;
    std::uintmax_t max_iter = 300;
    const auto tol = [](double p, double q) { return std::abs(p - q) <= 4e-16 * std::max(std::abs(p), std::abs(q)); };
    const auto br = boost::math::tools::toms748_solve(h, lo, hi, f_lo, f_hi, tol, max_iter);
    // Keep whichever end of the final bracket has the smaller residual.
    const double pick = std::abs(h(br.first)) <= std::abs(h(br.second)) ? br.first : br.second;
    return accept(Vector::Constant(1, pick), static_cast<int>(max_iter), "affine hull projection did not converge");
  }

  // Several rows: damped Newton on the dual, falling back to a gradient step
  // when the Newton direction fails the Armijo test.
  Vector nu = Vector::Zero(A.rows());
  auto dual = [&](const Vector& v) { return phi.conjugate_value(gy + A.transpose() * v) - b.dot(v); };
  for (int it = 0; it < 500; ++it) {
    const Vector zz = gy + A.transpose() * nu;
    const Vector x = phi.conjugate_gradient(zz);
    const Vector h = A * x - b;
    if (inf_norm(h) <= 1e-13 * bscale) return x;
    Matrix J = A * phi.conjugate_hessian(zz) * A.transpose();
    J.diagonal().array() += 1e-14 * std::max(1.0, J.diagonal().cwiseAbs().maxCoeff());
    const double f0 = dual(nu);
    auto armijo = [&](const Vector& dir, double t0) {
      const double slope = h.dot(dir);
      double t = t0;
      while (t > 1e-12 && dual(nu + t * dir) > f0 + 1e-4 * t * slope + 1e-15 * std::abs(f0)) t *= 0.5;
      return t > 1e-12 ? t : 0.0;
    };
    Vector step = -J.ldlt().solve(h);
    double t = 1.0;
    if (std::abs(h.dot(step)) > 1e-13 * (1.0 + std::abs(f0))) {
      t = h.dot(step) < 0.0 ? armijo(step, 1.0) : 0.0;
      if (t == 0.0) {
        step = -h;
        t = armijo(step, 1.0 / std::max(1e-300, J.diagonal().cwiseAbs().maxCoeff()));
        if (t == 0.0) t = 1e-12;
      }
    }
    nu += t * step;
    if (inf_norm(t * step) <= 1e-16 * (1.0 + inf_norm(nu))) return accept(nu, it + 1, "affine hull projection stalled");
  }
  return accept(nu, 500, "affine hull projection did not converge");
}

}  // namespace robustpath
