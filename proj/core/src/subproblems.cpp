#include "robustpath/subproblems.hpp"

#include <cmath>
#include <cstring>

#include <boost/math/tools/roots.hpp>

namespace robustpath {

namespace {

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= c[i];
      h_ *= 1099511628211ULL;
    }
  }
  void num(double v) { bytes(&v, sizeof v); }
  void num(std::int64_t v) { bytes(&v, sizeof v); }
  void vec(const Vector& v) {
    num(static_cast<std::int64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) num(v[i]);
  }
  void mat(const Matrix& m) {
    num(static_cast<std::int64_t>(m.rows()));
    num(static_cast<std::int64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) num(m(i, j));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

void hash_shape(Fnv1a& h, const GaugeSet& s) {
  h.num(static_cast<std::int64_t>(s.kind()));
  if (s.kind() == GaugeSet::Kind::LpBall) {
    h.num(static_cast<std::int64_t>(s.dimension()));
    h.num(s.p());
  } else {
    h.mat(s.matrix());
  }
}

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void require_converged(const SolveReport& r, const char* what) {
  if (!r.converged) throw SolverError(what, r.vi_residual, r.iterations);
}

SolveReport from_minimize(MinimizeResult&& m) {
  SolveReport r;
  r.x = std::move(m.x);
  r.vi_residual = m.vi_residual;
  r.iterations = m.iterations;
  r.converged = m.converged;
  r.working_set = std::move(m.working_set);
  return r;
}

void require_anchor(const ProblemInstance& inst, const Vector& x, const char* what) {
  require_dimension(x, inst.dimension(), what);
  require_finite(x, what);
  const double tol = 1e-7 * (1.0 + inf_norm(x));
  if (!inst.region().contains(x, tol)) throw InfeasibleError(std::string(what) + ": anchor is not feasible");
}

}  // namespace

ProblemInstance::ProblemInstance(Vector a0, FeasibleRegion region, DistanceGenerator phi)
    : a0_(std::move(a0)), region_(std::move(region)), phi_(std::move(phi)) {
  if (a0_.size() != region_.dimension()) throw InputError("instance: a0 and region dimensions differ");
  if (phi_.dimension() != region_.dimension()) throw InputError("instance: shape and region dimensions differ");
  require_finite(a0_, "instance a0");
  Fnv1a h;
  h.vec(a0_);
  h.num(static_cast<std::int64_t>(region_.kind()));
  if (region_.is_polyhedral()) {
    const EqBoxData& c = region_.constraints();
    h.mat(c.A);
    h.vec(c.b);
    h.vec(c.lb);
    h.vec(c.ub);
  } else {
    hash_shape(h, region_.ball_shape());
    h.num(region_.ball_level());
  }
  hash_shape(h, phi_.shape());
  h.num(static_cast<std::int64_t>(phi_.post().kind()));
  h.num(phi_.post().exponent());
  fingerprint_ = h.value();
}

SolveReport solve_linear(const ProblemInstance& inst) {
  const FeasibleRegion& X = inst.region();
  const Vector& a0 = inst.a0();
  SolveReport rep;
  if (a0.isZero(0.0)) {
    rep = from_minimize(X.minimize(inst.phi(), Vector::Zero(inst.dimension()), 1.0));
    rep.objective = 0.0;
    require_converged(rep, "linear solve (tie-break)");
    return rep;
  }
  const LpResult lp = X.linear_minimize(a0);
  if (!X.is_polyhedral()) {
    rep.x = lp.x;
    rep.iterations = 1;
  } else {
    // Lexicographic tie-break: minimize phi over the optimal face.
    const FeasibleRegion face = region_with_extra_row(X, a0, lp.objective);
    const Vector start = lp.x;
    MinimizeResult m = face.minimize(inst.phi(), Vector::Zero(inst.dimension()), 1.0, WarmStart{&start, nullptr});
    if (!m.converged) throw SolverError("linear solve tie-break did not converge", m.vi_residual, m.iterations);
    rep.x = m.x;
    rep.iterations = lp.iterations + m.iterations;
  }
  rep.objective = a0.dot(rep.x);
  rep.vi_residual = X.natural_residual(rep.x, a0);
  rep.converged = rep.vi_residual <= 1e-9;
  require_converged(rep, "linear solve");
  return rep;
}

SolveReport solve_regularized(const ProblemInstance& inst, double omega, WarmStart warm) {
  if (std::isnan(omega) || omega < 0.0) throw InputError("solve_regularized: omega must be >= 0");
  if (omega == 0.0) return solve_linear(inst);
  SolveReport rep;
  if (std::isinf(omega)) {
    rep = from_minimize(inst.region().minimize(inst.phi(), Vector::Zero(inst.dimension()), 1.0, warm));
    rep.objective = inst.phi().value(rep.x);
  } else {
    rep = from_minimize(inst.region().minimize(inst.phi(), inst.a0(), omega, warm));
    rep.objective = inst.a0().dot(rep.x) + omega * inst.phi().value(rep.x);
  }
  require_converged(rep, "regularized solve");
  return rep;
}

SolveReport proximal_step(const ProblemInstance& inst, double lambda, const Vector& x_k, Route route,
                          WarmStart warm) {
  if (std::isnan(lambda) || !(lambda > 0.0)) throw InputError("proximal_step: step size must be positive");
  require_anchor(inst, x_k, "proximal_step");
  const DistanceGenerator& phi = inst.phi();
  SolveReport rep;
  if (std::isinf(lambda)) {
    rep.x = x_k;
    rep.converged = true;
  } else if (route == Route::Projection) {
    const Vector y = phi.conjugate_gradient(phi.gradient(x_k) - inst.a0() / lambda);
    rep = from_minimize(bregman_project_report(phi, inst.region(), y, warm));
  } else {
    const Vector c = inst.a0() - lambda * phi.gradient(x_k);
    rep = from_minimize(inst.region().minimize(phi, c, lambda, warm, false));
  }
  const double lam = std::isinf(lambda) ? 0.0 : lambda;
  rep.objective = inst.a0().dot(rep.x) + (lam > 0.0 ? lam * bregman_divergence(phi, rep.x, x_k) : 0.0);
  require_converged(rep, "proximal step");
  return rep;
}

SolveReport central_point(const ProblemInstance& inst, double omega, const Vector& x0, Route route,
                          WarmStart warm) {
  if (std::isnan(omega) || !(omega > 0.0)) throw InputError("central_point: omega must be positive");
  return proximal_step(inst, omega, x0, route, warm);
}

double worst_case_value(const ProblemInstance& inst, const Vector& x, double r) {
  require_dimension(x, inst.dimension(), "worst_case_value");
  if (std::isnan(r) || r < 0.0) throw InputError("worst_case_value: radius must be >= 0");
  const double base = inst.a0().dot(x);
  if (r == 0.0) return base;
  return base + r * polar_gauge_norm(inst.shape(), x);
}

double radius_for(const ProblemInstance& inst, double omega, const Vector& x) {
  if (std::isinf(omega)) return kOmegaInfinity;
  return omega * inst.phi().post().derivative(inst.shape().polar().value(x));
}

SolveReport solve_rc_dual(const ProblemInstance& inst, double r) {
  if (std::isnan(r) || r < 0.0) throw InputError("solve_rc_dual: radius must be >= 0");
  if (r == 0.0) return solve_linear(inst);
  const NormFunction& N = inst.shape().polar();
  auto finish = [&](SolveReport rep) {
    rep.objective = worst_case_value(inst, rep.x, r);
    return rep;
  };
  if (std::isinf(r)) return finish(solve_regularized(inst, kOmegaInfinity));

  // On the half-square generator with the same shape, a nonzero x solves the
  // dual at radius r exactly when it solves the regularized problem at
  // omega with omega * ||x|| = r. Root-find that scalar equation in log omega.
  const ProblemInstance hs(inst.a0(), inst.region(),
                           DistanceGenerator(inst.shape(), PostComposition::half_square()));
  SolveReport last;
  Vector warm_x;
  std::vector<BoundState> warm_ws;
  int evals = 0;
  auto x_of = [&](double log_omega) {
    WarmStart w;
    if (warm_x.size()) {
      w.x = &warm_x;
      w.working_set = warm_ws.empty() ? nullptr : &warm_ws;
    }
    last = solve_regularized(hs, std::exp(log_omega), w);
    warm_x = last.x;
    warm_ws = last.working_set;
    ++evals;
    return last;
  };
  auto f = [&](double log_omega) {
    const SolveReport s = x_of(log_omega);
    return std::exp(log_omega) * N.value(s.x) - r;
  };

  const SolveReport xr = solve_regularized(hs, kOmegaInfinity);
  const double n_r = N.value(xr.x);
  double lo;
  double hi;
  double f_hi;
  if (n_r > 1e-14) {
    // omega ||x(omega)|| >= r here in exact arithmetic; rounding can leave
    // f slightly negative when x(omega) is still x_R.
    hi = std::log(r / n_r);
    f_hi = f(hi);
    int guard = 0;
    while (f_hi < 0.0 && guard++ < 200) {
      hi += std::log(4.0);
      f_hi = f(hi);
    }
  } else {
    hi = std::log(r);
    f_hi = f(hi);
    int guard = 0;
    while (f_hi < 0.0 && guard++ < 200) {
      hi += std::log(4.0);
      f_hi = f(hi);
      if (inf_norm(last.x) <= 1e-13) break;
    }
    if (f_hi < 0.0) {
      // r exceeds every radius reached by nonzero regularized solutions, so the
      // origin (feasible here) is optimal.
      SolveReport z;
      z.x = Vector::Zero(inst.dimension());
      z.converged = true;
      z.iterations = evals;
      return finish(z);
    }
  }
  if (f_hi == 0.0) return finish(last);
  lo = hi - std::log(4.0);
  double f_lo = f(lo);
  int guard = 0;
  while (f_lo > 0.0 && guard++ < 400) {
    hi = lo;
    f_hi = f_lo;
    lo -= std::log(4.0);
    f_lo = f(lo);
  }
  if (f_lo > 0.0) throw UnboundedError("robust counterpart is unbounded below at this radius");
  if (f_lo == 0.0) return finish(x_of(lo));
  std::uintmax_t max_iter = 200;
  const auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b)); };
  const auto br = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  SolveReport rep = x_of(0.5 * (br.first + br.second));
  rep.iterations = evals;
  if (N.value(rep.x) > 1e-14) {
    const Vector pull = r * N.gradient(rep.x);
    const double g_scale = std::max(inf_norm(inst.a0()), inf_norm(pull));
    rep.vi_residual = std::max(rep.vi_residual, inst.region().natural_residual(rep.x, inst.a0() + pull, g_scale));
  }
  rep.converged = rep.vi_residual <= 1e-8;
  require_converged(rep, "dual radius search");
  return finish(rep);
}

}  // namespace robustpath
