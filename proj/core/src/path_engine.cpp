#include "robustpath/path_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "robustpath/parallel.hpp"

namespace robustpath {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

PathPoint make_point(const ProblemInstance& inst, SolveReport&& rep, double omega, double lambda) {
  PathPoint p;
  p.x = std::move(rep.x);
  p.omega = omega;
  p.lambda = lambda;
  p.vi_residual = rep.vi_residual;
  p.working_set = std::move(rep.working_set);
  p.face = inst.region().face_signature(p.x, kFaceTolerance * (1.0 + inf_norm(p.x)));
  p.objective_nominal = inst.a0().dot(p.x);
  p.objective_phi = inst.phi().value(p.x);
  p.r = radius_for(inst, omega, p.x);
  if (std::isfinite(omega) && inst.shape().polar().value(p.x) < 1e-14) {
    p.r = 0.0;
    p.radius_degenerate = true;
  }
  return p;
}

std::optional<double> nominal_optimum(const ProblemInstance& inst) {
  try {
    return solve_linear(inst).objective;
  } catch (const UnboundedError&) {
    return std::nullopt;
  }
}

double stop_scale(const ProblemInstance& inst, const Vector& x0, const std::optional<double>& opt) {
  double s = std::max(1.0, std::abs(inst.a0().dot(x0)));
  if (opt) s = std::max(s, std::abs(*opt));
  return s;
}

struct OmegaRange {
  double omega_max;
  double omega_min;
};

// Log-uniform targets: omega_max moves the first point about 1e-3 of the path
// length away from x0; omega_min is where the central path reaches the
// nominal optimum within the stop tolerance.
OmegaRange resolve_omega_range(const ProblemInstance& inst, const Vector& x0, const StepSchedule& s,
                               const StopRule& stop, const std::optional<double>& opt, double scale) {
  OmegaRange out{s.omega_max, s.omega_min};
  std::optional<Vector> xe;
  if (opt) {
    try {
      xe = solve_linear(inst).x;
    } catch (const Error&) {
      xe.reset();
    }
  }
  const double diam = xe ? (*xe - x0).norm() : std::max(1.0, x0.norm());
  if (diam == 0.0 || inst.a0().isZero(0.0)) {
    if (!std::isfinite(out.omega_max)) out.omega_max = 1.0;
    if (!std::isfinite(out.omega_min)) out.omega_min = 0.5 * out.omega_max;
    return out;
  }
  auto cp = [&](double log_omega) { return central_point(inst, std::exp(log_omega), x0).x; };

  if (!std::isfinite(out.omega_max)) {
    const double target = 1e-3 * diam;
    auto dist = [&](double L) { return (cp(L) - x0).norm(); };
    double lo = 0.0;  // dist(lo) > target
    double hi = 0.0;  // dist(hi) <= target
    if (dist(0.0) > target) {
      hi = 0.0;
      do {
        lo = hi;
        hi += std::log(16.0);
      } while (dist(hi) > target && hi < 200.0);
    } else {
      lo = 0.0;
      do {
        hi = lo;
        lo -= std::log(16.0);
      } while (dist(lo) <= target && lo > -200.0);
    }
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dist(mid) > target ? lo : hi) = mid;
    }
    out.omega_max = std::exp(hi);
  }

  if (!std::isfinite(out.omega_min)) {
    if (!opt) {
      out.omega_min = 1e-3 * out.omega_max;
    } else {
      const double tol = stop.tolerance * scale;
      auto reached = [&](double L) { return inst.a0().dot(cp(L)) - *opt <= tol; };
      double hi = std::log(out.omega_max);  // not reached
      double lo = hi;
      bool found = false;
      for (int d = 0; d < 40; ++d) {
        lo -= std::log(10.0);
        if (reached(lo)) {
          found = true;
          break;
        }
        hi = lo;
      }
      if (!found) {
        out.omega_min = 1e-6 * out.omega_max;
      } else {
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          (reached(mid) ? lo : hi) = mid;
        }
        out.omega_min = std::exp(lo);
      }
    }
  }
  if (!(out.omega_min < out.omega_max)) out.omega_min = 0.5 * out.omega_max;
  return out;
}

// Produces lambda_k on demand.
class StepSource {
 public:
  // `extend`: keep stepping geometrically past omega_min (only useful when the
  // path has a finite endpoint to reach).
  StepSource(const StepSchedule& s, const OmegaRange* range, bool extend) : s_(s), extend_(extend) {
    if (s.kind == StepSchedule::Kind::GeometricOmega) {
      const int K = std::max(2, s.points);
      const double lmax = std::log(range->omega_max);
      const double lmin = std::log(range->omega_min);
      omegas_.resize(K);
      for (int k = 0; k < K; ++k) omegas_[k] = std::exp(lmax + (lmin - lmax) * k / (K - 1));
      ratio_ = omegas_[K - 1] / omegas_[K - 2];
    }
  }

  // NaN once the schedule is exhausted.
  double next(int k) {
    switch (s_.kind) {
      case StepSchedule::Kind::Constant:
        return s_.lambda0;
      case StepSchedule::Kind::Harmonic:
        return s_.lambda0 / (k + 1);
      case StepSchedule::Kind::Geometric:
        return s_.lambda0 * std::pow(s_.ratio, k);
      case StepSchedule::Kind::Explicit:
        return k < static_cast<int>(s_.steps.size()) ? s_.steps[k] : kNaN;
      case StepSchedule::Kind::GeometricOmega: {
        if (!extend_ && k >= static_cast<int>(omegas_.size())) return kNaN;
        // omega_{k+1} from the targets, then continue geometrically.
        const double w_next = k < static_cast<int>(omegas_.size())
                                  ? omegas_[k]
                                  : omegas_.back() * std::pow(ratio_, k - static_cast<int>(omegas_.size()) + 1);
        if (k == 0) return w_next;
        const double w_prev = k - 1 < static_cast<int>(omegas_.size())
                                  ? omegas_[k - 1]
                                  : omegas_.back() * std::pow(ratio_, k - static_cast<int>(omegas_.size()));
        return 1.0 / (1.0 / w_next - 1.0 / w_prev);
      }
    }
    return kNaN;
  }

 private:
  const StepSchedule& s_;
  std::vector<double> omegas_;
  double ratio_ = 0.5;
  bool extend_ = true;
};

void require_decreasing(const std::vector<double>& omegas, const char* what) {
  if (omegas.empty()) throw InputError(std::string(what) + ": omega grid is empty");
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (std::isnan(omegas[i]) || !(omegas[i] > 0.0)) throw InputError(std::string(what) + ": omegas must be positive");
    if (i > 0 && !(omegas[i] < omegas[i - 1])) throw InputError(std::string(what) + ": omegas must be strictly decreasing");
  }
}

TracedPath trace_grid(const ProblemInstance& inst, const std::vector<double>& omegas, PathKind kind,
                      const Vector* x0) {
  TracedPath path;
  path.kind = kind;
  path.fingerprint = inst.fingerprint();
  if (x0 != nullptr) path.anchor = *x0;
  path.nominal_optimum = nominal_optimum(inst);
  std::vector<std::optional<PathPoint>> pts(omegas.size());
  std::vector<std::string> errors(omegas.size());
  parallel_for(omegas.size(), [&](std::size_t i) {
    try {
      const double w = omegas[i];
      SolveReport rep;
      if (kind == PathKind::Central) {
        if (std::isinf(w)) {
          rep.x = *x0;
          rep.converged = true;
        } else {
          rep = central_point(inst, w, *x0);
        }
      } else {
        rep = solve_regularized(inst, w);
      }
      pts[i] = make_point(inst, std::move(rep), w, kNaN);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i]) {
      path.complete = false;
      path.failure = errors[i];
      break;
    }
    path.points.push_back(std::move(*pts[i]));
  }
  const MonotoneReport m = check_monotone(path, inst.region());
  if (m.applicable) path.monotone = m.monotone;
  return path;
}

}  // namespace

const char* to_string(PathKind kind) {
  switch (kind) {
    case PathKind::Proximal:
      return "proximal";
    case PathKind::Central:
      return "central";
    case PathKind::ReferenceRobust:
      return "reference";
  }
  return "unknown";
}

// -------------------------------------------------------------- schedules

StepSchedule StepSchedule::constant(double lambda) {
  StepSchedule s;
  s.kind = Kind::Constant;
  s.lambda0 = lambda;
  return s;
}

StepSchedule StepSchedule::harmonic(double lambda0) {
  StepSchedule s;
  s.kind = Kind::Harmonic;
  s.lambda0 = lambda0;
  return s;
}

StepSchedule StepSchedule::geometric(double lambda0, double ratio) {
  StepSchedule s;
  s.kind = Kind::Geometric;
  s.lambda0 = lambda0;
  s.ratio = ratio;
  return s;
}

StepSchedule StepSchedule::explicit_steps(std::vector<double> steps) {
  StepSchedule s;
  s.kind = Kind::Explicit;
  s.steps = std::move(steps);
  return s;
}

StepSchedule StepSchedule::geometric_omega(int points, double omega_max, double omega_min) {
  StepSchedule s;
  s.kind = Kind::GeometricOmega;
  s.points = points;
  s.omega_max = omega_max;
  s.omega_min = omega_min;
  return s;
}

void StepSchedule::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  switch (kind) {
    case Kind::Constant:
    case Kind::Harmonic:
      if (!positive(lambda0)) throw InputError("schedule: lambda0 must be positive and finite");
      break;
    case Kind::Geometric:
      if (!positive(lambda0)) throw InputError("schedule: lambda0 must be positive and finite");
      // sum 1/lambda_k diverges only when the steps do not grow.
      if (!(ratio > 0.0) || ratio > 1.0) throw InputError("schedule: geometric ratio must lie in (0, 1]");
      break;
    case Kind::Explicit:
      if (steps.empty()) throw InputError("schedule: explicit step list is empty");
      for (double v : steps) {
        if (!positive(v)) throw InputError("schedule: explicit steps must be positive and finite");
      }
      break;
    case Kind::GeometricOmega:
      if (points < 2) throw InputError("schedule: geometric_omega needs at least 2 points");
      if (std::isfinite(omega_max) && !(omega_max > 0.0)) throw InputError("schedule: omega_max must be positive");
      if (std::isfinite(omega_min) && !(omega_min > 0.0)) throw InputError("schedule: omega_min must be positive");
      if (std::isfinite(omega_max) && std::isfinite(omega_min) && !(omega_min < omega_max)) {
        throw InputError("schedule: omega_min must be below omega_max");
      }
      break;
  }
}

std::vector<double> accumulate_omega(const std::vector<double>& stepsizes) {
  std::vector<double> out;
  out.reserve(stepsizes.size());
  double s = 0.0;
  for (double l : stepsizes) {
    if (std::isnan(l) || !(l > 0.0)) throw InputError("accumulate_omega: step sizes must be positive");
    s += 1.0 / l;
    out.push_back(1.0 / s);
  }
  return out;
}

// ----------------------------------------------------------------- tracers

TracedPath trace_proximal_path(const ProblemInstance& inst, const StepSchedule& schedule, const StopRule& stop,
                               const std::optional<Vector>& start) {
  schedule.validate();
  if (stop.max_points < 1) throw InputError("stop rule: max_points must be >= 1");
  if (!(stop.tolerance >= 0.0)) throw InputError("stop rule: tolerance must be >= 0");

  TracedPath path;
  path.kind = PathKind::Proximal;
  path.fingerprint = inst.fingerprint();

  SolveReport first;
  if (start) {
    require_dimension(*start, inst.dimension(), "trace_proximal_path start");
    if (!inst.region().contains(*start, 1e-9 * (1.0 + inf_norm(*start)))) {
      throw InfeasibleError("trace_proximal_path: start point is not feasible");
    }
    first.x = *start;
    first.converged = true;
  } else {
    first = solve_regularized(inst, kOmegaInfinity);
  }
  path.anchor = first.x;
  path.nominal_optimum = nominal_optimum(inst);
  const double scale = stop_scale(inst, path.anchor, path.nominal_optimum);
  const double tol = stop.tolerance * scale;

  std::optional<OmegaRange> range;
  if (schedule.kind == StepSchedule::Kind::GeometricOmega) {
    range = resolve_omega_range(inst, path.anchor, schedule, stop, path.nominal_optimum, scale);
  }
  StepSource steps(schedule, range ? &*range : nullptr, path.nominal_optimum.has_value());

  path.points.push_back(make_point(inst, std::move(first), kOmegaInfinity, kNaN));
  double inv_sum = 0.0;
  for (int k = 0;; ++k) {
    const PathPoint& cur = path.points.back();
    if (path.nominal_optimum && cur.objective_nominal - *path.nominal_optimum <= tol) break;
    if (static_cast<int>(path.points.size()) >= stop.max_points) break;
    const double lambda = steps.next(k);
    if (std::isnan(lambda)) break;
    try {
      const Vector xk = cur.x;
      const std::vector<BoundState> ws = cur.working_set;
      SolveReport rep = proximal_step(inst, lambda, xk, Route::Projection,
                                      WarmStart{&xk, ws.empty() ? nullptr : &ws});
      inv_sum += 1.0 / lambda;
      path.points.push_back(make_point(inst, std::move(rep), 1.0 / inv_sum, lambda));
    } catch (const Error& e) {
      path.complete = false;
      path.failure = e.what();
      break;
    }
  }
  const MonotoneReport m = check_monotone(path, inst.region());
  if (m.applicable) path.monotone = m.monotone;
  return path;
}

TracedPath trace_reference_robust_path(const ProblemInstance& inst, const std::vector<double>& omegas) {
  require_decreasing(omegas, "trace_reference_robust_path");
  return trace_grid(inst, omegas, PathKind::ReferenceRobust, nullptr);
}

TracedPath trace_central_path(const ProblemInstance& inst, const std::vector<double>& omegas, const Vector& x0) {
  require_decreasing(omegas, "trace_central_path");
  require_dimension(x0, inst.dimension(), "trace_central_path anchor");
  if (!inst.region().contains(x0, 1e-7 * (1.0 + inf_norm(x0)))) {
    throw InfeasibleError("trace_central_path: anchor is not feasible");
  }
  return trace_grid(inst, omegas, PathKind::Central, &x0);
}

MonotoneReport check_monotone(const TracedPath& path, const FeasibleRegion& region) {
  MonotoneReport rep;
  rep.applicable = region.is_polyhedral();
  for (const PathPoint& p : path.points) {
    require_dimension(p.x, region.dimension(), "check_monotone");
    if (!region.contains(p.x, kFaceTolerance * (1.0 + inf_norm(p.x)))) {
      throw InputError("check_monotone: path contains an infeasible point");
    }
    rep.faces.push_back(region.face_signature(p.x, kFaceTolerance * (1.0 + inf_norm(p.x))));
  }
  for (std::size_t k = 1; k < rep.faces.size(); ++k) {
    if (!rep.faces[k - 1].subset_of(rep.faces[k])) {
      rep.monotone = false;
      break;
    }
  }
  return rep;
}

// ------------------------------------------------------------------ bounds

double instance_kappa(const ProblemInstance& inst) {
  const auto s = inst.phi().smoothness();
  if (!s) throw InputError("kappa is only available for quadratic distance generators");
  return s->kappa;
}

BoundReport theorem2_bound(const ProblemInstance& inst, double kappa) {
  if (!inst.region().is_polyhedral()) throw InputError("theorem2_bound: region must be polyhedral");
  if (!(kappa >= 1.0)) throw InputError("theorem2_bound: kappa must be >= 1");
  BoundReport rep;
  rep.kappa = kappa;
  const Vector xr = solve_regularized(inst, kOmegaInfinity).x;
  const Vector xa = project_affine_hull(inst.phi(), inst.region(), Vector::Zero(inst.dimension()));
  rep.anchor_gap_forward = bregman_divergence(inst.phi(), xr, xa);
  rep.anchor_gap_reverse = bregman_divergence(inst.phi(), xa, xr);
  rep.anchor_gap = std::max(rep.anchor_gap_forward, rep.anchor_gap_reverse);
  rep.theorem2_bound = kappa * kappa * rep.anchor_gap;
  return rep;
}

BoundReport theorem2_bound(const ProblemInstance& inst) { return theorem2_bound(inst, instance_kappa(inst)); }

bool anchors_coincide(const ProblemInstance& inst) {
  if (!inst.region().is_polyhedral()) return false;
  const Vector xr = solve_regularized(inst, kOmegaInfinity).x;
  const Vector xa = project_affine_hull(inst.phi(), inst.region(), Vector::Zero(inst.dimension()));
  return (xr - xa).norm() <= 1e-9 * (1.0 + xa.norm());
}

BoundReport theorem3_bound(const ProblemInstance& inst, const TracedPath& proximal, const TracedPath& central,
                           double kappa) {
  if (proximal.kind != PathKind::Proximal || central.kind != PathKind::Central) {
    throw InputError("theorem3_bound: expects a proximal path and a central path");
  }
  if (proximal.points.empty() || central.points.empty()) throw InputError("theorem3_bound: empty path");
  if (proximal.fingerprint != inst.fingerprint() || central.fingerprint != inst.fingerprint()) {
    throw InputError("theorem3_bound: paths belong to a different instance");
  }
  const Vector& x0 = proximal.anchor;
  if ((x0 - central.anchor).norm() > 1e-9 * (1.0 + x0.norm())) {
    throw InputError("theorem3_bound: paths have different anchors");
  }
  BoundReport rep;
  rep.kappa = kappa;
  if (!inst.region().is_polyhedral()) {
    rep.applicable = false;
    rep.note = "faces are only defined on polyhedral regions";
    return rep;
  }
  const DistanceGenerator& phi = inst.phi();
  const FeasibleRegion& X = inst.region();
  auto face_of = [&](const Vector& x) { return X.face_signature(x, kFaceTolerance * (1.0 + inf_norm(x))); };
  auto cp = [&](double omega) { return std::isinf(omega) ? x0 : central_point(inst, omega, x0).x; };

  const auto& P = proximal.points;
  const auto& C = central.points;
  std::size_t k = 0;
  bool any = false;
  while (k < P.size()) {
    std::size_t kend = k;
    while (kend + 1 < P.size() && P[kend + 1].face == P[k].face) ++kend;
    FaceBound fb;
    fb.face = P[k].face;
    fb.k_entry = static_cast<int>(k);
    fb.k_exit = static_cast<int>(kend);

    std::size_t j = 0;
    while (j < C.size() && C[j].face != fb.face) ++j;
    if (j == C.size()) {
      fb.applicable = false;
      rep.per_face.push_back(fb);
      k = kend + 1;
      continue;
    }
    // Entry of the central path into the face: largest omega with that face.
    double omega_in = C[j].omega;
    Vector x_entry = C[j].x;
    if (j > 0) {
      double l_in = std::log(C[j].omega);
      double l_out = std::isinf(C[j - 1].omega) ? l_in + 40.0 : std::log(C[j - 1].omega);
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (l_in + l_out);
        (face_of(cp(std::exp(mid))) == fb.face ? l_in : l_out) = mid;
      }
      omega_in = std::exp(l_in);
      x_entry = cp(omega_in);
    }
    fb.upsilon_entry = std::isinf(omega_in) ? 0.0 : 1.0 / omega_in;
    fb.bound = kappa * bregman_divergence(phi, x_entry, P[k].x);

    const std::size_t count = kend - k;
    std::vector<double> gaps(count, -1.0);
    std::vector<double> ups(count);
    double u = fb.upsilon_entry;
    for (std::size_t t = 0; t < count; ++t) {
      u += 1.0 / P[k + 1 + t].lambda;
      ups[t] = u;
    }
    parallel_for(count, [&](std::size_t t) {
      const Vector xc = cp(1.0 / ups[t]);
      if (face_of(xc) == fb.face) gaps[t] = bregman_divergence(phi, P[k + 1 + t].x, xc);
    });
    for (double g : gaps) {
      if (g < 0.0) continue;
      fb.observed = std::max(fb.observed, g);
      ++fb.compared;
    }
    rep.observed_max_gap = std::max(rep.observed_max_gap, fb.observed);
    any = true;
    rep.per_face.push_back(fb);
    k = kend + 1;
  }
  if (!any) {
    rep.applicable = false;
    rep.note = "no face is shared by the two paths";
  }
  return rep;
}

// --------------------------------------------------------------- compare

namespace {

Vector resolve_on(const TracedPath& b, const ProblemInstance& inst, double omega) {
  if (b.kind == PathKind::Central) {
    return std::isinf(omega) ? b.anchor : central_point(inst, omega, b.anchor).x;
  }
  return solve_regularized(inst, omega).x;
}

}  // namespace

double compare_paths(const TracedPath& a, const TracedPath& b, const DistanceGenerator& phi, Matching matching,
                     const ProblemInstance* inst) {
  if (a.points.empty() || b.points.empty()) throw InputError("compare_paths: empty path");
  const bool resolvable = inst != nullptr && b.kind != PathKind::Proximal;
  std::vector<double> result(a.points.size(), -1.0);

  if (matching == Matching::ByOmega) {
    parallel_for(a.points.size(), [&](std::size_t i) {
      const PathPoint& p = a.points[i];
      if (resolvable) {
        result[i] = bregman_divergence(phi, p.x, resolve_on(b, *inst, p.omega));
        return;
      }
      for (const PathPoint& q : b.points) {
        const bool same = (std::isinf(p.omega) && std::isinf(q.omega)) ||
                          std::abs(p.omega - q.omega) <= 1e-12 * std::max(1.0, std::abs(p.omega));
        if (same) {
          result[i] = bregman_divergence(phi, p.x, q.x);
          return;
        }
      }
    });
  } else {
    parallel_for(a.points.size(), [&](std::size_t i) {
      const PathPoint& p = a.points[i];
      std::size_t best_j = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < b.points.size(); ++j) {
        const double d = bregman_divergence(phi, p.x, b.points[j].x);
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      if (resolvable && best > 0.0) {
        // Golden-section search in log omega between the neighbours.
        auto lw = [&](std::size_t j) {
          const double w = b.points[j].omega;
          if (std::isinf(w)) {
            double finite = 1.0;
            for (const PathPoint& q : b.points) {
              if (std::isfinite(q.omega)) {
                finite = q.omega;
                break;
              }
            }
            return std::log(finite) + 30.0;
          }
          return std::log(w);
        };
        double hi = lw(best_j > 0 ? best_j - 1 : best_j);
        double lo = lw(best_j + 1 < b.points.size() ? best_j + 1 : best_j);
        if (best_j + 1 >= b.points.size()) lo -= 5.0;
        if (best_j == 0) hi += 5.0;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        auto f = [&](double L) { return bregman_divergence(phi, p.x, resolve_on(b, *inst, std::exp(L))); };
        double c = hi - gr * (hi - lo);
        double d = lo + gr * (hi - lo);
        double fc = f(c);
        double fd = f(d);
        for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
          if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
          } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
          }
        }
        best = std::min({best, fc, fd});
      }
      result[i] = best;
    });
  }
  double out = -1.0;
  for (double r : result) out = std::max(out, r);
  if (out < 0.0) throw InputError("compare_paths: no pair of points could be matched");
  return out;
}

}  // namespace robustpath
