#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "robustpath/parallel.hpp"

namespace robustpath::cli {

using nlohmann::json;

namespace {

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

Vector gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

CheckResult not_applicable(const std::string& name, const std::string& why) {
  CheckResult r;
  r.name = name;
  r.applicable = false;
  r.pass = true;
  r.note = why;
  return r;
}

std::vector<double> default_grid(const InstanceConfig& cfg, const TracedPath* prox) {
  if (cfg.omegas) return *cfg.omegas;
  if (prox != nullptr) {
    std::vector<double> g;
    for (const PathPoint& p : prox->points) g.push_back(p.omega);
    return g;
  }
  return log_grid(10.0, 0.1, 100);
}

TracedPath proximal(const InstanceConfig& cfg) {
  TracedPath p = trace_proximal_path(*cfg.instance, cfg.schedule, cfg.stop, cfg.start);
  if (!p.complete) throw SolverError("proximal path failed: " + p.failure);
  return p;
}

CheckResult check_thm2(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  if (!inst.region().is_polyhedral()) return not_applicable("thm2", "region is not polyhedral");
  if (!inst.phi().is_quadratic()) return not_applicable("thm2", "kappa needs a quadratic distance generator");
  CheckResult r;
  r.name = "thm2";
  const BoundReport b = theorem2_bound(inst);
  const Vector x_r = solve_regularized(inst, kOmegaInfinity).x;
  const std::vector<double> grid = cfg.omegas ? *cfg.omegas : log_grid(10.0, 0.1, 100);
  std::vector<double> gap(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    if (std::isinf(grid[i])) return;
    const Vector cp = central_point(inst, grid[i], x_r).x;
    const Vector rr = solve_regularized(inst, grid[i]).x;
    gap[i] = std::max(bregman_divergence(inst.phi(), cp, rr), bregman_divergence(inst.phi(), rr, cp));
  });
  r.bound = b.theorem2_bound;
  r.observed = *std::max_element(gap.begin(), gap.end());
  r.pass = r.observed <= r.bound + 1e-8;
  r.details["kappa"] = b.kappa;
  r.details["anchor_gap"] = b.anchor_gap;
  r.details["anchor_gap_forward"] = b.anchor_gap_forward;
  r.details["anchor_gap_reverse"] = b.anchor_gap_reverse;
  r.details["ratio"] = r.bound > 0.0 ? r.observed / r.bound : 0.0;
  r.details["grid_points"] = grid.size();
  return r;
}

CheckResult check_thm3(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  if (!inst.region().is_polyhedral()) return not_applicable("thm3", "faces are only defined on polyhedra");
  if (!inst.phi().is_quadratic()) return not_applicable("thm3", "kappa needs a quadratic distance generator");
  const TracedPath prox = proximal(cfg);
  std::vector<double> grid = default_grid(cfg, &prox);
  if (!std::isinf(grid.front())) grid.insert(grid.begin(), kOmegaInfinity);
  const TracedPath central = trace_central_path(inst, grid, prox.anchor);
  const BoundReport b = theorem3_bound(inst, prox, central, instance_kappa(inst));
  if (!b.applicable) return not_applicable("thm3", b.note);
  CheckResult r;
  r.name = "thm3";
  r.pass = true;
  json faces = json::array();
  for (const FaceBound& f : b.per_face) {
    json jf;
    jf["face"] = f.face.to_string();
    jf["k_entry"] = f.k_entry;
    jf["k_exit"] = f.k_exit;
    jf["applicable"] = f.applicable;
    jf["bound"] = f.bound;
    jf["observed"] = f.observed;
    jf["compared"] = f.compared;
    faces.push_back(jf);
    if (!f.applicable) continue;
    r.bound = std::max(r.bound, f.bound);
    if (f.observed > f.bound + 1e-8) r.pass = false;
  }
  r.observed = b.observed_max_gap;
  r.details["kappa"] = b.kappa;
  r.details["faces"] = faces;
  return r;
}

CheckResult check_thm4(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  if (!inst.region().is_polyhedral()) return not_applicable("thm4", "region is not polyhedral");
  const TracedPath prox = proximal(cfg);
  const bool mono = prox.monotone.value_or(false);
  const bool anchors = anchors_coincide(inst);
  const TracedPath ref = trace_reference_robust_path(inst, {kOmegaInfinity});
  CheckResult r;
  r.name = "thm4";
  r.bound = 1e-6;
  r.observed = 0.0;
  for (const PathPoint& p : prox.points) {
    const Vector x = solve_regularized(inst, p.omega).x;
    r.observed = std::max(r.observed, inf_norm(p.x - x));
  }
  r.details["monotone"] = mono;
  r.details["anchors_coincide"] = anchors;
  r.details["points"] = prox.points.size();
  r.details["divergence_by_omega"] = compare_paths(prox, ref, inst.phi(), Matching::ByOmega, &inst);
  if (!mono || !anchors) {
    r.applicable = false;
    r.pass = true;
    r.note = !mono ? "proximal path is not monotone" : "argmin over X and over Aff(X) differ";
    return r;
  }
  r.pass = r.observed <= r.bound;
  return r;
}

CheckResult check_prop1(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  const TracedPath prox = proximal(cfg);
  if (prox.points.size() < 2) return not_applicable("prop1", "path has no proximal step");
  const double lambda0 = prox.points[1].lambda;
  const Vector cp = central_point(inst, lambda0, prox.anchor).x;
  CheckResult r;
  r.name = "prop1";
  r.bound = 1e-8;
  r.observed = inf_norm(prox.points[1].x - cp);
  r.pass = r.observed <= r.bound;
  r.details["lambda0"] = lambda0;
  return r;
}

CheckResult check_prop2(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  const FeasibleRegion& X = inst.region();
  if (X.is_polyhedral()) return not_applicable("prop2", "region is not a norm ball");
  if (!X.ball_shape().approx_equal(inst.shape().polar_set(), 1e-10)) {
    return not_applicable("prop2", "ball shape is not the polar of the uncertainty shape");
  }
  const TracedPath prox = proximal(cfg);
  std::vector<double> grid = default_grid(cfg, &prox);
  if (!std::isinf(grid.front())) grid.insert(grid.begin(), kOmegaInfinity);
  const TracedPath central = trace_central_path(inst, grid, prox.anchor);
  CheckResult r;
  r.name = "prop2";
  r.bound = 1e-6;
  r.observed = compare_paths(prox, central, inst.phi(), Matching::Nearest, &inst);
  r.pass = r.observed <= r.bound;
  r.details["by_omega"] = compare_paths(prox, central, inst.phi(), Matching::ByOmega, &inst);
  r.details["points"] = prox.points.size();
  return r;
}

CheckResult check_lemma3(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  const FeasibleRegion& X = inst.region();
  if (!X.is_polyhedral()) return not_applicable("lemma3", "region is not polyhedral");
  constexpr int kSamples = 1000;
  std::mt19937_64 rng(cfg.seed);
  std::vector<Vector> ys;
  const double scale = std::max(1.0, inf_norm(X.feasible_point()));
  for (int i = 0; i < kSamples; ++i) ys.push_back(X.feasible_point() + 2.0 * scale * gaussian(rng, X.dimension()));
  std::vector<double> err(ys.size());
  parallel_for(ys.size(), [&](std::size_t i) {
    const Vector direct = bregman_project(inst.phi(), X, ys[i]);
    const Vector via = bregman_project(inst.phi(), X, project_affine_hull(inst.phi(), X, ys[i]));
    err[i] = inf_norm(direct - via);
  });
  CheckResult r;
  r.name = "lemma3";
  r.bound = 1e-8;
  r.observed = *std::max_element(err.begin(), err.end());
  r.pass = r.observed <= r.bound;
  r.details["samples"] = kSamples;
  return r;
}

CheckResult check_lemma4(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  const Eigen::Index n = inst.dimension();
  constexpr int kChecks = 100;
  constexpr int kSamples = 100000;
  std::mt19937_64 rng(cfg.seed);
  struct Case {
    Vector x;
    double r;
    std::uint64_t seed;
  };
  std::vector<Case> cases;
  std::uniform_real_distribution<double> ur(0.1, 10.0);
  for (int i = 0; i < kChecks; ++i) cases.push_back({gaussian(rng, n), ur(rng), rng()});
  std::vector<double> over(cases.size());
  std::vector<double> gap(cases.size());
  const NormFunction& Vg = inst.shape().gauge();
  parallel_for(cases.size(), [&](std::size_t i) {
    const Case& c = cases[i];
    std::mt19937_64 local(c.seed);
    const double closed = worst_case_value(inst, c.x, c.r);
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < kSamples; ++s) {
      Vector u = gaussian(local, n);
      const double nu = Vg.value(u);
      if (nu == 0.0) continue;
      u *= c.r / nu;
      best = std::max(best, inst.a0().dot(c.x) + u.dot(c.x));
    }
    const double inner = c.r * polar_gauge_norm(inst.shape(), c.x);
    over[i] = (best - closed) / std::max(1.0, std::abs(closed));
    gap[i] = inner > 0.0 ? (closed - best) / inner : 0.0;
  });
  CheckResult r;
  r.name = "lemma4";
  r.observed = *std::max_element(over.begin(), over.end());
  r.bound = 1e-12;
  const double max_gap = *std::max_element(gap.begin(), gap.end());
  r.pass = r.observed <= r.bound;
  // Boundary sampling only resolves the maximizer to 1e-3 in low dimension.
  if (n <= 3) {
    r.pass = r.pass && max_gap <= 1e-3;
  } else {
    r.note = "relative gap reported but not enforced above dimension 3";
  }
  r.details["max_relative_gap"] = max_gap;
  r.details["checks"] = kChecks;
  r.details["samples_per_check"] = kSamples;
  return r;
}

CheckResult check_kappa(const InstanceConfig& cfg) {
  const ProblemInstance& inst = *cfg.instance;
  const auto s = inst.phi().smoothness();
  if (!s) return not_applicable("kappa", "kappa needs a quadratic distance generator");
  constexpr int kPairs = 10000;
  const FeasibleRegion& X = inst.region();
  const Eigen::Index n = inst.dimension();
  std::mt19937_64 rng(cfg.seed);
  const Vector center = X.is_polyhedral() ? X.feasible_point() : Vector::Zero(n);
  const double scale = std::max(1.0, inf_norm(center));
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < kPairs; ++i) {
    Vector a = center + 2.0 * scale * gaussian(rng, n);
    Vector b = center + 2.0 * scale * gaussian(rng, n);
    pairs.emplace_back(std::move(a), std::move(b));
  }
  std::vector<double> ratio(pairs.size(), 0.0);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [a, b] = pairs[i];
    const double d = bregman_divergence(inst.phi(), a, b);
    if (d <= 0.0) return;
    const Vector pa = bregman_project(inst.phi(), X, a);
    const Vector pb = bregman_project(inst.phi(), X, b);
    ratio[i] = bregman_divergence(inst.phi(), pa, pb) / (s->kappa * d);
  });
  CheckResult r;
  r.name = "kappa";
  r.bound = 1.0 + 1e-6;
  r.observed = *std::max_element(ratio.begin(), ratio.end());
  r.pass = r.observed <= r.bound;
  r.details["kappa"] = s->kappa;
  r.details["pairs"] = kPairs;
  return r;
}

}  // namespace

json CheckResult::to_json() const {
  json j;
  j["check"] = name;
  j["applicable"] = applicable;
  j["pass"] = pass;
  j["bound"] = num(bound);
  j["observed"] = num(observed);
  if (!note.empty()) j["note"] = note;
  j["details"] = details;
  return j;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"thm2", "thm3", "thm4", "prop1", "prop2", "lemma3", "lemma4", "kappa"};
  return names;
}

CheckResult run_check(const std::string& name, const InstanceConfig& cfg) {
  if (name == "thm2") return check_thm2(cfg);
  if (name == "thm3") return check_thm3(cfg);
  if (name == "thm4") return check_thm4(cfg);
  if (name == "prop1") return check_prop1(cfg);
  if (name == "prop2") return check_prop2(cfg);
  if (name == "lemma3") return check_lemma3(cfg);
  if (name == "lemma4") return check_lemma4(cfg);
  if (name == "kappa") return check_kappa(cfg);
  throw InputError("unknown check '" + name + "'");
}

}  // namespace robustpath::cli
