#pragma once

// The convex subproblems everything else is built from: the nominal linear
// program, the regularized (robust-path) problem, the gauge-regularized dual
// of the robust counterpart, proximal steps and central-path points.

#include <cstdint>
#include <limits>

#include "robustpath/gauge.hpp"
#include "robustpath/regions.hpp"

namespace robustpath {

inline constexpr double kOmegaInfinity = std::numeric_limits<double>::infinity();

/// min_{x in X} max_{a in a0 + Xi(r, V)} <a, x>, together with the nominal
/// problem min_{x in X} <a0, x> and the generator phi = g o ||.||_{V°}.
class ProblemInstance {
 public:
  ProblemInstance(Vector a0, FeasibleRegion region, DistanceGenerator phi);

  const Vector& a0() const { return a0_; }
  const FeasibleRegion& region() const { return region_; }
  const DistanceGenerator& phi() const { return phi_; }
  const GaugeSet& shape() const { return phi_.shape(); }
  Eigen::Index dimension() const { return a0_.size(); }

  /// FNV-1a hash over every numeric field.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  Vector a0_;
  FeasibleRegion region_;
  DistanceGenerator phi_;
  std::uint64_t fingerprint_ = 0;
};

struct SolveReport {
  Vector x;
  double objective = 0.0;
  double vi_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<BoundState> working_set;
};

/// Proximal steps and central points can be computed by minimizing the
/// defining objective directly, or by mapping to the dual space, shifting,
/// mapping back and projecting.
enum class Route { Projection, Direct };

/// argmin <a0, x>; among minimizers, the one with the smallest phi.
SolveReport solve_linear(const ProblemInstance& inst);

/// argmin <a0, x> + omega * phi(x). omega = kOmegaInfinity gives argmin phi,
/// omega = 0 gives solve_linear.
SolveReport solve_regularized(const ProblemInstance& inst, double omega, WarmStart warm = {});

/// argmin <a0, x> + r ||x||_{V°}.
SolveReport solve_rc_dual(const ProblemInstance& inst, double r);

/// argmin <a0, x> + lambda * D(x, x_k).
SolveReport proximal_step(const ProblemInstance& inst, double lambda, const Vector& x_k,
                          Route route = Route::Projection, WarmStart warm = {});

/// argmin <a0, x> + omega * D(x, x0).
SolveReport central_point(const ProblemInstance& inst, double omega, const Vector& x0,
                          Route route = Route::Projection, WarmStart warm = {});

/// <a0, x> + r ||x||_{V°}, the worst case of <a, x> over a in a0 + Xi(r, V).
double worst_case_value(const ProblemInstance& inst, const Vector& x, double r);

/// r = omega * g'(||x||_{V°}); infinite when omega is.
double radius_for(const ProblemInstance& inst, double omega, const Vector& x);

}  // namespace robustpath
