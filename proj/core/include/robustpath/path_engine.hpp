#pragma once

// Tracing the proximal, central and reference robust paths, radius recovery,
// monotonicity checks, and the distance bounds between paths.

#include <optional>
#include <string>
#include <vector>

#include "robustpath/subproblems.hpp"

namespace robustpath {

struct PathPoint {
  Vector x;
  double omega = kOmegaInfinity;
  double r = kOmegaInfinity;
  /// Step that produced this point (proximal paths); NaN otherwise.
  double lambda = std::numeric_limits<double>::quiet_NaN();
  FaceSignature face;
  double objective_nominal = 0.0;
  double objective_phi = 0.0;
  double vi_residual = 0.0;
  /// The radius map degenerates at x = 0 (g'(0) = 0), so r is reported as 0.
  bool radius_degenerate = false;
  std::vector<BoundState> working_set;
};

enum class PathKind { Proximal, Central, ReferenceRobust };
const char* to_string(PathKind kind);

struct TracedPath {
  PathKind kind = PathKind::Proximal;
  std::vector<PathPoint> points;
  std::uint64_t fingerprint = 0;
  std::optional<bool> monotone;
  /// x0 for proximal and central paths.
  Vector anchor;
  /// False when a subproblem failed and the path stops early.
  bool complete = true;
  std::string failure;
  /// Nominal value of the linear minimizer, when the linear problem is bounded.
  std::optional<double> nominal_optimum;
};

struct StepSchedule {
  enum class Kind { Constant, Harmonic, Geometric, Explicit, GeometricOmega };
  Kind kind = Kind::GeometricOmega;
  double lambda0 = 1.0;
  /// Geometric: lambda_k = lambda0 * ratio^k with 0 < ratio <= 1.
  double ratio = 1.0;
  std::vector<double> steps;
  /// GeometricOmega: log-uniform omega from omega_max down to omega_min over
  /// `points` proximal steps. Non-finite values are chosen automatically.
  double omega_max = std::numeric_limits<double>::quiet_NaN();
  double omega_min = std::numeric_limits<double>::quiet_NaN();
  int points = 200;

  static StepSchedule constant(double lambda);
  static StepSchedule harmonic(double lambda0);
  static StepSchedule geometric(double lambda0, double ratio);
  static StepSchedule explicit_steps(std::vector<double> steps);
  static StepSchedule geometric_omega(int points = 200, double omega_max = std::numeric_limits<double>::quiet_NaN(),
                                      double omega_min = std::numeric_limits<double>::quiet_NaN());

  /// Throws InputError unless sum 1/lambda_k diverges (or the list is finite).
  void validate() const;
};

struct StopRule {
  /// Stop once <a0, x_k> - <a0, x_E> <= tolerance * scale.
  double tolerance = 1e-8;
  int max_points = 10000;
};

/// omega_k = (sum_{j<k} 1/lambda_j)^{-1} for k = 1..K.
std::vector<double> accumulate_omega(const std::vector<double>& stepsizes);

/// Algorithm: x0 = argmin_X phi (or `start` when given), then proximal steps.
TracedPath trace_proximal_path(const ProblemInstance& inst, const StepSchedule& schedule,
                               const StopRule& stop = {}, const std::optional<Vector>& start = std::nullopt);

/// One regularized solve per omega; omega = kOmegaInfinity gives x_R.
TracedPath trace_reference_robust_path(const ProblemInstance& inst, const std::vector<double>& omegas);

/// One central-path point per omega, anchored at x0.
TracedPath trace_central_path(const ProblemInstance& inst, const std::vector<double>& omegas, const Vector& x0);

struct MonotoneReport {
  bool monotone = true;
  /// Faces are only meaningful on polyhedra.
  bool applicable = true;
  std::vector<FaceSignature> faces;
};

/// Active sets nondecreasing (by inclusion) along the path.
MonotoneReport check_monotone(const TracedPath& path, const FeasibleRegion& region);

struct FaceBound {
  FaceSignature face;
  int k_entry = 0;
  int k_exit = 0;
  double upsilon_entry = 0.0;
  double bound = 0.0;
  double observed = 0.0;
  int compared = 0;
  bool applicable = true;
};

struct BoundReport {
  double kappa = 1.0;
  double anchor_gap = 0.0;
  double anchor_gap_forward = 0.0;  // D(Pi_X(0), Pi_Aff(0))
  double anchor_gap_reverse = 0.0;  // D(Pi_Aff(0), Pi_X(0))
  double theorem2_bound = 0.0;
  std::vector<FaceBound> per_face;
  double observed_max_gap = 0.0;
  bool applicable = true;
  std::string note;
};

/// kappa of the instance generator; throws InputError when phi is not quadratic.
double instance_kappa(const ProblemInstance& inst);

/// Anchor gap between argmin_X phi and argmin_{Aff X} phi, and kappa^2 times it.
BoundReport theorem2_bound(const ProblemInstance& inst, double kappa);
BoundReport theorem2_bound(const ProblemInstance& inst);

/// Whether argmin_X phi and argmin_{Aff X} phi coincide within
/// 1e-9 * (1 + ||argmin_{Aff X} phi||).
bool anchors_coincide(const ProblemInstance& inst);

/// Face-partitioned bound between a proximal path and the central path with
/// the same anchor.
BoundReport theorem3_bound(const ProblemInstance& inst, const TracedPath& proximal, const TracedPath& central,
                           double kappa);

enum class Matching { ByOmega, Nearest };

/// max over matched pairs of D(a_i, b_j). With an instance, `b` is re-solved
/// at a's omegas (ByOmega) or refined by a line search in omega (Nearest).
double compare_paths(const TracedPath& a, const TracedPath& b, const DistanceGenerator& phi, Matching matching,
                     const ProblemInstance* inst = nullptr);

}  // namespace robustpath
