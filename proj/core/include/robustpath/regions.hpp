#pragma once

// Feasible regions X: hyperplanes, affine subspaces, equality+box polyhedra
// and gauge balls, with membership, face signatures and Bregman projections.

#include <memory>
#include <string>
#include <vector>

#include "robustpath/gauge.hpp"
#include "robustpath/solvers.hpp"

namespace robustpath {

inline constexpr double kFaceTolerance = 1e-7;

/// Active bound constraints at a point (0-based variable indices).
struct FaceSignature {
  std::vector<int> active_lower;
  std::vector<int> active_upper;
  bool on_gauge_boundary = false;
  /// Some inactive constraint sits within a small multiple of the tolerance,
  /// so the classification is sensitive to round-off.
  bool ambiguous = false;

  bool operator==(const FaceSignature& o) const {
    return active_lower == o.active_lower && active_upper == o.active_upper &&
           on_gauge_boundary == o.on_gauge_boundary;
  }
  bool operator!=(const FaceSignature& o) const { return !(*this == o); }
  /// Set inclusion of active constraints: this face contains `o`'s face.
  bool subset_of(const FaceSignature& o) const;
  /// Compact text form, e.g. "L[2]U[]" or "B1".
  std::string to_string() const;
};

/// Outcome of minimizing <c, x> + w * phi(x) over a region.
struct MinimizeResult {
  Vector x;
  double vi_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<BoundState> working_set;
};

struct WarmStart {
  const Vector* x = nullptr;
  const std::vector<BoundState>* working_set = nullptr;
};

class FeasibleRegion {
 public:
  enum class Kind { Hyperplane, AffineSubspace, EqBoxPolyhedron, NormBall };

  static FeasibleRegion hyperplane(const Vector& a, double b);
  static FeasibleRegion affine(const Matrix& A, const Vector& b);
  /// lb / ub entries may be -inf / +inf.
  static FeasibleRegion eq_box(const Matrix& A, const Vector& b, const Vector& lb, const Vector& ub);
  /// The unit simplex {x >= 0, sum x = budget}.
  static FeasibleRegion simplex(Eigen::Index n, double budget = 1.0);
  /// {x : ||x||_U <= level}.
  static FeasibleRegion norm_ball(const GaugeSet& shape, double level);

  Kind kind() const { return kind_; }
  Eigen::Index dimension() const { return n_; }
  bool is_polyhedral() const { return kind_ != Kind::NormBall; }
  /// Original constraint data (polyhedral kinds).
  const EqBoxData& constraints() const;
  /// Constraints with redundant rows removed and implicit equalities tightened.
  const EqBoxData& canonical() const;
  /// Aff(X) as equality rows (full row rank); polyhedral kinds only.
  const Matrix& affine_hull_matrix() const;
  const Vector& affine_hull_rhs() const;
  const GaugeSet& ball_shape() const;
  double ball_level() const;

  /// A certified feasible point (an LP vertex for polyhedra, 0 for balls).
  const Vector& feasible_point() const;

  bool contains(const Vector& x, double tol = 1e-9) const;
  FaceSignature face_signature(const Vector& x, double tol = kFaceTolerance) const;

  /// min <c, x>. Throws UnboundedError when the objective is unbounded below.
  LpResult linear_minimize(const Vector& c) const;

  /// argmin <c, x> + weight * phi(x), weight > 0. Closed forms are used where
  /// the geometry admits one unless `allow_closed_form` is false.
  MinimizeResult minimize(const DistanceGenerator& phi, const Vector& c, double weight,
                          WarmStart warm = {}, bool allow_closed_form = true) const;

  /// Euclidean projection (used for the natural-residual certificate).
  Vector euclidean_project(const Vector& y) const;

  /// Natural residual ||x - P_X(x - g / s)||_inf of the variational
  /// inequality with operator g at x, s = max(|g|_inf, g_scale). Pass the size
  /// of the terms summed into g as g_scale so cancellation noise is not
  /// blown up when g is nearly zero.
  double natural_residual(const Vector& x, const Vector& g, double g_scale = 0.0) const;

 private:
  struct Data;
  FeasibleRegion() = default;
  static FeasibleRegion make_polyhedral(Kind kind, const Matrix& A, const Vector& b, const Vector& lb,
                                        const Vector& ub, bool detect_implicit);
  friend FeasibleRegion region_with_extra_row(const FeasibleRegion&, const Vector&, double);

  MinimizeResult minimize_polyhedral(const DistanceGenerator& phi, const Vector& c, double weight,
                                     WarmStart warm, bool allow_closed_form, bool certify) const;
  MinimizeResult minimize_ball(const DistanceGenerator& phi, const Vector& c, double weight,
                               WarmStart warm, bool allow_closed_form) const;

  Kind kind_ = Kind::Hyperplane;
  Eigen::Index n_ = 0;
  std::shared_ptr<const Data> data_;
};

/// X intersected with {a'x = v}, without implicit-equality detection. Used
/// for tie-breaking among linear minimizers.
FeasibleRegion region_with_extra_row(const FeasibleRegion& region, const Vector& a, double v);

bool contains(const FeasibleRegion& region, const Vector& x, double tol);
FaceSignature face_signature(const FeasibleRegion& region, const Vector& x, double tol = kFaceTolerance);

/// argmin_{x in X} D_phi(x, y).
MinimizeResult bregman_project_report(const DistanceGenerator& phi, const FeasibleRegion& region,
                                      const Vector& y, WarmStart warm = {});
Vector bregman_project(const DistanceGenerator& phi, const FeasibleRegion& region, const Vector& y);

/// Bregman projection onto Aff(X), ignoring bounds. Polyhedral regions only.
Vector project_affine_hull(const DistanceGenerator& phi, const FeasibleRegion& region, const Vector& y);

}  // namespace robustpath
