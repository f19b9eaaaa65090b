#pragma once

// Small dense solvers over {x : A x = b, lb <= x <= ub}: a two-phase simplex
// for linear programs and a primal active-set method for strictly convex QPs.

#include <vector>

#include "robustpath/linalg.hpp"

namespace robustpath {

/// Equality + box constraint data. Bounds may be +-infinity.
struct EqBoxData {
  Matrix A;  // m x n, m may be 0
  Vector b;
  Vector lb;
  Vector ub;

  Eigen::Index dimension() const { return lb.size(); }
  Eigen::Index rows() const { return A.rows(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
  int iterations = 0;
};

/// min c'x subject to the constraint data. Returns a basic (vertex) solution.
LpResult solve_lp(const EqBoxData& c_data, const Vector& c, double tol = 1e-9);

/// Bound state of one variable inside the active-set QP.
enum class BoundState : signed char { Free = 0, AtLower = 1, AtUpper = 2 };

struct QpResult {
  Vector x;
  Vector eq_multipliers;     // nu, with H x + c = A' nu + bound multipliers
  Vector bound_multipliers;  // >= 0 at lower, <= 0 at upper, 0 when free
  std::vector<BoundState> working_set;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// min 1/2 x'Hx + c'x subject to the constraint data, H symmetric positive
/// definite on the null space of the active constraints. `x_start` must be
/// feasible; `hint` optionally seeds the working set.
QpResult solve_qp(const EqBoxData& data, const Matrix& H, const Vector& c, const Vector& x_start,
                  const std::vector<BoundState>* hint = nullptr, double tol = 1e-11);

}  // namespace robustpath
