#include "robustpath/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robustpath {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ------------------------------------------------------------------ simplex

enum class MapKind { Fixed, Lower, Upper, Both, Free };

struct VarMap {
  MapKind kind;
  int col = -1;   // s (or s+ for free variables)
  int col2 = -1;  // s- for free variables, slack t for boxed ones
  int row = -1;   // extra row s + t = ub - lb for boxed variables
};

// Dense tableau over min d'z, E z = f, z >= 0.
class Tableau {
 public:
  Tableau(const Matrix& E, const Vector& f, double tol) : tol_(tol) {
    rows_ = E.rows();
    cols_ = E.cols();
    t_ = Matrix::Zero(rows_ + 1, cols_ + rows_ + 1);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const double sgn = f[i] < 0 ? -1.0 : 1.0;
      t_.row(i).head(cols_) = sgn * E.row(i);
      t_(i, cols_ + i) = 1.0;
      t_(i, rhs()) = sgn * f[i];
    }
    basis_.resize(rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) basis_[i] = static_cast<int>(cols_ + i);
    active_rows_.assign(rows_, true);
  }

  Eigen::Index rhs() const { return t_.cols() - 1; }

  // Phase 1 objective: sum of artificials.
  void set_phase1_objective() {
    t_.row(rows_).setZero();
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (!active_rows_[i]) continue;
      t_.row(rows_).head(cols_) -= t_.row(i).head(cols_);
      t_(rows_, rhs()) -= t_(i, rhs());
    }
  }

  void set_objective(const Vector& d) {
    t_.row(rows_).setZero();
    t_.row(rows_).head(cols_) = d.transpose();
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (!active_rows_[i]) continue;
      const int bj = basis_[i];
      if (bj < cols_) {
        const double cb = d[bj];
        if (cb != 0.0) t_.row(rows_) -= cb * t_.row(i);
      }
    }
  }

  // Returns 0 optimal, 1 unbounded, 2 iteration limit.
  int run(bool allow_artificial, int& iterations, int cap) {
    const Eigen::Index limit = allow_artificial ? cols_ + rows_ : cols_;
    while (iterations < cap) {
      int enter = -1;
      const double dscale = std::max(1.0, t_.row(rows_).head(limit).cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (t_(rows_, j) < -tol_ * dscale) {
          enter = static_cast<int>(j);
          break;
        }
      }
      if (enter < 0) return 0;
      int leave = -1;
      double best = kInf;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        if (!active_rows_[i]) continue;
        const double a = t_(i, enter);
        if (a > tol_) {
          const double ratio = t_(i, rhs()) / a;
          if (leave < 0 || ratio < best - 1e-14 * (1.0 + std::abs(best)) ||
              (std::abs(ratio - best) <= 1e-14 * (1.0 + std::abs(best)) && basis_[i] < basis_[leave])) {
            best = ratio;
            leave = static_cast<int>(i);
          }
        }
      }
      if (leave < 0) return 1;
      pivot(leave, enter);
      ++iterations;
    }
    return 2;
  }

  void pivot(Eigen::Index r, Eigen::Index j) {
    t_.row(r) /= t_(r, j);
    for (Eigen::Index i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = t_(i, j);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[r] = static_cast<int>(j);
  }

  // After phase 1: pivot artificials out of the basis or drop redundant rows.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (!active_rows_[i] || basis_[i] < cols_) continue;
      Eigen::Index best = -1;
      double best_abs = tol_;
      for (Eigen::Index j = 0; j < cols_; ++j) {
        if (std::abs(t_(i, j)) > best_abs) {
          best_abs = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) {
        pivot(i, best);
      } else {
        active_rows_[i] = false;
      }
    }
  }

  double objective_row_rhs() const { return t_(rows_, rhs()); }

  Vector solution() const {
    Vector z = Vector::Zero(cols_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (active_rows_[i] && basis_[i] < cols_) z[basis_[i]] = std::max(0.0, t_(i, rhs()));
    }
    return z;
  }

 private:
  double tol_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  Matrix t_;
  std::vector<int> basis_;
  std::vector<bool> active_rows_;
};

}  // namespace

LpResult solve_lp(const EqBoxData& data, const Vector& c, double tol) {
  const Eigen::Index n = data.dimension();
  const Eigen::Index m = data.rows();
  require_dimension(c, n, "solve_lp");

  std::vector<VarMap> map(n);
  int cols = 0;
  int extra_rows = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool lo = std::isfinite(data.lb[i]);
    const bool hi = std::isfinite(data.ub[i]);
    VarMap& v = map[i];
    if (lo && hi && data.ub[i] - data.lb[i] <= 0.0) {
      v.kind = MapKind::Fixed;
    } else if (lo && hi) {
      v.kind = MapKind::Both;
      v.col = cols++;
      v.col2 = cols++;
      v.row = static_cast<int>(m) + extra_rows++;
    } else if (lo) {
      v.kind = MapKind::Lower;
      v.col = cols++;
    } else if (hi) {
      v.kind = MapKind::Upper;
      v.col = cols++;
    } else {
      v.kind = MapKind::Free;
      v.col = cols++;
      v.col2 = cols++;
    }
  }

  const Eigen::Index rows = m + extra_rows;
  Matrix E = Matrix::Zero(rows, cols);
  Vector f = Vector::Zero(rows);
  Vector d = Vector::Zero(cols);
  if (m > 0) f.head(m) = data.b;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VarMap& v = map[i];
    double offset = 0.0;
    double sign = 1.0;
    switch (v.kind) {
      case MapKind::Fixed:
      case MapKind::Lower:
      case MapKind::Both:
        offset = data.lb[i];
        break;
      case MapKind::Upper:
        offset = data.ub[i];
        sign = -1.0;
        break;
      case MapKind::Free:
        break;
    }
    if (m > 0) {
      f.head(m) -= data.A.col(i) * offset;
      if (v.col >= 0) E.col(v.col).head(m) = sign * data.A.col(i);
      if (v.kind == MapKind::Free) E.col(v.col2).head(m) = -data.A.col(i);
    }
    if (v.col >= 0) d[v.col] = sign * c[i];
    if (v.kind == MapKind::Free) d[v.col2] = -c[i];
    if (v.kind == MapKind::Both) {
      E(v.row, v.col) = 1.0;
      E(v.row, v.col2) = 1.0;
      f[v.row] = data.ub[i] - data.lb[i];
    }
  }

  // Row equilibration keeps the pivot tolerance meaningful.
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double s = std::max(cols > 0 ? E.row(r).cwiseAbs().maxCoeff() : 0.0, std::abs(f[r]));
    if (s > 0.0) {
      E.row(r) /= s;
      f[r] /= s;
    }
  }
  const double cscale = std::max(1.0, d.size() ? d.cwiseAbs().maxCoeff() : 0.0);

  LpResult res;
  Tableau tab(E, f, tol);
  int iterations = 0;
  const int cap = static_cast<int>(50 * (rows + cols) + 1000);
  tab.set_phase1_objective();
  if (tab.run(true, iterations, cap) == 2) {
    res.status = LpStatus::IterationLimit;
    res.iterations = iterations;
    return res;
  }
  const double infeas = -tab.objective_row_rhs();
  if (infeas > 1e-8 * (1.0 + (f.size() ? f.cwiseAbs().maxCoeff() : 0.0))) {
    res.status = LpStatus::Infeasible;
    res.iterations = iterations;
    return res;
  }
  tab.expel_artificials();
  tab.set_objective(d / cscale);
  const int st = tab.run(false, iterations, cap);
  res.iterations = iterations;
  if (st == 1) {
    res.status = LpStatus::Unbounded;
    return res;
  }
  if (st == 2) {
    res.status = LpStatus::IterationLimit;
    return res;
  }

  const Vector z = tab.solution();
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VarMap& v = map[i];
    switch (v.kind) {
      case MapKind::Fixed:
        x[i] = data.lb[i];
        break;
      case MapKind::Lower:
      case MapKind::Both:
        x[i] = data.lb[i] + z[v.col];
        if (v.kind == MapKind::Both) x[i] = std::min(x[i], data.ub[i]);
        break;
      case MapKind::Upper:
        x[i] = data.ub[i] - z[v.col];
        break;
      case MapKind::Free:
        x[i] = z[v.col] - z[v.col2];
        break;
    }
  }
  res.status = LpStatus::Optimal;
  res.x = x;
  res.objective = c.dot(x);
  return res;
}

// ------------------------------------------------------------- active set QP

namespace {

std::vector<Eigen::Index> free_indices(const std::vector<BoundState>& w) {
  std::vector<Eigen::Index> f;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == BoundState::Free) f.push_back(static_cast<Eigen::Index>(i));
  }
  return f;
}

Matrix gather_cols(const Matrix& A, const std::vector<Eigen::Index>& idx) {
  Matrix out(A.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
  return out;
}

Eigen::Index column_rank(const Matrix& M) {
  if (M.rows() == 0 || M.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(M);
  qr.setThreshold(1e-10);
  return qr.rank();
}

}  // namespace

QpResult solve_qp(const EqBoxData& data, const Matrix& H, const Vector& c, const Vector& x_start,
                  const std::vector<BoundState>* hint, double tol) {
  const Eigen::Index n = data.dimension();
  const Eigen::Index m = data.rows();
  require_dimension(c, n, "solve_qp");
  require_dimension(x_start, n, "solve_qp");

  QpResult res;
  Vector x = x_start;
  std::vector<BoundState> w(n, BoundState::Free);
  const double xscale = 1.0 + x.cwiseAbs().maxCoeff();
  const double bound_tol = 1e-9 * xscale;

  // Snap the start onto bounds it (nearly) touches and build a working set
  // whose constraints stay linearly independent of the equality rows.
  std::vector<bool> fixed(n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.ub[i] - data.lb[i] <= 0.0) {
      fixed[i] = true;
      x[i] = data.lb[i];
      w[i] = BoundState::AtLower;
    }
  }
  std::vector<Eigen::Index> nonfixed;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!fixed[i]) nonfixed.push_back(i);
  }
  const Eigen::Index target_rank = m > 0 ? column_rank(gather_cols(data.A, nonfixed).transpose()) : 0;

  auto try_add = [&](Eigen::Index i, BoundState s) {
    w[i] = s;
    if (m > 0) {
      const auto f = free_indices(w);
      if (column_rank(gather_cols(data.A, f).transpose()) < target_rank) {
        w[i] = BoundState::Free;
        return false;
      }
    }
    x[i] = s == BoundState::AtLower ? data.lb[i] : data.ub[i];
    return true;
  };

  for (Eigen::Index i : nonfixed) {
    BoundState want = BoundState::Free;
    if (hint != nullptr && static_cast<Eigen::Index>(hint->size()) == n) want = (*hint)[i];
    if (want == BoundState::AtLower && std::abs(x[i] - data.lb[i]) > bound_tol) want = BoundState::Free;
    if (want == BoundState::AtUpper && std::abs(x[i] - data.ub[i]) > bound_tol) want = BoundState::Free;
    if (want == BoundState::Free) {
      if (std::isfinite(data.lb[i]) && x[i] - data.lb[i] <= bound_tol) want = BoundState::AtLower;
      else if (std::isfinite(data.ub[i]) && data.ub[i] - x[i] <= bound_tol) want = BoundState::AtUpper;
    }
    if (want != BoundState::Free) try_add(i, want);
  }

  // Snapping moves x by up to bound_tol; restore A x = b on the free set.
  if (m > 0) {
    const auto F0 = free_indices(w);
    const Vector r = data.b - data.A * x;
    if (!F0.empty() && r.cwiseAbs().maxCoeff() > 0.0) {
      const Vector dF = gather_cols(data.A, F0).completeOrthogonalDecomposition().solve(r);
      for (std::size_t k = 0; k < F0.size(); ++k) x[F0[k]] += dF[static_cast<Eigen::Index>(k)];
    }
  }

  const int cap = static_cast<int>(10 * n + 100);
  Vector nu = Vector::Zero(m);
  Vector lambda = Vector::Zero(n);
  int iter = 0;
  bool done = false;
  for (; iter < cap; ++iter) {
    const Vector g = H * x + c;
    const auto F = free_indices(w);
    const auto nf = static_cast<Eigen::Index>(F.size());
    Vector gF(nf);
    for (Eigen::Index k = 0; k < nf; ++k) gF[k] = g[F[k]];

    Matrix Z;
    Eigen::ColPivHouseholderQR<Matrix> qr;
    Eigen::Index rank = 0;
    if (m > 0 && nf > 0) {
      qr.compute(gather_cols(data.A, F).transpose());
      qr.setThreshold(1e-10);
      rank = qr.rank();
      const Matrix Q = qr.householderQ();
      Z = Q.rightCols(nf - rank);
    } else {
      Z = Matrix::Identity(nf, nf);
    }

    Vector pF = Vector::Zero(nf);
    if (Z.cols() > 0) {
      Matrix HFF(nf, nf);
      for (Eigen::Index a = 0; a < nf; ++a)
        for (Eigen::Index b = 0; b < nf; ++b) HFF(a, b) = H(F[a], F[b]);
      const Matrix Hr = Z.transpose() * HFF * Z;
      const Vector rhs = -(Z.transpose() * gF);
      Eigen::LLT<Matrix> llt(Hr);
      Vector wv;
      if (llt.info() == Eigen::Success) {
        wv = llt.solve(rhs);
      } else {
        wv = Hr.ldlt().solve(rhs);
      }
      pF = Z * wv;
    }

    const double step_norm = pF.size() ? pF.cwiseAbs().maxCoeff() : 0.0;
    if (step_norm <= tol * (1.0 + x.cwiseAbs().maxCoeff())) {
      // Still take the remaining Newton step: a warm start that is merely
      // close would otherwise be returned as is.
      bool inside = true;
      for (Eigen::Index k = 0; k < nf && inside; ++k) {
        const double v = x[F[k]] + pF[k];
        inside = v >= data.lb[F[k]] && v <= data.ub[F[k]];
      }
      if (inside) {
        for (Eigen::Index k = 0; k < nf; ++k) x[F[k]] += pF[k];
      }
      // Stationary on the current working set: check multiplier signs.
      nu.setZero();
      if (m > 0 && nf > 0) {
        nu = qr.solve(gF);
      }
      lambda = g;
      if (m > 0) lambda -= data.A.transpose() * nu;
      for (Eigen::Index k = 0; k < nf; ++k) lambda[F[k]] = 0.0;
      const double lscale = std::max(1.0, g.cwiseAbs().maxCoeff());
      Eigen::Index worst = -1;
      double worst_val = tol * lscale * 10.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (fixed[i] || w[i] == BoundState::Free) continue;
        const double v = w[i] == BoundState::AtLower ? -lambda[i] : lambda[i];
        if (v > worst_val) {
          worst_val = v;
          worst = i;
        }
      }
      if (worst < 0) {
        done = true;
        break;
      }
      w[worst] = BoundState::Free;
      continue;
    }

    // Ratio test against bounds of free variables.
    double alpha = 1.0;
    Eigen::Index block = -1;
    BoundState block_state = BoundState::Free;
    for (Eigen::Index k = 0; k < nf; ++k) {
      const Eigen::Index i = F[k];
      const double p = pF[k];
      if (p < 0.0 && std::isfinite(data.lb[i])) {
        const double a = (data.lb[i] - x[i]) / p;
        if (a < alpha) {
          alpha = std::max(0.0, a);
          block = i;
          block_state = BoundState::AtLower;
        }
      } else if (p > 0.0 && std::isfinite(data.ub[i])) {
        const double a = (data.ub[i] - x[i]) / p;
        if (a < alpha) {
          alpha = std::max(0.0, a);
          block = i;
          block_state = BoundState::AtUpper;
        }
      }
    }
    for (Eigen::Index k = 0; k < nf; ++k) x[F[k]] += alpha * pF[k];
    if (block >= 0) {
      w[block] = block_state;
      x[block] = block_state == BoundState::AtLower ? data.lb[block] : data.ub[block];
    }
  }

  // Clean up round-off against the bounds.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(data.lb[i])) x[i] = std::max(x[i], data.lb[i]);
    if (std::isfinite(data.ub[i])) x[i] = std::min(x[i], data.ub[i]);
  }

  const Vector g = H * x + c;
  Vector stat = g - lambda;
  if (m > 0) stat -= data.A.transpose() * nu;
  double sign_violation = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fixed[i]) continue;
    if (w[i] == BoundState::AtLower) sign_violation = std::max(sign_violation, -lambda[i]);
    if (w[i] == BoundState::AtUpper) sign_violation = std::max(sign_violation, lambda[i]);
  }
  const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
  double primal = 0.0;
  if (m > 0) primal = (data.A * x - data.b).cwiseAbs().maxCoeff() / (1.0 + data.b.cwiseAbs().maxCoeff());
  res.kkt_residual = std::max({stat.cwiseAbs().maxCoeff() / gscale, sign_violation / gscale, primal});
  res.x = x;
  res.eq_multipliers = nu;
  res.bound_multipliers = lambda;
  res.working_set = w;
  res.iterations = iter;
  res.converged = done;
  return res;
}

}  // namespace robustpath
