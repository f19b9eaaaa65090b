#pragma once

#include <Eigen/Dense>

#include <string>

#include "robustpath/error.hpp"

namespace robustpath {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Vector& x) { return x.allFinite(); }

inline void require_dimension(const Vector& x, Eigen::Index n, const char* what) {
  if (x.size() != n) {
    throw InputError(std::string(what) + ": dimension mismatch (expected " +
                     std::to_string(n) + ", got " + std::to_string(x.size()) + ")");
  }
}

inline void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    throw InputError(std::string(what) + ": non-finite component");
  }
}

}  // namespace robustpath
