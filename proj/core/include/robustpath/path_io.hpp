#pragma once

// CSV and JSON output for traced paths.

#include <iosfwd>
#include <string>

#include "robustpath/path_engine.hpp"

namespace robustpath {

/// 17 significant digits, "inf" / "-inf" / "nan" for non-finite values.
std::string format_double(double v);

/// One row per point: k, omega, r, lambda, x_1..x_n, nominal, phi, face,
/// vi_residual. The radius of every row is re-checked against the instance
/// and SolverError is thrown on a mismatch.
void write_path_csv(std::ostream& out, const TracedPath& path, const ProblemInstance& inst);

/// Path metadata (kind, fingerprint, completeness, monotone flag, endpoints,
/// per-point face and degeneracy flags) as a JSON document.
std::string path_metadata_json(const TracedPath& path, const ProblemInstance& inst);

}  // namespace robustpath
