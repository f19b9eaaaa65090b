#include "robustpath/path_io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace robustpath {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void check_radius(const PathPoint& p, const ProblemInstance& inst, std::size_t k) {
  if (!std::isfinite(p.omega) || p.radius_degenerate) return;
  const double expect = radius_for(inst, p.omega, p.x);
  if (std::abs(expect - p.r) > 1e-10 * std::max(1.0, std::abs(expect))) {
    throw SolverError("radius invariant violated at point " + std::to_string(k), std::abs(expect - p.r), 0);
  }
}

nlohmann::json vec_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// json has no infinity; keep it readable.
nlohmann::json num_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

void write_path_csv(std::ostream& out, const TracedPath& path, const ProblemInstance& inst) {
  const Eigen::Index n = inst.dimension();
  out << "k,omega,r,lambda";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << (i + 1);
  out << ",nominal,phi,face,vi_residual\n";
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    const PathPoint& p = path.points[k];
    require_dimension(p.x, n, "write_path_csv");
    check_radius(p, inst, k);
    out << k << ',' << format_double(p.omega) << ',' << format_double(p.r) << ',' << format_double(p.lambda);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(p.x[i]);
    out << ',' << format_double(p.objective_nominal) << ',' << format_double(p.objective_phi) << ','
        << p.face.to_string() << ',' << format_double(p.vi_residual) << '\n';
  }
}

std::string path_metadata_json(const TracedPath& path, const ProblemInstance& inst) {
  char fp[24];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(path.fingerprint));
  nlohmann::json j;
  j["kind"] = to_string(path.kind);
  j["fingerprint"] = fp;
  j["dimension"] = inst.dimension();
  j["points"] = path.points.size();
  j["complete"] = path.complete;
  if (!path.complete) j["failure"] = path.failure;
  j["monotone"] = path.monotone ? nlohmann::json(*path.monotone) : nlohmann::json(nullptr);
  if (path.anchor.size()) j["anchor"] = vec_json(path.anchor);
  if (path.nominal_optimum) j["nominal_optimum"] = *path.nominal_optimum;
  if (!path.points.empty()) {
    const PathPoint& last = path.points.back();
    j["first"] = vec_json(path.points.front().x);
    j["last"] = vec_json(last.x);
    j["last_omega"] = num_json(last.omega);
    if (path.nominal_optimum) j["final_gap"] = last.objective_nominal - *path.nominal_optimum;
  }
  nlohmann::json faces = nlohmann::json::array();
  nlohmann::json degenerate = nlohmann::json::array();
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    faces.push_back(path.points[k].face.to_string());
    if (path.points[k].radius_degenerate) degenerate.push_back(k);
  }
  j["faces"] = faces;
  j["radius_degenerate"] = degenerate;
  return j.dump(2);
}

}  // namespace robustpath
