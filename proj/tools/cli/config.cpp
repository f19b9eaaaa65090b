#include "config.hpp"

#include <cmath>
#include <fstream>

#include "schema.hpp"

namespace robustpath::cli {

using nlohmann::json;

namespace {

Vector to_vector(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

double to_bound(const json& j) {
  if (j.is_string()) return j.get<std::string>() == "inf" ? kOmegaInfinity : -kOmegaInfinity;
  return j.get<double>();
}

Vector to_bounds(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_bound(j[i]);
  return v;
}

Matrix to_matrix(const json& j, Eigen::Index cols, const std::string& path) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw SchemaError(path + "[" + std::to_string(i) + "]",
                        "row has " + std::to_string(j[i].size()) + " entries, expected " + std::to_string(cols));
    }
    for (std::size_t k = 0; k < j[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k];
  }
  return m;
}

void require_length(const json& j, Eigen::Index n, const std::string& path) {
  if (static_cast<Eigen::Index>(j.size()) != n) {
    throw SchemaError(path, "length " + std::to_string(j.size()) + " does not match the dimension " + std::to_string(n));
  }
}

// Re-raise construction errors with the location that caused them.
template <class F>
auto at(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(path + ": " + e.what());
  } catch (const InputError& e) {
    throw SchemaError(path, e.what());
  }
}

FeasibleRegion parse_region(const json& r, Eigen::Index n) {
  const std::string kind = r["kind"];
  const std::string path = "$.region";
  if (kind == "hyperplane") {
    require_length(r["a"], n, path + ".a");
    return at(path, [&] { return FeasibleRegion::hyperplane(to_vector(r["a"]), r["b"].get<double>()); });
  }
  if (kind == "affine") {
    const Matrix A = to_matrix(r["A"], n, path + ".A");
    require_length(r["b"], A.rows(), path + ".b");
    return at(path, [&] { return FeasibleRegion::affine(A, to_vector(r["b"])); });
  }
  if (kind == "eq_box") {
    const Matrix A = r.contains("A") ? to_matrix(r["A"], n, path + ".A") : Matrix(0, n);
    const json b = r.contains("b") ? r["b"] : json::array();
    require_length(b, A.rows(), path + ".b");
    require_length(r["lb"], n, path + ".lb");
    require_length(r["ub"], n, path + ".ub");
    Vector bv = b.empty() ? Vector(0) : to_vector(b);
    return at(path, [&] { return FeasibleRegion::eq_box(A, bv, to_bounds(r["lb"]), to_bounds(r["ub"])); });
  }
  if (kind == "simplex") {
    const double budget = r.value("budget", 1.0);
    return at(path, [&] { return FeasibleRegion::simplex(n, budget); });
  }
  // norm_ball
  const GaugeSet shape = parse_shape(r["shape"], n, path + ".shape");
  return at(path, [&] { return FeasibleRegion::norm_ball(shape, r["level"].get<double>()); });
}

StepSchedule parse_schedule(const json& s) {
  const std::string kind = s["kind"];
  if (kind == "constant") return StepSchedule::constant(s["lambda"]);
  if (kind == "harmonic") return StepSchedule::harmonic(s["lambda0"]);
  if (kind == "geometric") return StepSchedule::geometric(s["lambda0"], s["ratio"]);
  if (kind == "explicit") return StepSchedule::explicit_steps(s["steps"].get<std::vector<double>>());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  StepSchedule out = StepSchedule::geometric_omega(s.value("points", 200), s.value("omega_max", nan),
                                                   s.value("omega_min", nan));
  at("$.schedule", [&] {
    out.validate();
    return 0;
  });
  return out;
}

}  // namespace

std::vector<double> log_grid(double from, double to, int points) {
  if (points < 2 || !(from > 0.0) || !(to > 0.0)) throw InputError("log_grid: need positive endpoints and >= 2 points");
  std::vector<double> g(points);
  const double a = std::log(from);
  const double b = std::log(to);
  for (int i = 0; i < points; ++i) g[i] = std::exp(a + (b - a) * i / (points - 1));
  return g;
}

GaugeSet parse_shape(const json& j, Eigen::Index n, const std::string& path) {
  const std::string kind = j["kind"];
  if (kind == "lp") return at(path, [&] { return GaugeSet::lp_ball(n, j["p"].get<double>()); });
  const Matrix m = to_matrix(j["matrix"], n, path + ".matrix");
  if (m.rows() != n) throw SchemaError(path + ".matrix", "expected " + std::to_string(n) + " rows");
  if (kind == "ellipsoid") return at(path, [&] { return GaugeSet::ellipsoid(m); });
  return at(path, [&] { return GaugeSet::ellipsoid_from_inverse(m); });
}

InstanceConfig parse_config(const json& doc) {
  validate(doc, instance_schema());
  InstanceConfig cfg;
  cfg.raw = doc;
  const Vector a0 = to_vector(doc["a0"]);
  const Eigen::Index n = a0.size();

  const FeasibleRegion region = parse_region(doc["region"], n);
  const GaugeSet shape = doc.contains("shape") ? parse_shape(doc["shape"], n, "$.shape") : GaugeSet::lp_ball(n, 2.0);
  PostComposition g = PostComposition::half_square();
  if (doc.contains("g") && doc["g"]["kind"] == "power_mean") {
    g = at("$.g", [&] { return PostComposition::power_mean(doc["g"]["s"].get<double>()); });
  }
  cfg.instance = std::make_shared<const ProblemInstance>(a0, region, DistanceGenerator(shape, g));

  if (doc.contains("schedule")) cfg.schedule = parse_schedule(doc["schedule"]);
  if (doc.contains("stop")) {
    cfg.stop.tolerance = doc["stop"].value("tolerance", cfg.stop.tolerance);
    cfg.stop.max_points = doc["stop"].value("max_points", cfg.stop.max_points);
  }
  if (doc.contains("omegas")) {
    const json& o = doc["omegas"];
    std::vector<double> grid;
    if (o.is_array()) {
      for (const auto& w : o) grid.push_back(w.is_string() ? kOmegaInfinity : w.get<double>());
    } else {
      grid = log_grid(o["from"], o["to"], o["points"]);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] < grid[i - 1])) throw SchemaError("$.omegas", "grid must be strictly decreasing");
    }
    cfg.omegas = grid;
  }
  if (doc.contains("start")) {
    require_length(doc["start"], n, "$.start");
    cfg.start = to_vector(doc["start"]);
  }
  cfg.seed = doc.value("seed", std::uint64_t{0});
  return cfg;
}

InstanceConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace robustpath::cli
