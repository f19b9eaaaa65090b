#include "robustpath/portfolio.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "robustpath/parallel.hpp"
#include "robustpath/path_io.hpp"

namespace robustpath {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_cell(const std::string& cell, double& v) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  std::size_t used = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == t.size() && std::isfinite(v);
}

// Uniform on (0, 1) from the top 53 bits; std::*_distribution output is not
// portable across standard libraries.
double uniform01(std::mt19937_64& rng) { return ((rng() >> 11) + 0.5) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

ReturnsTable parse_returns(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw InputError(source + ": empty returns file");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2) throw InputError(source + ": header needs a date column and at least one asset");
  ReturnsTable t;
  for (std::size_t j = 1; j < header.size(); ++j) t.assets.push_back(trim(header[j]));
  const std::size_t n = t.assets.size();

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != n + 1) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(n + 1) +
                       " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(n);
    bool ok = true;
    for (std::size_t j = 0; j < n && ok; ++j) ok = parse_cell(cells[j + 1], row[j]);
    if (!ok) {
      ++t.dropped_rows;
      continue;
    }
    t.dates.push_back(trim(cells[0]));
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw InputError(source + ": fewer than 2 usable rows");
  t.returns.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) t.returns(i, j) = rows[i][j];
  return t;
}

ReturnsTable load_returns(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open returns file: " + path);
  return parse_returns(f, path);
}

ReturnsTable synthetic_returns(std::uint64_t seed, int assets, int periods) {
  if (assets < 1 || periods < 2) throw InputError("synthetic_returns: need at least 1 asset and 2 periods");
  constexpr int kFactors = 3;
  std::mt19937_64 rng(seed);
  Vector alpha(assets);
  Vector idio(assets);
  Matrix beta(assets, kFactors);
  for (int i = 0; i < assets; ++i) {
    alpha[i] = 2e-4 + 1e-3 * uniform01(rng);
    idio[i] = 0.01 + 0.01 * uniform01(rng);
    beta(i, 0) = 0.8 + 0.4 * uniform01(rng);
    for (int f = 1; f < kFactors; ++f) beta(i, f) = 0.4 * (uniform01(rng) - 0.5);
  }
  const double factor_vol[kFactors] = {0.01, 0.006, 0.004};
  ReturnsTable t;
  for (int i = 0; i < assets; ++i) t.assets.push_back("A" + std::to_string(i + 1));
  t.returns.resize(periods, assets);
  for (int s = 0; s < periods; ++s) {
    t.dates.push_back("t" + std::to_string(s + 1));
    double f[kFactors];
    for (int k = 0; k < kFactors; ++k) f[k] = factor_vol[k] * standard_normal(rng);
    for (int i = 0; i < assets; ++i) {
      double r = alpha[i] + idio[i] * standard_normal(rng);
      for (int k = 0; k < kFactors; ++k) r += beta(i, k) * f[k];
      t.returns(s, i) = r;
    }
  }
  return t;
}

std::pair<ReturnsTable, ReturnsTable> split_chronological(const ReturnsTable& table, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("split fraction must lie in (0, 1)");
  const Eigen::Index T = table.periods();
  const Eigen::Index cut = static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(T)));
  if (cut < 2 || T - cut < 2) throw InputError("split leaves fewer than 2 rows on one side");
  ReturnsTable a;
  ReturnsTable b;
  a.assets = b.assets = table.assets;
  a.dates.assign(table.dates.begin(), table.dates.begin() + cut);
  b.dates.assign(table.dates.begin() + cut, table.dates.end());
  a.returns = table.returns.topRows(cut);
  b.returns = table.returns.bottomRows(T - cut);
  return {a, b};
}

Moments estimate_moments(const ReturnsTable& table, std::optional<double> epsilon) {
  const Eigen::Index T = table.periods();
  const Eigen::Index n = table.asset_count();
  if (T < 2) throw InputError("estimate_moments: need at least 2 periods");
  if (!table.returns.allFinite()) throw InputError("estimate_moments: non-finite returns");
  if (epsilon && !(*epsilon >= 0.0)) throw InputError("estimate_moments: epsilon must be >= 0");
  Moments m;
  m.mu = table.returns.colwise().mean().transpose();
  const Matrix centered = table.returns.rowwise() - m.mu.transpose();
  m.sigma = centered.transpose() * centered / static_cast<double>(T - 1);
  m.sigma = 0.5 * (m.sigma + m.sigma.transpose());
  m.epsilon = epsilon ? *epsilon : 1e-8 * m.sigma.trace() / static_cast<double>(n);
  m.sigma.diagonal().array() += m.epsilon;
  return m;
}

ProblemInstance build_portfolio_instance(const Moments& m, const FeasibleRegion& region) {
  const Eigen::Index n = m.mu.size();
  if (m.sigma.rows() != n || m.sigma.cols() != n) throw InputError("portfolio: mu and Sigma sizes differ");
  if (region.dimension() != n) throw InputError("portfolio: region dimension does not match the asset count");
  Eigen::LLT<Matrix> llt(m.sigma);
  if (llt.info() != Eigen::Success) throw InputError("portfolio: covariance is not positive definite");
  const GaugeSet V = GaugeSet::ellipsoid_from_inverse(m.sigma);
  return ProblemInstance(-m.mu, region, DistanceGenerator(V, PostComposition::half_square()));
}

const char* to_string(SampleTag tag) { return tag == SampleTag::InSample ? "in_sample" : "out_of_sample"; }

std::vector<FrontierPoint> evaluate_frontier(const TracedPath& path, const Moments& eval, SampleTag tag) {
  const Eigen::Index n = eval.mu.size();
  std::vector<FrontierPoint> out(path.points.size());
  parallel_for(path.points.size(), [&](std::size_t k) {
    const PathPoint& p = path.points[k];
    require_dimension(p.x, n, "evaluate_frontier");
    FrontierPoint& f = out[k];
    f.k = static_cast<int>(k);
    f.x = p.x;
    f.omega = p.omega;
    f.r = p.r;
    f.tag = tag;
    f.nominal_return = eval.mu.dot(p.x);
    f.risk = std::sqrt(std::max(0.0, p.x.dot(eval.sigma * p.x)));
    // Worst case of <alpha, x> over alpha in mu + {xi : ||Sigma^{-1/2} xi|| <= r}.
    f.worst_case_return = f.r == 0.0 ? f.nominal_return : f.nominal_return - f.r * f.risk;
    if (std::isinf(f.r) && f.risk == 0.0) f.worst_case_return = f.nominal_return;
  });
  return out;
}

TracedPath two_fund_path(const TracedPath& path, const Vector& x_r, const Vector& x_e, const Moments& build) {
  TracedPath tf;
  tf.kind = PathKind::ReferenceRobust;
  tf.fingerprint = path.fingerprint;
  tf.anchor = x_r;
  const double ret_r = build.mu.dot(x_r);
  const double ret_e = build.mu.dot(x_e);
  for (const PathPoint& p : path.points) {
    const double target = build.mu.dot(p.x);
    double theta = 1.0;
    if (std::abs(ret_e - ret_r) > 1e-300) theta = std::clamp((ret_e - target) / (ret_e - ret_r), 0.0, 1.0);
    PathPoint q;
    q.x = theta * x_r + (1.0 - theta) * x_e;
    q.omega = p.omega;
    q.r = p.r;
    q.objective_nominal = -build.mu.dot(q.x);
    tf.points.push_back(std::move(q));
  }
  return tf;
}

const char* to_string(PortfolioRegion kind) {
  switch (kind) {
    case PortfolioRegion::Simplex:
      return "simplex";
    case PortfolioRegion::Hyperplane:
      return "hyperplane";
    case PortfolioRegion::Box:
      return "box";
  }
  return "unknown";
}

PortfolioRegion parse_portfolio_region(const std::string& name) {
  if (name == "simplex") return PortfolioRegion::Simplex;
  if (name == "hyperplane") return PortfolioRegion::Hyperplane;
  if (name == "box") return PortfolioRegion::Box;
  throw InputError("unknown portfolio region '" + name + "' (expected simplex, hyperplane or box)");
}

FeasibleRegion portfolio_region(PortfolioRegion kind, Eigen::Index n, double box_upper) {
  switch (kind) {
    case PortfolioRegion::Simplex:
      return FeasibleRegion::simplex(n, 1.0);
    case PortfolioRegion::Hyperplane:
      return FeasibleRegion::hyperplane(Vector::Ones(n), 1.0);
    case PortfolioRegion::Box: {
      if (!(box_upper * static_cast<double>(n) >= 1.0)) throw InputError("box upper bound too small for budget 1");
      return FeasibleRegion::eq_box(Vector::Ones(n).transpose(), Vector::Ones(1), Vector::Zero(n),
                                    Vector::Constant(n, box_upper));
    }
  }
  throw InputError("unknown portfolio region");
}

PortfolioRun run_portfolio(const ReturnsTable& table, const PortfolioOptions& options) {
  PortfolioRun run;
  auto [in, out] = split_chronological(table, options.split);
  run.in_sample = estimate_moments(in, options.epsilon);
  run.out_of_sample = estimate_moments(out, options.epsilon);
  const FeasibleRegion region = portfolio_region(options.region, table.asset_count(), options.box_upper);
  const ProblemInstance inst = build_portfolio_instance(run.in_sample, region);

  run.proximal = trace_proximal_path(inst, options.schedule, options.stop);
  if (!run.proximal.complete) throw SolverError("portfolio: proximal path failed: " + run.proximal.failure);
  std::vector<double> omegas;
  for (const PathPoint& p : run.proximal.points) omegas.push_back(p.omega);
  run.reference = trace_reference_robust_path(inst, omegas);
  if (!run.reference.complete) throw SolverError("portfolio: reference path failed: " + run.reference.failure);
  // Without a bounded nominal problem there is no max-return portfolio; the
  // far end of the traced range serves as the second fund.
  Vector x_e;
  try {
    x_e = solve_linear(inst).x;
  } catch (const UnboundedError&) {
    x_e = run.reference.points.back().x;
  }
  run.two_fund = two_fund_path(run.proximal, run.proximal.anchor, x_e, run.in_sample);

  const Moments* ms[2] = {&run.in_sample, &run.out_of_sample};
  const SampleTag tags[2] = {SampleTag::InSample, SampleTag::OutOfSample};
  for (int s = 0; s < 2; ++s) {
    run.frontier_proximal[s] = evaluate_frontier(run.proximal, *ms[s], tags[s]);
    run.frontier_reference[s] = evaluate_frontier(run.reference, *ms[s], tags[s]);
    run.frontier_two_fund[s] = evaluate_frontier(run.two_fund, *ms[s], tags[s]);
  }

  auto gap = [](double a, double b) {
    if (a == b) return 0.0;  // also covers matching infinities
    return std::abs(a - b);
  };
  const auto& fp = run.frontier_proximal[0];
  const auto& fr = run.frontier_reference[0];
  for (std::size_t k = 0; k < fp.size(); ++k) {
    run.max_nominal_deviation = std::max(run.max_nominal_deviation, gap(fp[k].nominal_return, fr[k].nominal_return));
    run.max_worst_case_deviation =
        std::max(run.max_worst_case_deviation, gap(fp[k].worst_case_return, fr[k].worst_case_return));
    run.max_weight_deviation =
        std::max(run.max_weight_deviation, (run.proximal.points[k].x - run.reference.points[k].x).cwiseAbs().maxCoeff());
    run.max_two_fund_deviation =
        std::max(run.max_two_fund_deviation, (run.two_fund.points[k].x - run.reference.points[k].x).cwiseAbs().maxCoeff());
  }

  run.theorem2 = theorem2_bound(inst);
  const TracedPath central = trace_central_path(inst, omegas, run.proximal.anchor);
  if (!central.complete) throw SolverError("portfolio: central path failed: " + central.failure);
  const DistanceGenerator& phi = inst.phi();
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const Vector& a = central.points[k].x;
    const Vector& b = run.reference.points[k].x;
    run.observed_central_gap =
        std::max({run.observed_central_gap, bregman_divergence(phi, a, b), bregman_divergence(phi, b, a)});
  }
  return run;
}

void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint>& in_sample,
                        const std::vector<FrontierPoint>& out_of_sample) {
  out << "k,omega,r,nominal,worst_case,sample_tag,weights_json\n";
  for (const auto* rows : {&in_sample, &out_of_sample}) {
    for (const FrontierPoint& f : *rows) {
      out << f.k << ',' << format_double(f.omega) << ',' << format_double(f.r) << ','
          << format_double(f.nominal_return) << ',' << format_double(f.worst_case_return) << ',' << to_string(f.tag)
          << ",\"[";
      for (Eigen::Index i = 0; i < f.x.size(); ++i) out << (i ? "," : "") << format_double(f.x[i]);
      out << "]\"\n";
    }
  }
}

}  // namespace robustpath
