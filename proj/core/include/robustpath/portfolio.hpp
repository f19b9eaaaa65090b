#pragma once

// Mean-variance harness: returns data, moment estimates, the robust
// portfolio instance, and frontiers along traced paths.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robustpath/path_engine.hpp"

namespace robustpath {

struct ReturnsTable {
  std::vector<std::string> assets;
  std::vector<std::string> dates;
  Matrix returns;  // T x n simple returns
  /// Rows dropped at load time because a cell was missing.
  int dropped_rows = 0;

  Eigen::Index periods() const { return returns.rows(); }
  Eigen::Index asset_count() const { return returns.cols(); }
};

/// CSV with header `date,asset1,...`; rows with an empty or non-numeric
/// cell are dropped and counted.
ReturnsTable load_returns(const std::string& path);
ReturnsTable parse_returns(std::istream& in, const std::string& source = "<stream>");

/// Deterministic factor-model returns (3 factors) for tests and demos.
ReturnsTable synthetic_returns(std::uint64_t seed, int assets = 10, int periods = 500);

/// First `fraction` of the rows in, the rest out.
std::pair<ReturnsTable, ReturnsTable> split_chronological(const ReturnsTable& table, double fraction = 0.8);

struct Moments {
  Vector mu;
  Matrix sigma;
  double epsilon = 0.0;
};

/// Column means and the unbiased sample covariance plus epsilon * I.
/// The default epsilon is 1e-8 * trace(S) / n.
Moments estimate_moments(const ReturnsTable& table, std::optional<double> epsilon = std::nullopt);

/// a0 = -mu, V = ellipsoid with ||x||_{V°} = sqrt(x' Sigma x), phi = x' Sigma x / 2.
ProblemInstance build_portfolio_instance(const Moments& m, const FeasibleRegion& region);

enum class SampleTag { InSample, OutOfSample };
const char* to_string(SampleTag tag);

struct FrontierPoint {
  int k = 0;
  Vector x;
  double omega = kOmegaInfinity;
  double r = kOmegaInfinity;
  double nominal_return = 0.0;
  double risk = 0.0;  // sqrt(x' Sigma x) under the evaluation moments
  double worst_case_return = 0.0;
  SampleTag tag = SampleTag::InSample;
};

/// Nominal and worst-case returns of every path point under `eval`, which may
/// differ from the moments the path was built with.
std::vector<FrontierPoint> evaluate_frontier(const TracedPath& path, const Moments& eval,
                                             SampleTag tag = SampleTag::InSample);

/// Convex combinations theta x_R + (1 - theta) x_E whose nominal returns
/// (under `build`) match the given path points. Radii are copied from the path.
TracedPath two_fund_path(const TracedPath& path, const Vector& x_r, const Vector& x_e, const Moments& build);

enum class PortfolioRegion { Simplex, Hyperplane, Box };
const char* to_string(PortfolioRegion kind);
PortfolioRegion parse_portfolio_region(const std::string& name);

/// Budget 1; Box adds 0 <= x_i <= box_upper.
FeasibleRegion portfolio_region(PortfolioRegion kind, Eigen::Index n, double box_upper = 0.25);

struct PortfolioOptions {
  PortfolioRegion region = PortfolioRegion::Simplex;
  double split = 0.8;
  double box_upper = 0.25;
  std::optional<double> epsilon;
  StepSchedule schedule;
  StopRule stop;
};

struct PortfolioRun {
  Moments in_sample;
  Moments out_of_sample;
  TracedPath proximal;
  TracedPath reference;
  TracedPath two_fund;
  std::vector<FrontierPoint> frontier_proximal[2];
  std::vector<FrontierPoint> frontier_reference[2];
  std::vector<FrontierPoint> frontier_two_fund[2];
  /// Max per-point |nominal| and |worst case| gaps, proximal vs reference (in sample).
  double max_nominal_deviation = 0.0;
  double max_worst_case_deviation = 0.0;
  /// Max weight gap (inf-norm) of proximal and Two-Fund points against the reference.
  double max_weight_deviation = 0.0;
  double max_two_fund_deviation = 0.0;
  /// max over the proximal omegas of D(x_CP(omega), x_R'(omega)) against the anchor-gap bound.
  BoundReport theorem2;
  double observed_central_gap = 0.0;
};

PortfolioRun run_portfolio(const ReturnsTable& table, const PortfolioOptions& options);

void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint>& in_sample,
                        const std::vector<FrontierPoint>& out_of_sample);

}  // namespace robustpath
