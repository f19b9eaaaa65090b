#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "checks.hpp"
#include "config.hpp"
#include "robustpath/path_io.hpp"
#include "robustpath/portfolio.hpp"
#include "schema.hpp"

namespace robustpath::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  return f;
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::vector<double> omega_grid(const TracedPath& proximal) {
  std::vector<double> g;
  for (const PathPoint& p : proximal.points) g.push_back(p.omega);
  return g;
}

}  // namespace

int cmd_trace(const TraceArgs& args, std::ostream& log) {
  if (args.mode != "proximal" && args.mode != "central" && args.mode != "reference") {
    throw InputError("--mode must be proximal, central or reference, got '" + args.mode + "'");
  }
  const InstanceConfig cfg = load_config(args.config);
  const ProblemInstance& inst = *cfg.instance;

  TracedPath path;
  if (args.mode == "proximal") {
    path = trace_proximal_path(inst, cfg.schedule, cfg.stop, cfg.start);
  } else {
    std::vector<double> grid;
    if (cfg.omegas) {
      grid = *cfg.omegas;
    } else {
      const TracedPath prox = trace_proximal_path(inst, cfg.schedule, cfg.stop, cfg.start);
      if (!prox.complete) throw SolverError("proximal path used for the omega grid failed: " + prox.failure);
      grid = omega_grid(prox);
    }
    if (args.mode == "reference") {
      path = trace_reference_robust_path(inst, grid);
    } else {
      const Vector x0 = cfg.start ? *cfg.start : solve_regularized(inst, kOmegaInfinity).x;
      path = trace_central_path(inst, grid, x0);
    }
  }

  const fs::path csv = args.out;
  fs::path meta = csv;
  meta.replace_extension(".json");
  {
    std::ofstream f = open_output(csv);
    write_path_csv(f, path, inst);
  }
  {
    std::ofstream f = open_output(meta);
    f << path_metadata_json(path, inst) << '\n';
  }

  log << "mode: " << args.mode << "\npoints: " << path.points.size() << '\n';
  if (path.nominal_optimum && !path.points.empty()) {
    log << "final gap to x_E: " << sci(path.points.back().objective_nominal - *path.nominal_optimum) << '\n';
  } else {
    log << "final gap to x_E: n/a (linear problem unbounded or not computed)\n";
  }
  log << "monotone: " << (path.monotone ? (*path.monotone ? "yes" : "no") : "n/a") << '\n';
  log << "wrote " << csv.string() << " and " << meta.string() << '\n';
  if (!path.complete) {
    log << "path incomplete: " << path.failure << '\n';
    return kSolverFailure;
  }
  return kOk;
}

int cmd_verify(const VerifyArgs& args, std::ostream& log) {
  if (args.checks.empty()) throw InputError("--checks needs at least one check");
  for (const std::string& c : args.checks) {
    if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end()) {
      throw InputError("unknown check '" + c + "'");
    }
  }
  InstanceConfig cfg = load_config(args.config);
  if (args.seed) cfg.seed = *args.seed;

  json report;
  report["config"] = args.config;
  report["seed"] = cfg.seed;
  report["checks"] = json::array();
  bool all = true;
  for (const std::string& c : args.checks) {
    const CheckResult r = run_check(c, cfg);
    all = all && r.pass;
    report["checks"].push_back(r.to_json());
    log << (r.pass ? "PASS " : "FAIL ") << r.name << "  observed " << sci(r.observed) << "  bound " << sci(r.bound);
    if (!r.applicable) log << "  (not applicable: " << r.note << ")";
    log << '\n';
  }
  report["pass"] = all;
  if (!args.out.empty()) {
    std::ofstream f = open_output(args.out);
    f << report.dump(2) << '\n';
  }
  return all ? kOk : kVerificationFailure;
}

int cmd_portfolio(const PortfolioArgs& args, std::ostream& log) {
  if (args.out.empty()) throw InputError("--out is required");
  const ReturnsTable table = args.returns == "synthetic" ? synthetic_returns(args.seed) : load_returns(args.returns);
  PortfolioOptions opt;
  opt.region = parse_portfolio_region(args.region);
  const PortfolioRun run = run_portfolio(table, opt);

  const fs::path dir = args.out;
  fs::create_directories(dir);
  const std::pair<const char*, const std::vector<FrontierPoint>*> files[] = {
      {"frontier_proximal.csv", run.frontier_proximal},
      {"frontier_reference.csv", run.frontier_reference},
      {"frontier_two_fund.csv", run.frontier_two_fund},
  };
  for (const auto& [name, fr] : files) {
    std::ofstream f = open_output(dir / name);
    write_frontier_csv(f, fr[0], fr[1]);
  }

  json s;
  s["returns"] = args.returns;
  s["region"] = to_string(opt.region);
  s["assets"] = table.asset_count();
  s["periods"] = table.periods();
  s["dropped_rows"] = table.dropped_rows;
  s["points"] = run.proximal.points.size();
  s["monotone"] = run.proximal.monotone ? json(*run.proximal.monotone) : json(nullptr);
  s["max_nominal_deviation"] = run.max_nominal_deviation;
  s["max_worst_case_deviation"] = run.max_worst_case_deviation;
  s["max_weight_deviation"] = run.max_weight_deviation;
  s["max_two_fund_deviation"] = run.max_two_fund_deviation;
  s["theorem2_bound"] = run.theorem2.theorem2_bound;
  s["anchor_gap"] = run.theorem2.anchor_gap;
  s["observed_central_gap"] = run.observed_central_gap;
  {
    std::ofstream f = open_output(dir / "summary.json");
    f << s.dump(2) << '\n';
  }

  log << "region: " << to_string(opt.region) << "  assets: " << table.asset_count()
      << "  periods: " << table.periods();
  if (table.dropped_rows > 0) log << "  dropped rows: " << table.dropped_rows;
  log << "\npoints: " << run.proximal.points.size()
      << "  monotone: " << (run.proximal.monotone.value_or(false) ? "yes" : "no") << '\n'
      << "max frontier deviation (proximal vs reference): nominal " << sci(run.max_nominal_deviation)
      << ", worst case " << sci(run.max_worst_case_deviation) << '\n'
      << "max weight deviation: " << sci(run.max_weight_deviation)
      << "  two-fund vs reference: " << sci(run.max_two_fund_deviation) << '\n'
      << "anchor-gap bound: " << sci(run.theorem2.theorem2_bound)
      << "  observed central gap: " << sci(run.observed_central_gap) << '\n'
      << "wrote " << dir.string() << '\n';
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust paths from a single proximal-point pass"};
  app.require_subcommand(1);

  TraceArgs ta;
  auto* trace = app.add_subcommand("trace", "Trace a proximal, central or reference path");
  trace->add_option("--config", ta.config, "Instance JSON")->required();
  trace->add_option("--mode", ta.mode, "proximal | central | reference")
      ->check(CLI::IsMember({"proximal", "central", "reference"}));
  trace->add_option("--out", ta.out, "Output CSV; metadata goes next to it as .json")->required();

  VerifyArgs va;
  std::string checks;
  std::uint64_t seed = 0;
  auto* verify = app.add_subcommand("verify", "Check theorem bounds on an instance");
  verify->add_option("--config", va.config, "Instance JSON")->required();
  verify->add_option("--checks", checks, "Comma list of checks")->required();
  verify->add_option("--out", va.out, "JSON report");
  auto* seed_opt = verify->add_option("--seed", seed, "Sampling seed (overrides the config)");

  PortfolioArgs pa;
  auto* portfolio = app.add_subcommand("portfolio", "Run the mean-variance harness");
  portfolio->add_option("--returns", pa.returns, "Returns CSV or 'synthetic'");
  portfolio->add_option("--region", pa.region, "simplex | hyperplane | box");
  portfolio->add_option("--out", pa.out, "Output directory")->required();
  portfolio->add_option("--seed", pa.seed, "Seed for synthetic returns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputFailure;
  }

  try {
    if (*trace) return cmd_trace(ta, out);
    if (*verify) {
      std::stringstream ss(checks);
      for (std::string c; std::getline(ss, c, ',');) {
        if (!c.empty()) va.checks.push_back(c);
      }
      if (*seed_opt) va.seed = seed;
      return cmd_verify(va, out);
    }
    return cmd_portfolio(pa, out);
  } catch (const SchemaError& e) {
    err << "error: schema: " << e.what() << '\n';
    return kInputFailure;
  } catch (const InputError& e) {
    err << "error: input: " << e.what() << '\n';
    return kInputFailure;
  } catch (const InfeasibleError& e) {
    err << "error: infeasible: " << e.what() << '\n';
    return kInputFailure;
  } catch (const UnboundedError& e) {
    err << "error: unbounded: " << e.what() << '\n';
    return kInputFailure;
  } catch (const SolverError& e) {
    err << "error: solver: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: input: " << e.what() << '\n';
    return kInputFailure;
  }
}

}  // namespace robustpath::cli
