#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drm/demo.hpp"
#include "drm/market.hpp"
#include "drm/model.hpp"
#include "drm/oracle.hpp"

namespace drm::cli {

namespace {

namespace fs = std::filesystem;

struct RunOptions {
  std::string scenario;
  std::string out_dir;
  double gamma = 0.1;
  double tol = 1e-6;
  std::size_t max_iter = 50000;
};

struct SweepOptions {
  std::string scenario;
  std::string out_dir;
  std::vector<double> gammas;
  double tol = 1e-6;
  std::size_t max_iter = 50000;
};

struct VerifyOptions {
  std::string scenario;
  std::string out_dir;
  double grid_step = 0.0;
  double gamma = 0.0;  // 0 derives a stable step from the scenario
  double tol = 1e-10;
  std::size_t max_iter = 1'000'000;
  double perturb = 0.0;
};

// Writes through a sibling temporary so a failed run never leaves a
// truncated file behind.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string trace_csv(const IterationTrace& trace) {
  std::ostringstream s;
  write_trace_csv(s, trace);
  return s.str();
}

nlohmann::json summary_json(const EquilibriumReport& r) {
  nlohmann::json prices = nlohmann::json::array();
  for (std::size_t t = 0; t < r.prices.num_slots(); ++t) {
    prices.push_back({{"slot", t}, {"p_l", r.prices.p_l[t]}, {"p_u", r.prices.p_u[t]}});
  }
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"welfare", r.welfare},
          {"worst_kkt_residual", r.worst_kkt},
          {"prices", prices}};
}

// Step size that keeps the joint block-split iteration contracting: half the
// inverse of the largest curvature a customer step can see.
double stable_gamma(const Scenario& sc) {
  double alpha = 0.0;
  for (const auto& c : sc.customers) alpha = std::max(alpha, c.alpha);
  double beta = 0.0;
  for (std::size_t t = 0; t < sc.num_slots; ++t) {
    beta = std::max({beta, sc.cost.beta1[t], sc.cost.beta2[t]});
  }
  return 0.5 / (alpha + 2.0 * beta * static_cast<double>(sc.num_customers()));
}

bool load(const std::string& path, Scenario& sc, std::ostream& err) {
  try {
    sc = load_scenario(path);
    return true;
  } catch (const ScenarioError& e) {
    err << e.what() << '\n';
    return false;
  }
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario sc;
  if (!load(opt.scenario, sc, err)) return kBadInput;

  RunConfig cfg{opt.gamma, opt.tol, opt.max_iter, true};
  MarketRun run;
  try {
    run = run_market(sc, cfg);
  } catch (const DivergenceError& e) {
    err << e.what() << "; no output written\n";
    return kNotConverged;
  }

  const fs::path dir(opt.out_dir);
  write_atomic(dir / "trace.csv", trace_csv(run.trace));
  write_atomic(dir / "summary.json", summary_json(run.report).dump(2) + "\n");

  out << "iterations " << run.report.iterations << ", converged "
      << (run.report.converged ? "yes" : "no") << ", welfare "
      << format_number(run.report.welfare) << '\n';
  return run.report.converged ? kOk : kNotConverged;
}

struct SweepRow {
  double gamma;
  std::size_t iterations;
  bool converged;
  double welfare;
};

std::vector<SweepRow> sweep_rows(const Scenario& sc, const SweepOptions& opt,
                                 std::ostream& err) {
  std::vector<SweepRow> rows;
  const fs::path dir(opt.out_dir);
  for (double gamma : opt.gammas) {
    RunConfig cfg{gamma, opt.tol, opt.max_iter, true};
    try {
      const auto run = run_market(sc, cfg);
      rows.push_back({gamma, run.report.iterations, run.report.converged, run.report.welfare});
      if (!opt.out_dir.empty()) {
        write_atomic(dir / ("trace_gamma_" + format_number(gamma) + ".csv"),
                     trace_csv(run.trace));
      }
    } catch (const DivergenceError& e) {
      err << "gamma " << format_number(gamma) << ": " << e.what() << '\n';
      rows.push_back({gamma, e.iteration(), false, std::nan("")});
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream s;
  s << "gamma,iterations,converged,welfare\n";
  for (const auto& r : rows) {
    s << format_number(r.gamma) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
      << ',' << format_number(r.welfare) << '\n';
  }
  return s.str();
}

int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.gammas.empty()) {
    err << "sweep: at least one gamma is required\n";
    return kBadInput;
  }
  if (std::any_of(opt.gammas.begin(), opt.gammas.end(), [](double g) { return !(g > 0.0); })) {
    err << "sweep: every gamma must be positive\n";
    return kBadInput;
  }
  Scenario sc;
  if (!load(opt.scenario, sc, err)) return kBadInput;

  const auto rows = sweep_rows(sc, opt, err);
  const std::string csv = sweep_csv(rows);
  write_atomic(fs::path(opt.out_dir) / "sweep.csv", csv);
  out << csv;
  return kOk;
}

struct Verification {
  nlohmann::json report;
  int exit_code = kOk;
};

Verification verify(const Scenario& sc, const VerifyOptions& opt, std::ostream& err) {
  Verification v;
  RunConfig cfg{opt.gamma > 0.0 ? opt.gamma : stable_gamma(sc), opt.tol, opt.max_iter,
                false};
  EquilibriumReport distributed;
  try {
    distributed = run_market(sc, cfg).report;
  } catch (const DivergenceError& e) {
    err << e.what() << '\n';
    v.report = {{"pass", false}, {"error", e.what()}};
    v.exit_code = kNotConverged;
    return v;
  }
  if (opt.perturb != 0.0) {
    for (auto& p : distributed.allocation.profiles) {
      std::vector<double> x = p.x;
      for (auto& e : x) e = std::max(0.0, e + opt.perturb);
      p = make_profile(std::move(x), sc.blocks);
    }
    distributed.welfare = social_welfare(distributed.allocation, sc);
  }

  const auto central = solve_welfare_centralized(sc);
  const auto cmp = compare_equilibrium(distributed, central);

  v.report = to_json(cmp);
  v.report["distributed"] = {{"gamma", cfg.gamma},
                             {"iterations", distributed.iterations},
                             {"converged", distributed.converged},
                             {"welfare", distributed.welfare},
                             {"worst_kkt_residual", distributed.worst_kkt}};
  v.report["centralized"] = {{"iterations", central.iterations},
                             {"converged", central.converged},
                             {"residual", central.residual},
                             {"welfare", central.welfare}};
  bool pass = cmp.pass && distributed.converged;

  if (opt.grid_step > 0.0) {
    const std::size_t cells = sc.num_customers() * sc.num_slots;
    std::string skipped;
    if (cells > 3) {
      skipped = "N*T = " + std::to_string(cells) + " exceeds 3";
    } else if (grid_size(sc, opt.grid_step) > kMaxGridPoints) {
      skipped = "grid exceeds 1e8 points";
    }
    if (skipped.empty()) {
      const auto grid = brute_force_welfare(sc, opt.grid_step);
      const double gap = Allocation::max_gap(central.allocation, grid.allocation);
      const bool grid_pass = gap <= 2.0 * opt.grid_step;
      v.report["grid"] = {{"grid_step", opt.grid_step},
                          {"allocation_gap", gap},
                          {"welfare", grid.welfare},
                          {"pass", grid_pass}};
      pass = pass && grid_pass;
    } else {
      err << "notice: grid oracle skipped (" << skipped << ")\n";
      v.report["grid"] = nullptr;
      v.report["grid_skipped"] = skipped;
    }
  }
  v.report["pass"] = pass;

  if (!central.converged) {
    v.exit_code = kOracleNotConverged;
  } else {
    v.exit_code = pass ? kOk : kVerifyFailed;
  }
  return v;
}

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario sc;
  if (!load(opt.scenario, sc, err)) return kBadInput;
  const auto v = verify(sc, opt, err);
  const std::string doc = v.report.dump(2) + "\n";
  write_atomic(fs::path(opt.out_dir) / "verify.json", doc);
  out << doc;
  return v.exit_code;
}

int cmd_demo(const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const Scenario sc = demo_scenario();
  SweepOptions sweep;
  sweep.out_dir = out_dir;
  sweep.gammas = {0.01, 0.1, 0.3};
  const auto rows = sweep_rows(sc, sweep, err);
  const std::string csv = sweep_csv(rows);
  out << "step-size sweep on the built-in two-customer scenario\n" << csv;

  VerifyOptions vopt;
  const auto v = verify(sc, vopt, err);
  out << "equilibrium check\n" << v.report.dump(2) << '\n';
  if (!out_dir.empty()) {
    write_atomic(fs::path(out_dir) / "sweep.csv", csv);
    write_atomic(fs::path(out_dir) / "verify.json", v.report.dump(2) + "\n");
  }
  return v.exit_code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Demand-response market simulator under two-block rate pricing",
               "drmarket"};
  app.require_subcommand(1, 1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run the distributed market to equilibrium");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON file")->required();
  run_cmd->add_option("--gamma", run.gamma, "Customer step size")->check(CLI::PositiveNumber);
  run_cmd->add_option("--tol", run.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-iter", run.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out_dir, "Output directory")->required();

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Compare convergence across step sizes");
  sweep_cmd->add_option("--scenario", sweep.scenario, "Scenario JSON file")->required();
  sweep_cmd->add_option("--gammas", sweep.gammas, "Comma-separated step sizes")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--tol", sweep.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--max-iter", sweep.max_iter, "Iteration cap")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")->required();

  VerifyOptions verify_opt;
  auto* verify_cmd =
      app.add_subcommand("verify", "Check the market equilibrium against welfare oracles");
  verify_cmd->add_option("--scenario", verify_opt.scenario, "Scenario JSON file")->required();
  verify_cmd->add_option("--grid-step", verify_opt.grid_step,
                         "Also run the brute-force grid oracle at this resolution")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--gamma", verify_opt.gamma, "Customer step size")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--tol", verify_opt.tol, "Market convergence tolerance")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--max-iter", verify_opt.max_iter, "Market iteration cap")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--perturb", verify_opt.perturb,
                         "Shift every market consumption by this amount before comparing");
  verify_cmd->add_option("--out", verify_opt.out_dir, "Output directory")->required();

  std::string demo_out;
  auto* demo_cmd = app.add_subcommand("demo", "Sweep and verify the built-in scenario");
  demo_cmd->add_option("--out", demo_out, "Optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*run_cmd) return cmd_run(run, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep, out, err);
    if (*verify_cmd) return cmd_verify(verify_opt, out, err);
    return cmd_demo(demo_out, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
}

}  // namespace drm::cli
