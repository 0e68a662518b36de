#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "drm/market.hpp"
#include "drm/model.hpp"

namespace drm {

enum class OracleMethod { CentralizedGradient, Grid };

std::string to_string(OracleMethod m);

struct OracleSolution {
  Allocation allocation;
  double welfare = 0.0;
  OracleMethod method = OracleMethod::CentralizedGradient;
  bool converged = true;
  // Some slot ends at (or chatters around) the cost-segment boundary D = bN.
  bool boundary_degenerate = false;
  double residual = 0.0;  // projected-gradient stationarity, per unit step
  std::size_t iterations = 0;
};

struct CentralizedOptions {
  double tol = 1e-9;
  std::size_t max_iter = 2'000'000;
  double step = 0.0;  // 0 picks 1/L from the scenario's curvature bound
  std::optional<Allocation> initial;
};

class GridTooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Projected-gradient ascent on total welfare over every (customer, slot),
/// reusing the per-customer daily projection. The cost gradient is taken
/// segment by segment, left segment at exactly D = bN.
///
/// Never throws on slow convergence: `converged` is false when the
/// stationarity residual is still above tol after max_iter steps. Throws
/// DivergenceError on non-finite iterates.
OracleSolution solve_welfare_centralized(const Scenario& scenario,
                                         const CentralizedOptions& options = {});

inline constexpr double kMaxGridPoints = 1e8;

/// Exhaustive argmax of social welfare over a lattice of spacing grid_step,
/// each consumption in [0, w/alpha] (and inside [d_min, d_max] for one-slot
/// horizons). Only N*T <= 3 is supported. Ties go to the lexicographically
/// smallest allocation.
OracleSolution brute_force_welfare(const Scenario& scenario, double grid_step);

/// Number of lattice points brute_force_welfare would visit.
double grid_size(const Scenario& scenario, double grid_step);

struct ComparisonTolerance {
  double allocation = 1e-3;
  double welfare = 1e-4;
};

struct ComparisonReport {
  double allocation_gap = 0.0;
  double welfare_gap = 0.0;
  bool pass = false;
  bool boundary_degenerate = false;
};

ComparisonReport compare_equilibrium(const EquilibriumReport& distributed,
                                     const OracleSolution& oracle,
                                     const ComparisonTolerance& tol = {});

nlohmann::json to_json(const ComparisonReport& report);

/// Largest distance between a customer's allocation and its best response
/// to the block prices that allocation induces. Zero means the allocation is
/// a competitive equilibrium.
double market_support_gap(const Allocation& alloc, const Scenario& scenario);

}  // namespace drm
