#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "drm/model.hpp"

namespace drm {

struct RunConfig {
  double gamma = 0.1;
  double tol = 1e-6;
  std::size_t max_iter = 50000;
  bool record_trace = true;
};

/// Raised when an iterate becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::size_t iteration);
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

struct Iterate {
  std::size_t k = 0;
  Allocation allocation;
  PriceSchedule prices;  // computed from `allocation`
  double welfare = 0.0;
  double max_change = 0.0;  // vs the previous iterate; 0 for k == 0
};

using IterationTrace = std::vector<Iterate>;

struct EquilibriumReport {
  bool converged = false;
  std::size_t iterations = 0;
  Allocation allocation;
  PriceSchedule prices;
  double welfare = 0.0;
  double worst_kkt = 0.0;
};

struct MarketRun {
  EquilibriumReport report;
  IterationTrace trace;
};

/// Sum over slots of total utility minus production cost.
double social_welfare(const Allocation& alloc, const Scenario& scenario);

/// Feasible deterministic starting point: d_min spread evenly over the day.
Allocation initial_allocation(const Scenario& scenario);

/// True iff the allocation and both price vectors moved by less than tol
/// between the last two iterates.
bool detect_convergence(const Iterate& previous, const Iterate& current,
                        double tol);

/// Runs the distributed price/demand iteration. Each round the company prices
/// both blocks of every slot from aggregate demand, then every customer takes
/// a gradient step on its block split and projects onto its own constraints.
/// Throws DivergenceError on non-finite iterates.
MarketRun run_market(const Scenario& scenario, const RunConfig& config);

/// Worst KKT residual over customers, multipliers from the active-set estimate.
double worst_kkt_residual(const Allocation& alloc, const PriceSchedule& prices,
                          const Scenario& scenario);

/// Trace CSV: a '#' comment line, the header
/// iter,slot,customer,x,y,z,p_l,p_u,welfare,max_change and one row per
/// (iter, slot, customer).
void write_trace_csv(std::ostream& out, const IterationTrace& trace);

/// Shortest decimal representation that round-trips.
std::string format_number(double v);

}  // namespace drm
