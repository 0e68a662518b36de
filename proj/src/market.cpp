#include "drm/market.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "drm/agent.hpp"
#include "drm/pricing.hpp"

namespace drm {

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) d = std::max(d, std::abs(a[t] - b[t]));
  return d;
}

bool finite(const RawStep& raw) {
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
  };
  return ok(raw.y) && ok(raw.z);
}

}  // namespace

DivergenceError::DivergenceError(std::size_t iteration)
    : std::runtime_error("market iteration diverged at iteration " +
                         std::to_string(iteration)),
      iteration_(iteration) {}

double social_welfare(const Allocation& alloc, const Scenario& scenario) {
  double total = 0.0;
  for (std::size_t t = 0; t < scenario.num_slots; ++t) {
    double demand = 0.0;
    for (std::size_t i = 0; i < alloc.num_customers(); ++i) {
      const auto& c = scenario.customers[i];
      const double x = alloc.profiles[i].x[t];
      total += utility_value(x, c.w[t], c.alpha);
      demand += x;
    }
    total -= cost_value(demand, scenario.segment_boundary(t),
                        scenario.cost.beta1[t], scenario.cost.beta2[t]);
  }
  return total;
}

Allocation initial_allocation(const Scenario& scenario) {
  Allocation alloc;
  const double T = static_cast<double>(scenario.num_slots);
  for (const auto& c : scenario.customers) {
    alloc.profiles.push_back(
        make_profile(std::vector<double>(scenario.num_slots, c.d_min / T), scenario.blocks));
  }
  return alloc;
}

bool detect_convergence(const Iterate& previous, const Iterate& current, double tol) {
  return Allocation::max_gap(previous.allocation, current.allocation) < tol &&
         max_abs_diff(previous.prices.p_l, current.prices.p_l) < tol &&
         max_abs_diff(previous.prices.p_u, current.prices.p_u) < tol;
}

double worst_kkt_residual(const Allocation& alloc, const PriceSchedule& prices,
                          const Scenario& scenario) {
  double worst = 0.0;
  for (std::size_t i = 0; i < alloc.num_customers(); ++i) {
    const auto& c = scenario.customers[i];
    const auto& p = alloc.profiles[i];
    const auto mult = recover_multipliers(p, prices, c, scenario.blocks);
    worst = std::max(worst, kkt_residual(p, prices, mult, c, scenario.blocks).worst());
  }
  return worst;
}

MarketRun run_market(const Scenario& scenario, const RunConfig& config) {
  if (!(config.gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(config.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (config.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");

  MarketRun run;
  Iterate previous;
  previous.allocation = initial_allocation(scenario);
  previous.prices = price_schedule(previous.allocation, scenario);
  previous.welfare = social_welfare(previous.allocation, scenario);
  if (config.record_trace) run.trace.push_back(previous);

  bool converged = false;
  std::size_t k = 0;
  while (k < config.max_iter && !converged) {
    ++k;
    Iterate current;
    current.k = k;
    current.allocation.profiles.reserve(scenario.num_customers());
    for (std::size_t i = 0; i < scenario.num_customers(); ++i) {
      const auto& c = scenario.customers[i];
      const auto raw = gradient_step(previous.allocation.profiles[i], c,
                                     previous.prices, config.gamma, scenario.blocks);
      if (!finite(raw)) throw DivergenceError(k);
      current.allocation.profiles.push_back(project_split(raw, c, scenario.blocks));
    }
    current.prices = price_schedule(current.allocation, scenario);
    current.welfare = social_welfare(current.allocation, scenario);
    if (!std::isfinite(current.welfare)) throw DivergenceError(k);
    current.max_change = Allocation::max_gap(previous.allocation, current.allocation);

    converged = detect_convergence(previous, current, config.tol);
    if (config.record_trace) run.trace.push_back(current);
    previous = std::move(current);
  }

  auto& r = run.report;
  r.converged = converged;
  r.iterations = k;
  r.allocation = previous.allocation;
  r.prices = previous.prices;
  r.welfare = previous.welfare;
  r.worst_kkt = worst_kkt_residual(r.allocation, r.prices, scenario);
  return run;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  out << "# one row per (iter, slot, customer); p_l and p_u are slot prices, "
         "welfare and max_change are iteration totals repeated on every row\n";
  out << "iter,slot,customer,x,y,z,p_l,p_u,welfare,max_change\n";
  for (const auto& it : trace) {
    const std::string welfare = format_number(it.welfare);
    const std::string change = format_number(it.max_change);
    for (std::size_t t = 0; t < it.allocation.num_slots(); ++t) {
      const std::string p_l = format_number(it.prices.p_l[t]);
      const std::string p_u = format_number(it.prices.p_u[t]);
      for (std::size_t i = 0; i < it.allocation.num_customers(); ++i) {
        const auto& p = it.allocation.profiles[i];
        out << it.k << ',' << t << ',' << i << ',' << format_number(p.x[t]) << ','
            << format_number(p.y[t]) << ',' << format_number(p.z[t]) << ',' << p_l
            << ',' << p_u << ',' << welfare << ',' << change << '\n';
      }
    }
  }
}

}  // namespace drm
