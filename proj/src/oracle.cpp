#include "drm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drm/agent.hpp"
#include "drm/pricing.hpp"

namespace drm {

namespace {

constexpr double kBoundaryBand = 1e-6;
constexpr std::size_t kChatterWindow = 100;

double cost_gradient(double demand, double bN, double beta1, double beta2) {
  return 2.0 * (demand <= bN ? beta1 : beta2) * demand;
}

double curvature_bound(const Scenario& sc) {
  double alpha = 0.0;
  for (const auto& c : sc.customers) alpha = std::max(alpha, c.alpha);
  double beta = 0.0;
  for (std::size_t t = 0; t < sc.num_slots; ++t) {
    beta = std::max({beta, sc.cost.beta1[t], sc.cost.beta2[t]});
  }
  return alpha + 2.0 * beta * static_cast<double>(sc.num_customers());
}

std::vector<double> grid_values(double lo, double hi, double step) {
  std::vector<double> v;
  for (std::size_t k = 0;; ++k) {
    const double x = lo + static_cast<double>(k) * step;
    if (x > hi + 1e-12) break;
    v.push_back(std::min(x, hi));
  }
  if (v.empty() || v.back() < hi - 1e-12) v.push_back(hi);
  return v;
}

struct GridAxis {
  std::size_t customer;
  std::size_t slot;
  std::vector<double> values;
  std::vector<double> utility;
};

std::vector<GridAxis> grid_axes(const Scenario& sc, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid_step must be positive");
  if (sc.num_customers() * sc.num_slots > 3) {
    throw std::invalid_argument("brute-force grid supports N*T <= 3 only");
  }
  std::vector<GridAxis> axes;
  for (std::size_t i = 0; i < sc.num_customers(); ++i) {
    const auto& c = sc.customers[i];
    for (std::size_t t = 0; t < sc.num_slots; ++t) {
      const double lo = sc.num_slots == 1 ? c.d_min : 0.0;
      const double hi = std::max(lo, std::min(c.satiation(t), c.d_max));
      axes.push_back({i, t, grid_values(lo, hi, step), {}});
    }
  }
  return axes;
}

}  // namespace

std::string to_string(OracleMethod m) {
  return m == OracleMethod::Grid ? "grid" : "centralized-gradient";
}

OracleSolution solve_welfare_centralized(const Scenario& sc,
                                         const CentralizedOptions& options) {
  const std::size_t N = sc.num_customers();
  const std::size_t T = sc.num_slots;
  const double step = options.step > 0.0 ? options.step : 1.0 / curvature_bound(sc);

  std::vector<std::vector<double>> x(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& c = sc.customers[i];
    if (options.initial) {
      x[i] = project_daily(options.initial->profiles.at(i).x, c.d_min, c.d_max);
    } else {
      x[i].assign(T, c.d_min / static_cast<double>(T));
    }
  }

  std::vector<double> demand(T);
  std::vector<int> side(T, 0);
  std::vector<std::size_t> last_crossing(T, 0);
  auto update_demand = [&](std::size_t k) {
    for (std::size_t t = 0; t < T; ++t) {
      double d = 0.0;
      for (std::size_t i = 0; i < N; ++i) d += x[i][t];
      demand[t] = d;
      const int s = d <= sc.segment_boundary(t) ? -1 : 1;
      if (side[t] != 0 && s != side[t]) last_crossing[t] = k;
      side[t] = s;
    }
  };
  update_demand(0);

  OracleSolution sol;
  sol.method = OracleMethod::CentralizedGradient;
  sol.converged = false;
  std::vector<double> raw(T);
  std::size_t k = 0;
  while (k < options.max_iter) {
    ++k;
    double residual = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& c = sc.customers[i];
      for (std::size_t t = 0; t < T; ++t) {
        const double g =
            utility_gradient(x[i][t], c.w[t], c.alpha) -
            cost_gradient(demand[t], sc.segment_boundary(t), sc.cost.beta1[t],
                          sc.cost.beta2[t]);
        raw[t] = x[i][t] + step * g;
        if (!std::isfinite(raw[t])) throw DivergenceError(k);
      }
      auto next = project_daily(raw, c.d_min, c.d_max);
      for (std::size_t t = 0; t < T; ++t) {
        residual = std::max(residual, std::abs(next[t] - x[i][t]) / step);
      }
      // Jacobi sweep: demand is refreshed only after every customer moved.
      x[i] = std::move(next);
    }
    update_demand(k);
    sol.residual = residual;
    if (residual < options.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.iterations = k;

  for (std::size_t t = 0; t < T; ++t) {
    const bool near = std::abs(demand[t] - sc.segment_boundary(t)) <= kBoundaryBand;
    // Crossings on the way in are harmless; only a non-converged run that
    // keeps switching segments is stuck on the kink.
    const bool chatter = !sol.converged && last_crossing[t] > 0 &&
                         k - last_crossing[t] < kChatterWindow;
    if (near || chatter) sol.boundary_degenerate = true;
  }

  for (std::size_t i = 0; i < N; ++i) {
    sol.allocation.profiles.push_back(make_profile(std::move(x[i]), sc.blocks));
  }
  sol.welfare = social_welfare(sol.allocation, sc);
  return sol;
}

double grid_size(const Scenario& sc, double grid_step) {
  double count = 1.0;
  for (const auto& axis : grid_axes(sc, grid_step)) {
    count *= static_cast<double>(axis.values.size());
  }
  return count;
}

OracleSolution brute_force_welfare(const Scenario& sc, double grid_step) {
  auto axes = grid_axes(sc, grid_step);
  double count = 1.0;
  for (const auto& axis : axes) count *= static_cast<double>(axis.values.size());
  if (count > kMaxGridPoints) {
    throw GridTooLargeError("grid has " + format_number(count) +
                            " points, above the 1e8 limit");
  }

  for (auto& axis : axes) {
    const auto& c = sc.customers[axis.customer];
    axis.utility.reserve(axis.values.size());
    for (double v : axis.values) {
      axis.utility.push_back(utility_value(v, c.w[axis.slot], c.alpha));
    }
  }

  const std::size_t T = sc.num_slots;
  const std::size_t n_axes = axes.size();
  std::vector<std::size_t> index(n_axes, 0);
  std::vector<std::size_t> best_index;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> demand(T);

  // Odometer over all axes, last axis fastest: lexicographic order.
  while (true) {
    bool feasible = true;
    double welfare = 0.0;
    std::fill(demand.begin(), demand.end(), 0.0);
    for (std::size_t i = 0; i < sc.num_customers() && feasible; ++i) {
      double daily = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t a = i * T + t;
        const double v = axes[a].values[index[a]];
        daily += v;
        demand[t] += v;
        welfare += axes[a].utility[index[a]];
      }
      const auto& c = sc.customers[i];
      feasible = daily >= c.d_min - 1e-9 && daily <= c.d_max + 1e-9;
    }
    if (feasible) {
      for (std::size_t t = 0; t < T; ++t) {
        welfare -= cost_value(demand[t], sc.segment_boundary(t), sc.cost.beta1[t],
                              sc.cost.beta2[t]);
      }
      if (welfare > best) {
        best = welfare;
        best_index = index;
      }
    }

    std::size_t a = n_axes;
    while (a > 0) {
      --a;
      if (++index[a] < axes[a].values.size()) break;
      index[a] = 0;
      if (a == 0) {
        a = n_axes;
        break;
      }
    }
    if (a == n_axes) break;
  }

  if (best_index.empty()) {
    throw std::runtime_error("brute-force grid contains no feasible point");
  }

  OracleSolution sol;
  sol.method = OracleMethod::Grid;
  for (std::size_t i = 0; i < sc.num_customers(); ++i) {
    std::vector<double> x(T);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t a = i * T + t;
      x[t] = axes[a].values[best_index[a]];
    }
    sol.allocation.profiles.push_back(make_profile(std::move(x), sc.blocks));
  }
  sol.welfare = best;
  sol.iterations = static_cast<std::size_t>(count);
  for (std::size_t t = 0; t < T; ++t) {
    if (std::abs(sol.allocation.demand(t) - sc.segment_boundary(t)) <= grid_step) {
      sol.boundary_degenerate = true;
    }
  }
  return sol;
}

ComparisonReport compare_equilibrium(const EquilibriumReport& distributed,
                                     const OracleSolution& oracle,
                                     const ComparisonTolerance& tol) {
  if (distributed.allocation.num_customers() != oracle.allocation.num_customers() ||
      distributed.allocation.num_slots() != oracle.allocation.num_slots()) {
    throw std::invalid_argument(
        "compare_equilibrium: inputs come from different scenarios");
  }
  ComparisonReport r;
  r.allocation_gap = Allocation::max_gap(distributed.allocation, oracle.allocation);
  r.welfare_gap = std::abs(distributed.welfare - oracle.welfare);
  r.boundary_degenerate = oracle.boundary_degenerate;
  r.pass = r.allocation_gap < tol.allocation && r.welfare_gap < tol.welfare;
  return r;
}

nlohmann::json to_json(const ComparisonReport& r) {
  return {{"allocation_gap", r.allocation_gap},
          {"welfare_gap", r.welfare_gap},
          {"pass", r.pass},
          {"boundary_degenerate", r.boundary_degenerate}};
}

double market_support_gap(const Allocation& alloc, const Scenario& sc) {
  const auto prices = price_schedule(alloc, sc);
  double gap = 0.0;
  for (std::size_t i = 0; i < alloc.num_customers(); ++i) {
    const auto br = best_response(prices, sc.customers[i], sc.blocks);
    for (std::size_t t = 0; t < sc.num_slots; ++t) {
      gap = std::max(gap, std::abs(br.x[t] - alloc.profiles[i].x[t]));
    }
  }
  return gap;
}

}  // namespace drm
