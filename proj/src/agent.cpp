#include "drm/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drm {

namespace {

constexpr double kBisectionTol = 1e-10;
constexpr int kMaxBisection = 200;
constexpr int kMaxBracketDoublings = 2000;

void check_bounds(double d_min, double d_max) {
  if (!(d_min <= d_max)) {
    throw DomainError("infeasible constraint set: d_min exceeds d_max");
  }
}

void check_finite(std::span<const double> v, const char* what) {
  for (double e : v) {
    if (!std::isfinite(e)) throw DomainError(std::string(what) + ": non-finite input");
  }
}

// Finds a root of the monotone nondecreasing scalar function f(mu) - target
// inside [lo, hi] (f(lo) <= target <= f(hi)). Stops early once the residual is
// within kBisectionTol.
template <typename F>
double bisect_increasing(F&& f, double lo, double hi, double target) {
  double mid = 0.5 * (lo + hi);
  for (int k = 0; k < kMaxBisection; ++k) {
    mid = 0.5 * (lo + hi);
    const double s = f(mid);
    if (std::abs(s - target) <= kBisectionTol) break;
    if (s < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (!(lo < mid || mid < hi)) break;
  }
  return mid;
}

// Projection of (p, q) onto {u <= 0, v >= 0, u + v >= -b}, with u = y - b and
// v = z - b. `slope` is d(u + v)/d(shift) when both coordinates are shifted
// by the same amount, which is constant on each face.
struct Cell {
  double u;
  double v;
  int slope;
};

Cell project_cell(double p, double q, double b) {
  if (p <= 0.0 && q >= 0.0 && p + q >= -b) return {p, q, 2};

  Cell best{0.0, 0.0, 0};
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](double u, double v, int slope) {
    const double d = (u - p) * (u - p) + (v - q) * (v - q);
    if (d < best_dist) {
      best_dist = d;
      best = {u, v, slope};
    }
  };
  if (q >= 0.0) consider(0.0, q, 1);              // y = b face
  if (p <= 0.0 && p >= -b) consider(p, 0.0, 1);   // z = b face
  const double s = 0.5 * (p + q + b);              // x = 0 face
  if (q - s >= 0.0 && p - s <= 0.0) consider(p - s, q - s, 0);
  consider(0.0, 0.0, 0);
  consider(-b, 0.0, 0);
  return best;
}

// Best response of one slot at effective block prices m_l <= m_u (prices plus
// the daily multiplier), consumption capped at `cap`.
double slot_response(double w, double alpha, double b, double m_l, double m_u,
                     double cap) {
  double x;
  if (w <= m_l) {
    x = 0.0;
  } else if (m_l > 0.0 && (w - m_l) / alpha < b) {
    x = (w - m_l) / alpha;
  } else if (utility_gradient(b, w, alpha) <= m_u) {
    x = b;
  } else if (m_u > 0.0) {
    x = (w - m_u) / alpha;
  } else if (m_u == 0.0) {
    x = std::max(b, w / alpha);
  } else {
    x = cap;
  }
  return std::clamp(x, 0.0, std::max(cap, 0.0));
}

}  // namespace

double KktResidual::worst() const {
  return std::max({stationarity_y, stationarity_z, comp_slack_1, comp_slack_2});
}

RawStep gradient_step(const CustomerProfile& profile, const Customer& customer,
                      const PriceSchedule& prices, double gamma,
                      const BlockSchedule& blocks) {
  const std::size_t T = profile.num_slots();
  RawStep raw;
  raw.y.resize(T);
  raw.z.resize(T);
  raw.x.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double g = utility_gradient(profile.x[t], customer.w[t], customer.alpha);
    raw.y[t] = profile.y[t] + gamma * (g - prices.p_l[t]);
    raw.z[t] = profile.z[t] + gamma * (g - prices.p_u[t]);
    raw.x[t] = raw.y[t] + raw.z[t] - blocks.b[t];
  }
  return raw;
}

std::vector<double> project_daily(std::span<const double> raw_x, double d_min,
                                  double d_max) {
  check_bounds(d_min, d_max);
  check_finite(raw_x, "project_daily");

  const std::size_t T = raw_x.size();
  std::vector<double> out(T);
  auto fill = [&](double nu) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      out[t] = std::max(0.0, raw_x[t] - nu);
      sum += out[t];
    }
    return sum;
  };

  const double s0 = fill(0.0);
  if (s0 >= d_min && s0 <= d_max) return out;
  if (d_max == 0.0) return std::vector<double>(T, 0.0);

  const double target = s0 > d_max ? d_max : d_min;
  const auto [min_it, max_it] = std::minmax_element(raw_x.begin(), raw_x.end());
  // sum is nonincreasing in nu; flip the sign to reuse the increasing solver.
  const double lo = s0 > d_max ? -*max_it : 0.0;
  const double hi = s0 > d_max ? 0.0 : -(*min_it - target);
  double nu = -bisect_increasing([&](double m) { return fill(-m); }, lo, hi, target);

  // Exact shift on the active set {raw > nu}.
  double active_sum = 0.0;
  std::size_t active = 0;
  for (double r : raw_x) {
    if (r > nu) {
      active_sum += r;
      ++active;
    }
  }
  if (active > 0) {
    const double exact = (active_sum - target) / static_cast<double>(active);
    const bool consistent = std::all_of(raw_x.begin(), raw_x.end(), [&](double r) {
      return (r > nu) == (r > exact);
    });
    if (consistent) nu = exact;
  }
  fill(nu);
  return out;
}

CustomerProfile project_profile(std::span<const double> raw_x,
                                const Customer& customer,
                                const BlockSchedule& blocks) {
  return make_profile(project_daily(raw_x, customer.d_min, customer.d_max), blocks);
}

RawStep project_block_split(const RawStep& raw, const Customer& customer,
                            const BlockSchedule& blocks) {
  check_bounds(customer.d_min, customer.d_max);
  check_finite(raw.y, "project_split");
  check_finite(raw.z, "project_split");

  const std::size_t T = raw.y.size();
  std::vector<Cell> cells(T);
  auto evaluate = [&](double mu) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double b = blocks.b[t];
      cells[t] = project_cell(raw.y[t] + mu - b, raw.z[t] + mu - b, b);
      sum += cells[t].u + cells[t].v + b;
    }
    return sum;
  };

  const double s0 = evaluate(0.0);
  if (s0 < customer.d_min || s0 > customer.d_max) {
    const double target = s0 > customer.d_max ? customer.d_max : customer.d_min;
    double lo = 0.0;
    double hi = 0.0;
    if (s0 > target) {
      lo = -1.0;
      for (int k = 0; k < kMaxBracketDoublings && evaluate(lo) > target; ++k) lo *= 2.0;
    } else {
      hi = 1.0;
      for (int k = 0; k < kMaxBracketDoublings && evaluate(hi) < target; ++k) hi *= 2.0;
    }
    double mu = bisect_increasing(evaluate, lo, hi, target);

    // The sum is affine in mu while every slot stays on the same face.
    const double s = evaluate(mu);
    int slope = 0;
    for (const auto& c : cells) slope += c.slope;
    if (slope > 0) {
      const double refined = mu + (target - s) / slope;
      if (std::abs(evaluate(refined) - target) > std::abs(s - target)) {
        evaluate(mu);
      }
    } else {
      evaluate(mu);
    }
  }

  RawStep out;
  out.y.resize(T);
  out.z.resize(T);
  out.x.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double b = blocks.b[t];
    out.y[t] = cells[t].u + b;
    out.z[t] = cells[t].v + b;
    out.x[t] = std::max(0.0, cells[t].u + cells[t].v + b);
  }
  return out;
}

CustomerProfile project_split(const RawStep& raw, const Customer& customer,
                              const BlockSchedule& blocks) {
  return make_profile(project_block_split(raw, customer, blocks).x, blocks);
}

double net_utility(const CustomerProfile& profile, const Customer& customer,
                   const PriceSchedule& prices, const BlockSchedule& blocks) {
  double total = 0.0;
  for (std::size_t t = 0; t < profile.num_slots(); ++t) {
    total += utility_value(profile.x[t], customer.w[t], customer.alpha) -
             prices.p_l[t] * profile.y[t] -
             prices.p_u[t] * (profile.z[t] - blocks.b[t]);
  }
  return total;
}

KktResidual kkt_residual(const CustomerProfile& profile,
                         const PriceSchedule& prices, const KktMultipliers& mult,
                         const Customer& customer, const BlockSchedule& blocks) {
  KktResidual r;
  const double shift = -mult.lambda1 + mult.lambda2;
  for (std::size_t t = 0; t < profile.num_slots(); ++t) {
    const double x = profile.x[t];
    const double b = blocks.b[t];
    const double g = utility_gradient(x, customer.w[t], customer.alpha);
    if (x > 0.0 && x < b) {
      r.stationarity_y = std::max(r.stationarity_y, std::abs(g - prices.p_l[t] + shift));
    } else if (x > b) {
      r.stationarity_z = std::max(r.stationarity_z, std::abs(g - prices.p_u[t] + shift));
    }
  }
  const double total = profile.total();
  r.comp_slack_1 = std::abs(mult.lambda1 * (total - customer.d_max));
  r.comp_slack_2 = std::abs(mult.lambda2 * (customer.d_min - total));
  return r;
}

KktMultipliers recover_multipliers(const CustomerProfile& profile,
                                   const PriceSchedule& prices,
                                   const Customer& customer,
                                   const BlockSchedule& blocks) {
  double gap_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < profile.num_slots(); ++t) {
    const double x = profile.x[t];
    const double b = blocks.b[t];
    const double g = utility_gradient(x, customer.w[t], customer.alpha);
    if (x > 0.0 && x < b) {
      gap_sum += g - prices.p_l[t];
      ++count;
    } else if (x > b) {
      gap_sum += g - prices.p_u[t];
      ++count;
    }
  }
  const double gap = count > 0 ? gap_sum / static_cast<double>(count) : 0.0;

  const double total = profile.total();
  const double scale = std::max(1.0, customer.d_max);
  const bool upper_active = std::abs(total - customer.d_max) <= 1e-7 * scale;
  const bool lower_active = std::abs(total - customer.d_min) <= 1e-7 * scale;

  KktMultipliers m;
  if (upper_active && gap > 0.0) m.lambda1 = gap;
  if (lower_active && gap < 0.0) m.lambda2 = -gap;
  return m;
}

CustomerProfile best_response(const PriceSchedule& prices,
                              const Customer& customer,
                              const BlockSchedule& blocks) {
  check_bounds(customer.d_min, customer.d_max);
  const std::size_t T = prices.num_slots();
  for (std::size_t t = 0; t < T; ++t) {
    if (prices.p_u[t] < prices.p_l[t]) {
      throw DomainError("best_response: requires p_u >= p_l in every slot");
    }
  }

  std::vector<double> x(T);
  // Daily consumption, nonincreasing in the multiplier.
  auto respond = [&](double lambda) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      x[t] = slot_response(customer.w[t], customer.alpha, blocks.b[t],
                           prices.p_l[t] + lambda, prices.p_u[t] + lambda,
                           customer.d_max);
      sum += x[t];
    }
    return sum;
  };

  const double s0 = respond(0.0);
  if (s0 < customer.d_min || s0 > customer.d_max) {
    const double target = s0 > customer.d_max ? customer.d_max : customer.d_min;
    double lo = 0.0;
    double hi = 0.0;
    if (s0 > target) {
      hi = 1.0;
      for (int k = 0; k < kMaxBracketDoublings && respond(hi) > target; ++k) hi *= 2.0;
    } else {
      lo = -1.0;
      for (int k = 0; k < kMaxBracketDoublings && respond(lo) < target; ++k) lo *= 2.0;
    }
    // Invariant: respond(lo) >= target >= respond(hi).
    for (int k = 0; k < kMaxBisection; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (!(lo < mid && mid < hi)) break;
      const double s = respond(mid);
      if (s == target) {
        lo = hi = mid;
        break;
      }
      (s > target ? lo : hi) = mid;
    }
    // The response jumps where a marginal price crosses zero past satiation;
    // every point between the two one-sided responses is then optimal, so
    // interpolate to meet the target exactly.
    const double s_hi = respond(hi);
    const std::vector<double> x_hi = x;
    const double s_lo = respond(lo);
    if (s_lo > s_hi) {
      const double theta = std::clamp((target - s_hi) / (s_lo - s_hi), 0.0, 1.0);
      for (std::size_t t = 0; t < T; ++t) x[t] = x_hi[t] + theta * (x[t] - x_hi[t]);
    }
  }
  return make_profile(std::move(x), blocks);
}

}  // namespace drm
