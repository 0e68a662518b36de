#pragma once

#include <span>
#include <vector>

#include "drm/model.hpp"

namespace drm {

/// Unprojected result of one gradient step on the block split.
struct RawStep {
  std::vector<double> y;
  std::vector<double> z;
  std::vector<double> x;  // y + z - b, slot by slot
};

/// Multipliers of the daily energy constraints.
struct KktMultipliers {
  double lambda1 = 0.0;  // sum x <= d_max
  double lambda2 = 0.0;  // sum x >= d_min
};

/// Max-norm violation of each optimality line of the customer problem.
struct KktResidual {
  double stationarity_y = 0.0;
  double stationarity_z = 0.0;
  double comp_slack_1 = 0.0;
  double comp_slack_2 = 0.0;

  double worst() const;
};

/// y' = y + gamma*(U'(x) - p_l), z' = z + gamma*(U'(x) - p_u) in every slot.
RawStep gradient_step(const CustomerProfile& profile, const Customer& customer,
                      const PriceSchedule& prices, double gamma,
                      const BlockSchedule& blocks);

/// Euclidean projection of raw consumption onto
/// {x >= 0, d_min <= sum x <= d_max}, returned with its canonical split.
///
/// Water-filling: x = max(0, raw - nu) with the scalar shift nu found by
/// bisection (residual 1e-10, at most 200 halvings), then solved exactly on
/// the resulting active set.
CustomerProfile project_profile(std::span<const double> raw_x,
                                const Customer& customer,
                                const BlockSchedule& blocks);

/// Same projection, consumption only.
std::vector<double> project_daily(std::span<const double> raw_x, double d_min,
                                  double d_max);

/// Euclidean projection of a raw block split onto the customer's feasible set
/// {y <= b, z >= b, y + z - b >= 0, d_min <= sum (y + z - b) <= d_max},
/// followed by re-canonicalisation of the split.
///
/// The daily constraint couples the slots through one scalar multiplier that
/// shifts y and z together; each slot is then a projection onto a planar
/// polyhedron, solved in closed form.
CustomerProfile project_split(const RawStep& raw, const Customer& customer,
                              const BlockSchedule& blocks);

/// The projection itself, before re-canonicalisation.
RawStep project_block_split(const RawStep& raw, const Customer& customer,
                            const BlockSchedule& blocks);

/// sum_t U(x) - p_l*y - p_u*(z - b).
double net_utility(const CustomerProfile& profile, const Customer& customer,
                   const PriceSchedule& prices, const BlockSchedule& blocks);

/// Stationarity is only checked on slots whose bounds are inactive: the y
/// line where 0 < x < b, the z line where x > b.
KktResidual kkt_residual(const CustomerProfile& profile,
                         const PriceSchedule& prices, const KktMultipliers& mult,
                         const Customer& customer, const BlockSchedule& blocks);

/// Active-set estimate: the average stationarity gap over inactive-bound
/// slots is assigned to whichever daily constraint is active, else zero.
KktMultipliers recover_multipliers(const CustomerProfile& profile,
                                   const PriceSchedule& prices,
                                   const Customer& customer,
                                   const BlockSchedule& blocks);

/// Exact maximiser of net utility at fixed prices subject to the daily
/// constraints. Requires p_u >= p_l in every slot, where the problem is
/// concave.
CustomerProfile best_response(const PriceSchedule& prices,
                              const Customer& customer,
                              const BlockSchedule& blocks);

}  // namespace drm
