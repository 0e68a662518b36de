#pragma once

#include <cstddef>

#include "drm/model.hpp"

namespace drm {

/// Slot-level aggregate of the block split across all customers.
struct AggregateDemand {
  double first_block = 0.0;   // sum_i y_i
  double second_block = 0.0;  // sum_i (z_i - b)

  double total() const { return first_block + second_block; }
};

struct BlockPrice {
  double p_l;
  double p_u;
};

AggregateDemand aggregate(const Allocation& alloc, const BlockSchedule& blocks,
                          std::size_t t);

/// Marginal-cost block prices at total demand D: the first block is priced
/// off the first cost segment and the second block off the second one,
/// p_l = 2*beta1*D and p_u = 2*beta2*D.
BlockPrice block_prices(const AggregateDemand& agg, double bN, double beta1,
                        double beta2);

/// Prices for every slot of the horizon from the current allocation.
PriceSchedule price_schedule(const Allocation& alloc, const Scenario& scenario);

/// Power-company net revenue: block sales minus production cost, summed over
/// the horizon.
double revenue(const Allocation& alloc, const PriceSchedule& prices,
               const BlockSchedule& blocks, const CostParams& cost);

}  // namespace drm
