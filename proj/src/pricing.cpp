#include "drm/pricing.hpp"

#include <stdexcept>

namespace drm {

AggregateDemand aggregate(const Allocation& alloc, const BlockSchedule& blocks,
                          std::size_t t) {
  AggregateDemand agg;
  const double b = blocks.b[t];
  for (const auto& p : alloc.profiles) {
    agg.first_block += p.y[t];
    agg.second_block += p.z[t] - b;
  }
  return agg;
}

BlockPrice block_prices(const AggregateDemand& agg, double bN, double beta1,
                        double beta2) {
  if (!(bN > 0.0)) throw DomainError("block_prices: bN must be positive");
  if (agg.first_block < 0.0 || agg.second_block < 0.0) {
    throw DomainError("block_prices: negative aggregate demand");
  }
  const double d = agg.total();
  return {2.0 * beta1 * d, 2.0 * beta2 * d};
}

PriceSchedule price_schedule(const Allocation& alloc, const Scenario& scenario) {
  const std::size_t T = scenario.num_slots;
  PriceSchedule prices;
  prices.p_l.resize(T);
  prices.p_u.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto bp = block_prices(aggregate(alloc, scenario.blocks, t),
                                 scenario.segment_boundary(t),
                                 scenario.cost.beta1[t], scenario.cost.beta2[t]);
    prices.p_l[t] = bp.p_l;
    prices.p_u[t] = bp.p_u;
  }
  return prices;
}

double revenue(const Allocation& alloc, const PriceSchedule& prices,
               const BlockSchedule& blocks, const CostParams& cost) {
  const std::size_t T = alloc.num_slots();
  if (prices.num_slots() != T || blocks.b.size() != T) {
    throw std::invalid_argument("revenue: horizon mismatch");
  }
  const double n = static_cast<double>(alloc.num_customers());
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto agg = aggregate(alloc, blocks, t);
    total += prices.p_l[t] * agg.first_block + prices.p_u[t] * agg.second_block -
             cost_value(agg.total(), blocks.b[t] * n, cost.beta1[t],
                        cost.beta2[t]);
  }
  return total;
}

}  // namespace drm
