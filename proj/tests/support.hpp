#pragma once

#include <random>
#include <vector>

#include "drm/model.hpp"

namespace drm::test {

struct CustomerSpec {
  nlohmann::json w;
  double alpha = 1.0;
  double d_min = 0.0;
  double d_max = 1000.0;
};

inline Scenario make_scenario(std::size_t num_slots, nlohmann::json b, nlohmann::json beta1,
                              nlohmann::json beta2, const std::vector<CustomerSpec>& customers) {
  nlohmann::json doc;
  doc["num_slots"] = num_slots;
  doc["blocks"] = {{"b", b}};
  doc["cost"] = {{"beta1", beta1}, {"beta2", beta2}};
  doc["customers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < customers.size(); ++i) {
    const auto& c = customers[i];
    doc["customers"].push_back(
        {{"id", i}, {"w", c.w}, {"alpha", c.alpha}, {"d_min", c.d_min}, {"d_max", c.d_max}});
  }
  return validate_scenario(doc);
}

/// Single customer, single slot.
inline Scenario single(double w, double beta1, double beta2, double b = 25.0,
                       double d_min = 0.0, double d_max = 100.0) {
  return make_scenario(1, b, beta1, beta2, {{w, 1.0, d_min, d_max}});
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace drm::test
