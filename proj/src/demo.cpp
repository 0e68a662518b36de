#include "drm/demo.hpp"

namespace drm {

std::string_view demo_scenario_json() {
  static constexpr std::string_view kDemo = R"json({
  "notes": {
    "reference_values": "two customers, one slot, block threshold b = 25, alpha = 1, w drawn from [10, 100]",
    "repository_choices": "w = (60, 90) drawn once and frozen; beta1 = 0.1 < beta2 = 0.2 so that both customers consume into the second block and aggregate demand sits above b*N; d_min = 0 and d_max = 1000 leave the daily constraints slack"
  },
  "num_slots": 1,
  "blocks": { "b": 25 },
  "cost": { "beta1": 0.1, "beta2": 0.2 },
  "customers": [
    { "id": 0, "w": 60, "alpha": 1, "d_min": 0, "d_max": 1000 },
    { "id": 1, "w": 90, "alpha": 1, "d_min": 0, "d_max": 1000 }
  ]
}
)json";
  return kDemo;
}

Scenario demo_scenario() {
  return validate_scenario(nlohmann::json::parse(demo_scenario_json()));
}

}  // namespace drm
