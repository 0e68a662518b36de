#pragma once

#include <string_view>

#include "drm/model.hpp"

namespace drm {

/// Built-in two-customer, one-slot example (same document as
/// scenarios/demo.json).
std::string_view demo_scenario_json();
Scenario demo_scenario();

}  // namespace drm
