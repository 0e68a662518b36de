#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace drm {

/// Raised when a primitive is evaluated outside its domain (negative energy).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Scenario validation failure. Carries every violated invariant, each
/// prefixed with the JSON field path it refers to.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> issues);

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct Customer {
  int id = 0;
  std::vector<double> w;  // willingness per slot
  double alpha = 1.0;     // satiation coefficient
  double d_min = 0.0;     // daily energy floor
  double d_max = 0.0;     // daily energy cap

  double satiation(std::size_t t) const { return w[t] / alpha; }
};

struct BlockSchedule {
  std::vector<double> b;  // threshold per slot
};

struct CostParams {
  std::vector<double> beta1;  // cost coefficient while D <= b*N
  std::vector<double> beta2;  // cost coefficient while D >  b*N
};

struct Scenario {
  std::size_t num_slots = 0;
  std::vector<Customer> customers;
  BlockSchedule blocks;
  CostParams cost;

  std::size_t num_customers() const { return customers.size(); }

  /// Aggregate threshold b^t * N where the cost switches segment.
  double segment_boundary(std::size_t t) const {
    return blocks.b[t] * static_cast<double>(customers.size());
  }
};

/// One customer's consumption over the day together with its block split.
struct CustomerProfile {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;

  std::size_t num_slots() const { return x.size(); }
  double total() const;
};

/// Consumption of every customer in every slot. profiles[i] belongs to
/// scenario.customers[i].
struct Allocation {
  std::vector<CustomerProfile> profiles;

  std::size_t num_customers() const { return profiles.size(); }
  std::size_t num_slots() const {
    return profiles.empty() ? 0 : profiles.front().num_slots();
  }
  double demand(std::size_t t) const;

  /// Max-norm distance between the x components of two allocations of equal
  /// shape.
  static double max_gap(const Allocation& a, const Allocation& b);
};

struct PriceSchedule {
  std::vector<double> p_l;
  std::vector<double> p_u;

  std::size_t num_slots() const { return p_l.size(); }
};

struct BlockSplit {
  double y;
  double z;
};

// Quadratic utility w*x - (alpha/2)*x^2, flat at w^2/(2*alpha) beyond the
// satiation point w/alpha.
double utility_value(double x, double w, double alpha);
double utility_gradient(double x, double w, double alpha);

/// Two-segment quadratic cost: beta1*D^2 up to bN, beta2*D^2 above. Jumps by
/// (beta2-beta1)*bN^2 at the boundary when the coefficients differ.
double cost_value(double demand, double bN, double beta1, double beta2);

/// y = min(x, b), z = max(x, b), so that y + z - b == x exactly.
BlockSplit canonical_split(double x, double b);

/// Evaluates y + z - b. Exact (bitwise x) for any canonical split, because the
/// term equal to b is cancelled first.
double block_total(double y, double z, double b);

/// Builds a profile from raw consumption, splitting each slot against b.
CustomerProfile make_profile(std::vector<double> x, const BlockSchedule& blocks);

/// Parses a scenario document, broadcasts scalars to per-slot vectors and
/// checks every invariant. Throws ScenarioError listing all violations.
Scenario validate_scenario(const nlohmann::json& doc);

/// Reads and validates a scenario file.
Scenario load_scenario(const std::string& path);

/// Inverse of validate_scenario, always in per-slot (array) form.
nlohmann::json to_json(const Scenario& scenario);

}  // namespace drm
