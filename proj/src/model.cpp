#include "drm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace drm {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::ostringstream out;
  out << "invalid scenario";
  for (const auto& issue : issues) out << "\n  " << issue;
  return out.str();
}

class Checker {
 public:
  void fail(const std::string& path, const std::string& message) {
    issues_.push_back(path + ": " + message);
  }
  bool ok() const { return issues_.empty(); }
  std::vector<std::string>& issues() { return issues_; }

  // Records an issue and returns NaN when the node is not a finite number.
  double number(const nlohmann::json& node, const std::string& path) {
    if (!node.is_number()) {
      fail(path, "expected a number");
      return std::nan("");
    }
    const double v = node.get<double>();
    if (!std::isfinite(v)) {
      fail(path, "must be finite");
    }
    return v;
  }

  // Scalar or array of length num_slots, broadcast to per-slot values.
  std::vector<double> per_slot(const nlohmann::json& node,
                               const std::string& path, std::size_t num_slots) {
    if (node.is_array()) {
      if (node.size() != num_slots) {
        fail(path, "expected " + std::to_string(num_slots) +
                       " per-slot values, got " + std::to_string(node.size()));
        return {};
      }
      std::vector<double> out;
      out.reserve(num_slots);
      for (std::size_t t = 0; t < node.size(); ++t) {
        out.push_back(number(node[t], path + "[" + std::to_string(t) + "]"));
      }
      return out;
    }
    const double v = number(node, path);
    return std::vector<double>(num_slots, v);
  }

  const nlohmann::json* field(const nlohmann::json& parent,
                              const std::string& key, const std::string& path) {
    if (!parent.is_object() || !parent.contains(key)) {
      fail(path.empty() ? key : path + "." + key, "missing field");
      return nullptr;
    }
    return &parent.at(key);
  }

 private:
  std::vector<std::string> issues_;
};

bool all_positive(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double e) { return e > 0.0; });
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

double CustomerProfile::total() const {
  return std::accumulate(x.begin(), x.end(), 0.0);
}

double Allocation::demand(std::size_t t) const {
  double d = 0.0;
  for (const auto& p : profiles) d += p.x[t];
  return d;
}

double Allocation::max_gap(const Allocation& a, const Allocation& b) {
  if (a.num_customers() != b.num_customers() || a.num_slots() != b.num_slots()) {
    throw std::invalid_argument("allocation shapes differ");
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < a.num_customers(); ++i) {
    for (std::size_t t = 0; t < a.num_slots(); ++t) {
      gap = std::max(gap, std::abs(a.profiles[i].x[t] - b.profiles[i].x[t]));
    }
  }
  return gap;
}

double utility_value(double x, double w, double alpha) {
  if (x < 0.0) throw DomainError("utility_value: negative consumption");
  const double satiation = w / alpha;
  if (x >= satiation) return w * w / (2.0 * alpha);
  return w * x - 0.5 * alpha * x * x;
}

double utility_gradient(double x, double w, double alpha) {
  if (x < 0.0) throw DomainError("utility_gradient: negative consumption");
  // Saturated side of the kink is taken at x == w/alpha.
  if (x >= w / alpha) return 0.0;
  return w - alpha * x;
}

double cost_value(double demand, double bN, double beta1, double beta2) {
  if (demand < 0.0) throw DomainError("cost_value: negative demand");
  return (demand <= bN ? beta1 : beta2) * demand * demand;
}

BlockSplit canonical_split(double x, double b) {
  if (x < 0.0) throw DomainError("canonical_split: negative consumption");
  if (!(b > 0.0)) throw DomainError("canonical_split: threshold must be positive");
  return {std::min(x, b), std::max(x, b)};
}

double block_total(double y, double z, double b) {
  return y < b ? y + (z - b) : (y - b) + z;
}

CustomerProfile make_profile(std::vector<double> x, const BlockSchedule& blocks) {
  CustomerProfile p;
  p.y.resize(x.size());
  p.z.resize(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto s = canonical_split(x[t], blocks.b[t]);
    p.y[t] = s.y;
    p.z[t] = s.z;
  }
  p.x = std::move(x);
  return p;
}

Scenario validate_scenario(const nlohmann::json& doc) {
  Checker check;
  Scenario sc;

  if (!doc.is_object()) {
    throw ScenarioError({"$: scenario document must be a JSON object"});
  }

  if (const auto* n = check.field(doc, "num_slots", "")) {
    if (!n->is_number_integer() || n->get<long long>() < 1) {
      check.fail("num_slots", "must be an integer >= 1");
    } else {
      sc.num_slots = n->get<std::size_t>();
    }
  }
  // Nothing per-slot can be checked without a valid horizon.
  if (sc.num_slots == 0) throw ScenarioError(std::move(check.issues()));
  const std::size_t T = sc.num_slots;

  if (const auto* blocks = check.field(doc, "blocks", "")) {
    if (const auto* b = check.field(*blocks, "b", "blocks")) {
      sc.blocks.b = check.per_slot(*b, "blocks.b", T);
      if (sc.blocks.b.size() == T && !all_positive(sc.blocks.b)) {
        check.fail("blocks.b", "block threshold must be strictly positive");
      }
    }
  }

  if (const auto* cost = check.field(doc, "cost", "")) {
    if (const auto* b1 = check.field(*cost, "beta1", "cost")) {
      sc.cost.beta1 = check.per_slot(*b1, "cost.beta1", T);
      if (sc.cost.beta1.size() == T && !all_positive(sc.cost.beta1)) {
        check.fail("cost.beta1", "beta1 must be strictly positive");
      }
    }
    if (const auto* b2 = check.field(*cost, "beta2", "cost")) {
      sc.cost.beta2 = check.per_slot(*b2, "cost.beta2", T);
      if (sc.cost.beta2.size() == T && !all_positive(sc.cost.beta2)) {
        check.fail("cost.beta2", "beta2 must be strictly positive");
      }
    }
  }

  if (const auto* customers = check.field(doc, "customers", "")) {
    if (!customers->is_array() || customers->empty()) {
      check.fail("customers", "must be a non-empty array");
    } else {
      for (std::size_t i = 0; i < customers->size(); ++i) {
        const auto& node = (*customers)[i];
        const std::string path = "customers[" + std::to_string(i) + "]";
        Customer c;
        c.id = static_cast<int>(i);
        if (node.contains("id")) {
          if (node["id"].is_number_integer()) {
            c.id = node["id"].get<int>();
          } else {
            check.fail(path + ".id", "must be an integer");
          }
        }
        if (const auto* w = check.field(node, "w", path)) {
          c.w = check.per_slot(*w, path + ".w", T);
          if (c.w.size() == T && !all_positive(c.w)) {
            check.fail(path + ".w", "w must be strictly positive in every slot");
          }
        }
        if (const auto* a = check.field(node, "alpha", path)) {
          c.alpha = check.number(*a, path + ".alpha");
          if (!(c.alpha > 0.0)) {
            check.fail(path + ".alpha", "alpha must be strictly positive");
          }
        }
        if (const auto* lo = check.field(node, "d_min", path)) {
          c.d_min = check.number(*lo, path + ".d_min");
          if (!(c.d_min >= 0.0)) {
            check.fail(path + ".d_min", "d_min must be nonnegative");
          }
        }
        if (const auto* hi = check.field(node, "d_max", path)) {
          c.d_max = check.number(*hi, path + ".d_max");
          if (c.d_min > c.d_max) {
            check.fail(path + ".d_max", "d_min exceeds d_max");
          }
        }
        if (c.w.size() == T && c.alpha > 0.0 && std::isfinite(c.alpha)) {
          double reachable = 0.0;
          for (std::size_t t = 0; t < T; ++t) reachable += c.satiation(t);
          if (c.d_min > reachable) {
            check.fail(path + ".d_min",
                       "infeasible scenario: d_min exceeds the sum of satiation "
                       "points w/alpha");
          }
        }
        sc.customers.push_back(std::move(c));
      }
    }
  }

  if (!check.ok()) throw ScenarioError(std::move(check.issues()));
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({path + ": cannot open scenario file"});
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError({path + ": " + e.what()});
  }
  return validate_scenario(doc);
}

nlohmann::json to_json(const Scenario& sc) {
  nlohmann::json doc;
  doc["num_slots"] = sc.num_slots;
  doc["blocks"] = {{"b", sc.blocks.b}};
  doc["cost"] = {{"beta1", sc.cost.beta1}, {"beta2", sc.cost.beta2}};
  doc["customers"] = nlohmann::json::array();
  for (const auto& c : sc.customers) {
    doc["customers"].push_back({{"id", c.id},
                                {"w", c.w},
                                {"alpha", c.alpha},
                                {"d_min", c.d_min},
                                {"d_max", c.d_max}});
  }
  return doc;
}

}  // namespace drm
