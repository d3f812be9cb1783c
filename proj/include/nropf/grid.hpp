#pragma once

// Power-network data model: buses, generators, branches, case files and load
// perturbation. Quantities are MW for power and per unit (100 MVA base) for
// reactance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nropf/common.hpp"

namespace nropf {

struct Bus {
  int id = 0;
  double load = 0.0;  // MW
};

struct Generator {
  int id = 0;
  int bus = 0;
  double p_min = 0.0;  // MW
  double p_max = 0.0;  // MW
  double cost = 0.0;   // $/MWh
};

struct Branch {
  int id = 0;
  int from = 0;
  int to = 0;
  double reactance = 0.0;  // p.u.
  double rate_a = 0.0;     // MW
  bool switchable = true;
};

/// Per-bus demand in MW, indexed by bus position (Network::buses() order).
using LoadVector = std::vector<double>;

inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

/// Immutable power network. Entities are kept sorted by id so positions are
/// dense and canonical; cross references stay as ids and are resolved once.
class Network {
 public:
  Network() = default;

  Network(std::vector<Bus> buses, std::vector<Generator> generators, std::vector<Branch> branches,
          int reference_bus)
      : buses_(std::move(buses)),
        generators_(std::move(generators)),
        branches_(std::move(branches)),
        reference_bus_(reference_bus) {
    auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
    std::stable_sort(buses_.begin(), buses_.end(), by_id);
    std::stable_sort(generators_.begin(), generators_.end(), by_id);
    std::stable_sort(branches_.begin(), branches_.end(), by_id);
    for (std::size_t i = 0; i < buses_.size(); ++i) bus_pos_.emplace(buses_[i].id, i);
    for (std::size_t k = 0; k < branches_.size(); ++k) branch_pos_.emplace(branches_[k].id, k);
    from_.reserve(branches_.size());
    to_.reserve(branches_.size());
    for (const auto& br : branches_) {
      from_.push_back(lookup(br.from));
      to_.push_back(lookup(br.to));
    }
    for (const auto& g : generators_) gen_bus_.push_back(lookup(g.bus));
    reference_ = lookup(reference_bus_);
  }

  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Generator>& generators() const noexcept { return generators_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  int reference_bus() const noexcept { return reference_bus_; }

  std::size_t bus_count() const noexcept { return buses_.size(); }
  std::size_t generator_count() const noexcept { return generators_.size(); }
  std::size_t branch_count() const noexcept { return branches_.size(); }

  /// Position of a bus/branch id, or kNoIndex.
  std::size_t find_bus(int id) const { return lookup(id); }
  std::size_t find_branch(int id) const {
    auto it = branch_pos_.find(id);
    return it == branch_pos_.end() ? kNoIndex : it->second;
  }

  std::size_t from_index(std::size_t branch) const { return from_[branch]; }
  std::size_t to_index(std::size_t branch) const { return to_[branch]; }
  std::size_t generator_bus_index(std::size_t gen) const { return gen_bus_[gen]; }
  std::size_t reference_index() const noexcept { return reference_; }

  LoadVector base_loads() const {
    LoadVector out;
    out.reserve(buses_.size());
    for (const auto& b : buses_) out.push_back(b.load);
    return out;
  }

  double total_load() const {
    double s = 0.0;
    for (const auto& b : buses_) s += b.load;
    return s;
  }

  double total_capacity() const {
    double s = 0.0;
    for (const auto& g : generators_) s += g.p_max;
    return s;
  }

  std::vector<std::size_t> switchable_branches() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < branches_.size(); ++k)
      if (branches_[k].switchable) out.push_back(k);
    return out;
  }

  /// Same topology and generators, new base loads (by position).
  Network with_loads(const LoadVector& loads) const {
    auto buses = buses_;
    for (std::size_t i = 0; i < buses.size() && i < loads.size(); ++i) buses[i].load = loads[i];
    return Network(std::move(buses), generators_, branches_, reference_bus_);
  }

 private:
  std::size_t lookup(int id) const {
    auto it = bus_pos_.find(id);
    return it == bus_pos_.end() ? kNoIndex : it->second;
  }

  std::vector<Bus> buses_;
  std::vector<Generator> generators_;
  std::vector<Branch> branches_;
  int reference_bus_ = 0;

  std::unordered_map<int, std::size_t> bus_pos_;
  std::unordered_map<int, std::size_t> branch_pos_;
  std::vector<std::size_t> from_;
  std::vector<std::size_t> to_;
  std::vector<std::size_t> gen_bus_;
  std::size_t reference_ = kNoIndex;
};

// ---------------------------------------------------------------------------
// Validation

enum class IssueKind {
  DuplicateId,
  NegativeLoad,
  DanglingReference,
  GeneratorLimits,
  NegativeCost,
  NonpositiveReactance,
  NonpositiveRating,
  SelfLoop,
  NoGenerator,
  InsufficientCapacity,
  Disconnected,
};

inline std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::DuplicateId: return "duplicate id";
    case IssueKind::NegativeLoad: return "negative load";
    case IssueKind::DanglingReference: return "dangling reference";
    case IssueKind::GeneratorLimits: return "generator limits";
    case IssueKind::NegativeCost: return "negative cost";
    case IssueKind::NonpositiveReactance: return "nonpositive reactance";
    case IssueKind::NonpositiveRating: return "nonpositive rating";
    case IssueKind::SelfLoop: return "self loop";
    case IssueKind::NoGenerator: return "no generator";
    case IssueKind::InsufficientCapacity: return "insufficient capacity";
    case IssueKind::Disconnected: return "disconnected";
  }
  return "unknown";
}

struct ValidationIssue {
  IssueKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const noexcept { return issues.empty(); }
  bool has(IssueKind kind) const {
    return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.kind == kind; });
  }
  std::string to_string() const {
    std::string out;
    for (const auto& i : issues) {
      if (!out.empty()) out += "; ";
      out += i.message;
    }
    return out;
  }
};

/// Required ratio of installed capacity to total load.
inline constexpr double kCapacityMargin = 1.05;

/// Bus positions reachable from `start` over branches whose `in_service` flag is set
/// (all branches when the mask is empty).
inline std::vector<bool> reachable_buses(const Network& net, std::size_t start,
                                         const std::vector<int>& in_service = {}) {
  std::vector<std::vector<std::size_t>> adj(net.bus_count());
  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    if (!in_service.empty() && in_service[k] == 0) continue;
    const std::size_t f = net.from_index(k), t = net.to_index(k);
    if (f == kNoIndex || t == kNoIndex) continue;
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  std::vector<bool> seen(net.bus_count(), false);
  if (start >= net.bus_count()) return seen;
  std::queue<std::size_t> frontier;
  frontier.push(start);
  seen[start] = true;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        frontier.push(v);
      }
  }
  return seen;
}

inline ValidationReport validate_network(const Network& net) {
  ValidationReport rep;
  auto add = [&](IssueKind kind, std::string msg) { rep.issues.push_back({kind, std::move(msg)}); };

  auto check_unique = [&](const auto& items, const char* what) {
    for (std::size_t i = 1; i < items.size(); ++i)
      if (items[i].id == items[i - 1].id)
        add(IssueKind::DuplicateId, std::string(what) + " id " + std::to_string(items[i].id) + " is not unique");
  };
  check_unique(net.buses(), "bus");
  check_unique(net.generators(), "generator");
  check_unique(net.branches(), "branch");

  for (const auto& b : net.buses())
    if (!(b.load >= 0.0) || !std::isfinite(b.load))
      add(IssueKind::NegativeLoad, "bus " + std::to_string(b.id) + ": negative load " + format_double(b.load));

  for (std::size_t g = 0; g < net.generator_count(); ++g) {
    const auto& gen = net.generators()[g];
    const std::string name = "generator " + std::to_string(gen.id);
    if (net.generator_bus_index(g) == kNoIndex)
      add(IssueKind::DanglingReference, name + " references unknown bus " + std::to_string(gen.bus));
    if (!(gen.p_min >= 0.0 && gen.p_min <= gen.p_max) || !std::isfinite(gen.p_max))
      add(IssueKind::GeneratorLimits, name + ": limits must satisfy 0 <= p_min <= p_max");
    if (!(gen.cost >= 0.0) || !std::isfinite(gen.cost))
      add(IssueKind::NegativeCost, name + ": negative cost " + format_double(gen.cost));
  }

  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    const auto& br = net.branches()[k];
    const std::string name = "branch " + std::to_string(br.id);
    if (net.from_index(k) == kNoIndex)
      add(IssueKind::DanglingReference, name + " references unknown bus " + std::to_string(br.from));
    if (net.to_index(k) == kNoIndex)
      add(IssueKind::DanglingReference, name + " references unknown bus " + std::to_string(br.to));
    if (!(br.reactance > 0.0) || !std::isfinite(br.reactance))
      add(IssueKind::NonpositiveReactance, name + ": nonpositive reactance " + format_double(br.reactance));
    if (!(br.rate_a > 0.0) || !std::isfinite(br.rate_a))
      add(IssueKind::NonpositiveRating, name + ": nonpositive rating " + format_double(br.rate_a));
    if (br.from == br.to) add(IssueKind::SelfLoop, name + ": from and to are the same bus");
  }

  if (net.reference_index() == kNoIndex)
    add(IssueKind::DanglingReference,
        "reference bus " + std::to_string(net.reference_bus()) + " does not exist");

  if (net.generators().empty()) add(IssueKind::NoGenerator, "network has no generator");

  const double load = net.total_load();
  if (net.total_capacity() < kCapacityMargin * load)
    add(IssueKind::InsufficientCapacity, "total capacity " + format_double(net.total_capacity()) +
                                             " MW is below 1.05 x total load " + format_double(load) + " MW");

  if (net.bus_count() > 0) {
    const std::size_t start = net.reference_index() == kNoIndex ? 0 : net.reference_index();
    const auto seen = reachable_buses(net, start);
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i])
        add(IssueKind::Disconnected, "bus " + std::to_string(net.buses()[i].id) +
                                         " is not connected to bus " +
                                         std::to_string(net.buses()[start].id));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Case files (JSON documents with sections buses, generators, branches,
// reference_bus).

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

inline double number_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw ParseError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline int integer_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_integer()) throw ParseError(where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

inline const nlohmann::json& array_section(const nlohmann::json& doc, const char* key) {
  const auto& v = require(doc, key, "case");
  if (!v.is_array()) throw ParseError(std::string("case: section '") + key + "' must be an array");
  return v;
}

}  // namespace detail

/// Parses and validates a case document. Throws ParseError for malformed text
/// (with line/column) and SemanticError naming the offending entity.
inline Network parse_case(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("case syntax error", line, col);
  }
  if (!doc.is_object()) throw ParseError("case: top level must be an object");

  std::vector<Bus> buses;
  std::size_t i = 0;
  for (const auto& b : detail::array_section(doc, "buses")) {
    const std::string where = "buses[" + std::to_string(i++) + "]";
    if (!b.is_object()) throw ParseError(where + ": must be an object");
    buses.push_back({detail::integer_field(b, "id", where), detail::number_field(b, "load", where)});
  }

  std::vector<Generator> gens;
  i = 0;
  for (const auto& g : detail::array_section(doc, "generators")) {
    const std::string where = "generators[" + std::to_string(i++) + "]";
    if (!g.is_object()) throw ParseError(where + ": must be an object");
    gens.push_back({detail::integer_field(g, "id", where), detail::integer_field(g, "bus", where),
                    detail::number_field(g, "p_min", where), detail::number_field(g, "p_max", where),
                    detail::number_field(g, "cost", where)});
  }

  std::vector<Branch> branches;
  i = 0;
  for (const auto& br : detail::array_section(doc, "branches")) {
    const std::string where = "branches[" + std::to_string(i++) + "]";
    if (!br.is_object()) throw ParseError(where + ": must be an object");
    Branch b;
    b.id = detail::integer_field(br, "id", where);
    b.from = detail::integer_field(br, "from", where);
    b.to = detail::integer_field(br, "to", where);
    b.reactance = detail::number_field(br, "reactance", where);
    b.rate_a = detail::number_field(br, "rate_a", where);
    if (auto it = br.find("switchable"); it != br.end()) {
      if (!it->is_boolean()) throw ParseError(where + ": field 'switchable' must be a boolean");
      b.switchable = it->get<bool>();
    }
    branches.push_back(b);
  }

  const int ref = detail::integer_field(doc, "reference_bus", "case");
  Network net(std::move(buses), std::move(gens), std::move(branches), ref);
  const auto report = validate_network(net);
  if (!report.empty()) throw SemanticError("invalid case: " + report.to_string());
  return net;
}

inline nlohmann::json case_to_json(const Network& net) {
  nlohmann::json doc;
  doc["buses"] = nlohmann::json::array();
  for (const auto& b : net.buses()) doc["buses"].push_back({{"id", b.id}, {"load", b.load}});
  doc["generators"] = nlohmann::json::array();
  for (const auto& g : net.generators())
    doc["generators"].push_back(
        {{"id", g.id}, {"bus", g.bus}, {"p_min", g.p_min}, {"p_max", g.p_max}, {"cost", g.cost}});
  doc["branches"] = nlohmann::json::array();
  for (const auto& br : net.branches())
    doc["branches"].push_back({{"id", br.id},
                               {"from", br.from},
                               {"to", br.to},
                               {"reactance", br.reactance},
                               {"rate_a", br.rate_a},
                               {"switchable", br.switchable}});
  doc["reference_bus"] = net.reference_bus();
  return doc;
}

inline std::string serialize_case(const Network& net) { return case_to_json(net).dump(2) + "\n"; }

/// Content hash of the canonical case document.
inline std::string network_fingerprint(const Network& net) {
  return hex64(fnv1a64(case_to_json(net).dump()));
}

// ---------------------------------------------------------------------------
// Load profiles

/// Draws each bus load independently and uniformly from [d(1-delta), d(1+delta)].
inline LoadVector perturb_loads(const Network& net, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("perturb_loads: delta must be in [0, 1)");
  CounterRng rng(seed);
  LoadVector out;
  out.reserve(net.bus_count());
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    const double u = CounterRng::to_unit(rng.at(i));
    out.push_back(net.buses()[i].load * (1.0 + delta * (2.0 * u - 1.0)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in cases

/// Three buses, cheap generation at bus 1, expensive generation and 100 MW of
/// load at bus 3. Opening line 3 (1-3, rating 50) strictly lowers cost.
inline Network triangle3() {
  return Network({{1, 0.0}, {2, 0.0}, {3, 100.0}},
                 {{1, 1, 0.0, 150.0, 10.0}, {3, 3, 0.0, 100.0, 100.0}},
                 {{1, 1, 2, 0.1, 100.0, true}, {2, 2, 3, 0.1, 100.0, true}, {3, 1, 3, 0.1, 50.0, true}},
                 1);
}

/// Random connected network for property tests: a random spanning tree plus
/// extra branches between distinct bus pairs, ratings sized to congest.
inline Network synthetic_network(std::size_t bus_count, std::size_t branch_count, std::uint64_t seed) {
  if (bus_count < 2 || branch_count + 1 < bus_count)
    throw std::invalid_argument("synthetic_network: need >= 2 buses and >= buses-1 branches");
  CounterRng rng(seed);
  std::vector<Bus> buses;
  double load = 0.0;
  for (std::size_t i = 0; i < bus_count; ++i) {
    const double d = i == 0 ? 0.0 : std::round(rng.uniform(10.0, 80.0));
    buses.push_back({static_cast<int>(i + 1), d});
    load += d;
  }

  std::vector<Generator> gens;
  const std::size_t gen_count = std::max<std::size_t>(2, bus_count / 2);
  std::vector<std::size_t> gen_buses{0};
  while (gen_buses.size() < gen_count) {
    const std::size_t b = 1 + rng.below(bus_count - 1);
    if (std::find(gen_buses.begin(), gen_buses.end(), b) == gen_buses.end()) gen_buses.push_back(b);
  }
  for (std::size_t g = 0; g < gen_count; ++g) {
    const double cap = std::round(1.6 * load / static_cast<double>(gen_count) * rng.uniform(0.8, 1.4));
    const double cost = g == 0 ? 10.0 : std::round(rng.uniform(20.0, 100.0));
    gens.push_back({static_cast<int>(g + 1), static_cast<int>(gen_buses[g] + 1), 0.0, cap, cost});
  }
  double cap = 0.0;
  for (const auto& g : gens) cap += g.p_max;
  if (cap < kCapacityMargin * load) gens.front().p_max += std::ceil(kCapacityMargin * load - cap) + 1.0;

  std::vector<Branch> branches;
  std::set<std::pair<int, int>> used;
  auto add_branch = [&](int a, int b) {
    const int id = static_cast<int>(branches.size() + 1);
    const double x = std::round(rng.uniform(0.05, 0.3) * 100.0) / 100.0;
    const double rate = std::round(rng.uniform(0.25, 0.7) * load);
    branches.push_back({id, a, b, x, std::max(rate, 10.0), true});
    used.insert({std::min(a, b), std::max(a, b)});
  };
  for (std::size_t i = 1; i < bus_count; ++i)
    add_branch(static_cast<int>(rng.below(i) + 1), static_cast<int>(i + 1));
  std::size_t attempts = 0;
  while (branches.size() < branch_count && attempts++ < 1000) {
    const int a = static_cast<int>(rng.below(bus_count) + 1);
    const int b = static_cast<int>(rng.below(bus_count) + 1);
    if (a == b) continue;
    if (used.count({std::min(a, b), std::max(a, b)}) &&
        used.size() < bus_count * (bus_count - 1) / 2)
      continue;
    add_branch(a, b);
  }
  return Network(std::move(buses), std::move(gens), std::move(branches), 1);
}

}  // namespace nropf
