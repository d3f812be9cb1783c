#pragma once

// DC optimal power flow with a system reserve requirement, and its
// network-reconfigured (line switching) extension written with big-M rows.
//
// Columns: dispatch P_g and reserve R_g per generator, angle theta_n per bus,
// flow P_k per branch, and one switching column NR_k per free branch.
//
//   min  sum_g c_g P_g
//   s.t. sum_g R_g                     = 0.05 * sum_n d_n
//        P_g + R_g                    <= Pmax_g,  P_g >= Pmin_g,  R_g >= 0
//        P_k - B_k (theta_f - theta_t) = 0              (line in service)
//        -Rate_k <= P_k <= Rate_k
//        sum_{g at n} P_g - sum_{k from n} P_k + sum_{k to n} P_k = d_n
//
// with B_k = base_mva / x_k. For a free branch the flow definition is relaxed
// to |P_k - B_k (theta_f - theta_t)| <= M_k (1 - NR_k) and the rating becomes
// |P_k| <= NR_k Rate_k.

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nropf/common.hpp"
#include "nropf/grid.hpp"
#include "nropf/lp.hpp"

namespace nropf {

inline constexpr double kBaseMva = 100.0;
inline constexpr double kReserveFraction = 0.05;

struct OpfSolution {
  std::vector<double> dispatch;  // MW per generator
  std::vector<double> reserve;   // MW per generator
  std::vector<double> angle;     // rad per bus
  std::vector<double> flow;      // MW per branch, positive from -> to
  std::vector<int> switching;    // 1 = in service
  double cost = 0.0;             // $
  double solve_time = 0.0;       // s
};

/// Fixed switching statuses keyed by branch id.
using SwitchingMap = std::map<int, int>;

struct NrOpfOptions {
  /// Bus angles are boxed to [-angle_bound, angle_bound] around the reference;
  /// M_k = 2 * angle_bound * base_mva / x_k then always deactivates an open line.
  double angle_bound = std::numbers::pi;
};

struct MixedProgram {
  LinearProgram lp;
  std::vector<std::size_t> binary_column;  // per branch; LinearProgram::kNoColumn when fixed
  std::vector<int> fixed_status;           // per branch; -1 when free
  std::vector<double> big_m;               // per branch, MW; 0 when fixed

  std::vector<std::size_t> free_branches() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < fixed_status.size(); ++k)
      if (fixed_status[k] < 0) out.push_back(k);
    return out;
  }
  std::size_t free_count() const { return free_branches().size(); }
};

namespace detail {

inline void require_valid(const Network& net, const LoadVector& loads) {
  if (const auto rep = validate_network(net); !rep.empty()) throw SemanticError("invalid network: " + rep.to_string());
  if (loads.size() != net.bus_count())
    throw std::invalid_argument("load vector has " + std::to_string(loads.size()) + " entries, network has " +
                                std::to_string(net.bus_count()) + " buses");
  for (double d : loads)
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("load vector entries must be finite and >= 0");
}

struct OpfColumns {
  std::vector<std::size_t> dispatch, reserve, angle, flow;
};

// Dispatch, reserve, angle and flow columns plus the reserve and capacity rows.
inline OpfColumns add_dispatch_block(LinearProgram& lp, const Network& net, const LoadVector& loads,
                                     double angle_bound) {
  OpfColumns c;
  for (std::size_t g = 0; g < net.generator_count(); ++g) {
    const auto& gen = net.generators()[g];
    c.dispatch.push_back(lp.add_variable(gen.cost, gen.p_min, gen.p_max, {VarKind::Dispatch, g},
                                         "Pg[" + std::to_string(gen.id) + "]"));
  }
  for (std::size_t g = 0; g < net.generator_count(); ++g)
    c.reserve.push_back(lp.add_variable(0.0, 0.0, kInfinity, {VarKind::Reserve, g},
                                        "Rg[" + std::to_string(net.generators()[g].id) + "]"));
  for (std::size_t n = 0; n < net.bus_count(); ++n) {
    const bool ref = n == net.reference_index();
    c.angle.push_back(lp.add_variable(0.0, ref ? 0.0 : -angle_bound, ref ? 0.0 : angle_bound, {VarKind::Angle, n},
                                      "theta[" + std::to_string(net.buses()[n].id) + "]"));
  }
  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    const auto& br = net.branches()[k];
    c.flow.push_back(lp.add_variable(0.0, -br.rate_a, br.rate_a, {VarKind::Flow, k},
                                     "Pk[" + std::to_string(br.id) + "]"));
  }

  double total = 0.0;
  for (double d : loads) total += d;
  std::vector<std::pair<std::size_t, double>> terms;
  for (std::size_t col : c.reserve) terms.push_back({col, 1.0});
  lp.add_row(terms, Sense::Equal, kReserveFraction * total, "reserve");
  for (std::size_t g = 0; g < net.generator_count(); ++g)
    lp.add_row({{c.dispatch[g], 1.0}, {c.reserve[g], 1.0}}, Sense::LessEqual, net.generators()[g].p_max,
               "capacity[" + std::to_string(net.generators()[g].id) + "]");
  return c;
}

inline std::vector<std::pair<std::size_t, double>> flow_definition_terms(const Network& net, const OpfColumns& c,
                                                                         std::size_t k) {
  const double b = kBaseMva / net.branches()[k].reactance;
  return {{c.flow[k], 1.0}, {c.angle[net.from_index(k)], -b}, {c.angle[net.to_index(k)], b}};
}

inline void add_balance_rows(LinearProgram& lp, const Network& net, const LoadVector& loads, const OpfColumns& c) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(net.bus_count());
  for (std::size_t g = 0; g < net.generator_count(); ++g)
    rows[net.generator_bus_index(g)].push_back({c.dispatch[g], 1.0});
  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    rows[net.from_index(k)].push_back({c.flow[k], -1.0});
    rows[net.to_index(k)].push_back({c.flow[k], 1.0});
  }
  for (std::size_t n = 0; n < net.bus_count(); ++n)
    lp.add_row(rows[n], Sense::Equal, loads[n], "balance[" + std::to_string(net.buses()[n].id) + "]");
}

}  // namespace detail

/// DC-OPF with every branch in service. Angles are free apart from the
/// reference bus, which is fixed at zero.
inline LinearProgram build_opf(const Network& net, const LoadVector& loads) {
  detail::require_valid(net, loads);
  LinearProgram lp;
  const auto c = detail::add_dispatch_block(lp, net, loads, kInfinity);
  for (std::size_t k = 0; k < net.branch_count(); ++k)
    lp.add_row(detail::flow_definition_terms(net, c, k), Sense::Equal, 0.0,
               "flow[" + std::to_string(net.branches()[k].id) + "]");
  detail::add_balance_rows(lp, net, loads, c);
  return lp;
}

/// Big-M NR-OPF. Branches listed in `fixed` (by id) and non-switchable branches
/// get constant statuses; every other branch gets a [0,1] switching column.
inline MixedProgram build_nropf(const Network& net, const LoadVector& loads, const SwitchingMap& fixed = {},
                                const NrOpfOptions& options = {}) {
  detail::require_valid(net, loads);
  if (!(options.angle_bound > 0.0) || !std::isfinite(options.angle_bound))
    throw std::invalid_argument("build_nropf: angle bound must be positive and finite");

  MixedProgram mp;
  mp.fixed_status.assign(net.branch_count(), -1);
  for (const auto& [id, status] : fixed) {
    const std::size_t k = net.find_branch(id);
    if (k == kNoIndex) throw SemanticError("fixed status given for unknown branch " + std::to_string(id));
    if (status != 0 && status != 1)
      throw std::invalid_argument("branch " + std::to_string(id) + ": status must be 0 or 1");
    mp.fixed_status[k] = status;
  }
  for (std::size_t k = 0; k < net.branch_count(); ++k)
    if (!net.branches()[k].switchable && mp.fixed_status[k] < 0) mp.fixed_status[k] = 1;

  auto& lp = mp.lp;
  const auto c = detail::add_dispatch_block(lp, net, loads, options.angle_bound);
  mp.binary_column.assign(net.branch_count(), LinearProgram::kNoColumn);
  mp.big_m.assign(net.branch_count(), 0.0);

  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    const auto& br = net.branches()[k];
    const std::string tag = "[" + std::to_string(br.id) + "]";
    if (mp.fixed_status[k] == 0) {
      lp.lower[c.flow[k]] = 0.0;
      lp.upper[c.flow[k]] = 0.0;
      continue;
    }
    auto terms = detail::flow_definition_terms(net, c, k);
    if (mp.fixed_status[k] == 1) {
      lp.add_row(terms, Sense::Equal, 0.0, "flow" + tag);
      continue;
    }
    const double M = 2.0 * options.angle_bound * kBaseMva / br.reactance;
    const std::size_t nr = lp.add_variable(0.0, 0.0, 1.0, {VarKind::Switch, k}, "NR" + tag);
    lp.start_at_upper[nr] = true;
    mp.binary_column[k] = nr;
    mp.big_m[k] = M;

    auto lower_row = terms;
    lower_row.push_back({nr, -M});
    lp.add_row(lower_row, Sense::GreaterEqual, -M, "flow_lo" + tag);
    auto upper_row = terms;
    upper_row.push_back({nr, M});
    lp.add_row(upper_row, Sense::LessEqual, M, "flow_hi" + tag);
    lp.add_row({{c.flow[k], 1.0}, {nr, -br.rate_a}}, Sense::LessEqual, 0.0, "rate_hi" + tag);
    lp.add_row({{c.flow[k], 1.0}, {nr, br.rate_a}}, Sense::GreaterEqual, 0.0, "rate_lo" + tag);
  }
  detail::add_balance_rows(lp, net, loads, c);
  return mp;
}

// ---------------------------------------------------------------------------
// Solution extraction

namespace detail {

inline OpfSolution unpack(const LinearProgram& lp, std::span<const double> x) {
  if (x.size() != lp.variable_count()) throw std::logic_error("extract_solution: primal has the wrong length");
  std::size_t G = 0, N = 0, K = 0;
  for (const auto& l : lp.labels) {
    if (l.kind == VarKind::Dispatch) G = std::max(G, l.index + 1);
    if (l.kind == VarKind::Angle) N = std::max(N, l.index + 1);
    if (l.kind == VarKind::Flow) K = std::max(K, l.index + 1);
  }
  OpfSolution sol;
  sol.dispatch.assign(G, kInfinity);
  sol.reserve.assign(G, kInfinity);
  sol.angle.assign(N, kInfinity);
  sol.flow.assign(K, kInfinity);
  sol.switching.assign(K, 1);
  auto put = [](std::vector<double>& v, std::size_t i, double value) {
    if (i >= v.size() || v[i] != kInfinity) throw std::logic_error("extract_solution: duplicate or stray label");
    v[i] = value;
  };
  double cost = 0.0;
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    const auto& l = lp.labels[j];
    switch (l.kind) {
      case VarKind::Dispatch:
        put(sol.dispatch, l.index, x[j]);
        cost += lp.objective[j] * x[j];
        break;
      case VarKind::Reserve: put(sol.reserve, l.index, x[j]); break;
      case VarKind::Angle: put(sol.angle, l.index, x[j]); break;
      case VarKind::Flow: put(sol.flow, l.index, x[j]); break;
      default: break;
    }
  }
  for (const auto* v : {&sol.dispatch, &sol.reserve, &sol.angle, &sol.flow})
    for (double e : *v)
      if (e == kInfinity) throw std::logic_error("extract_solution: missing label for a grid quantity");
  sol.cost = cost;
  return sol;
}

}  // namespace detail

/// Solution of a build_opf instance; every branch is in service.
inline OpfSolution extract_solution(const LinearProgram& opf, const LpOutcome& raw) {
  if (raw.status != LpStatus::Optimal) throw std::logic_error("extract_solution: outcome is not optimal");
  return detail::unpack(opf, raw.primal);
}

/// Solution of a build_nropf instance at an integral point.
inline OpfSolution extract_solution(const MixedProgram& program, std::span<const double> primal) {
  auto sol = detail::unpack(program.lp, primal);
  if (sol.switching.size() != program.fixed_status.size())
    throw std::logic_error("extract_solution: branch count does not match the program");
  for (std::size_t k = 0; k < program.fixed_status.size(); ++k) {
    if (program.fixed_status[k] >= 0) {
      sol.switching[k] = program.fixed_status[k];
    } else {
      const double v = primal[program.binary_column[k]];
      sol.switching[k] = v >= 0.5 ? 1 : 0;
    }
  }
  return sol;
}

inline OpfSolution extract_solution(const MixedProgram& program, const LpOutcome& raw) {
  if (raw.status != LpStatus::Optimal) throw std::logic_error("extract_solution: outcome is not optimal");
  return extract_solution(program, std::span<const double>(raw.primal));
}

// ---------------------------------------------------------------------------
// Verification

enum class ConstraintKind {
  ReserveTotal,
  ReserveSign,
  GenerationMin,
  GenerationMax,
  FlowDefinition,
  LineLimit,
  OpenLineFlow,
  NodalBalance,
  ReferenceAngle,
  SwitchingValue,
  CostConsistency,
  Shape,
};

inline const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::ReserveTotal: return "reserve_total";
    case ConstraintKind::ReserveSign: return "reserve_sign";
    case ConstraintKind::GenerationMin: return "generation_min";
    case ConstraintKind::GenerationMax: return "generation_max";
    case ConstraintKind::FlowDefinition: return "flow_definition";
    case ConstraintKind::LineLimit: return "line_limit";
    case ConstraintKind::OpenLineFlow: return "open_line_flow";
    case ConstraintKind::NodalBalance: return "nodal_balance";
    case ConstraintKind::ReferenceAngle: return "reference_angle";
    case ConstraintKind::SwitchingValue: return "switching_value";
    case ConstraintKind::CostConsistency: return "cost_consistency";
    case ConstraintKind::Shape: return "shape";
  }
  return "unknown";
}

struct Violation {
  ConstraintKind constraint;
  int entity;  // generator, branch or bus id; 0 for system-wide rows
  double magnitude;
};

struct VerificationReport {
  std::vector<Violation> violations;

  bool empty() const noexcept { return violations.empty(); }
  std::size_t count(ConstraintKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [&](const auto& v) { return v.constraint == kind; }));
  }
  std::string to_string() const {
    std::string out;
    for (const auto& v : violations)
      out += std::string(nropf::to_string(v.constraint)) + " entity " + std::to_string(v.entity) + " magnitude " +
             format_double(v.magnitude) + "\n";
    return out;
  }
};

/// Checks a solution against the reserve, generation, balance and (for
/// in-service lines) flow and rating constraints; open lines must carry no flow.
inline VerificationReport verify_solution(const Network& net, const LoadVector& loads, const OpfSolution& sol,
                                          double tol = 1e-6) {
  if (!(tol > 0.0)) throw std::invalid_argument("verify_solution: tolerance must be positive");
  VerificationReport rep;
  auto flag = [&](ConstraintKind kind, int entity, double magnitude) {
    if (magnitude > tol || !std::isfinite(magnitude)) rep.violations.push_back({kind, entity, magnitude});
  };
  const std::size_t G = net.generator_count(), N = net.bus_count(), K = net.branch_count();
  if (sol.dispatch.size() != G || sol.reserve.size() != G || sol.angle.size() != N || sol.flow.size() != K ||
      sol.switching.size() != K || loads.size() != N) {
    rep.violations.push_back({ConstraintKind::Shape, 0, kInfinity});
    return rep;
  }

  double total_load = 0.0, total_reserve = 0.0, cost = 0.0;
  for (double d : loads) total_load += d;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& gen = net.generators()[g];
    total_reserve += sol.reserve[g];
    cost += gen.cost * sol.dispatch[g];
    flag(ConstraintKind::ReserveSign, gen.id, -sol.reserve[g]);
    flag(ConstraintKind::GenerationMin, gen.id, gen.p_min - sol.dispatch[g]);
    flag(ConstraintKind::GenerationMax, gen.id, sol.dispatch[g] + sol.reserve[g] - gen.p_max);
  }
  flag(ConstraintKind::ReserveTotal, 0, std::abs(total_reserve - kReserveFraction * total_load));

  std::vector<double> balance(N, 0.0);
  for (std::size_t g = 0; g < G; ++g) balance[net.generator_bus_index(g)] += sol.dispatch[g];
  for (std::size_t k = 0; k < K; ++k) {
    const auto& br = net.branches()[k];
    const std::size_t f = net.from_index(k), t = net.to_index(k);
    const int status = sol.switching[k];
    if (status != 0 && status != 1) {
      flag(ConstraintKind::SwitchingValue, br.id, kInfinity);
      continue;
    }
    if (status == 0 && !br.switchable) flag(ConstraintKind::SwitchingValue, br.id, 1.0);
    balance[f] -= sol.flow[k];
    balance[t] += sol.flow[k];
    if (status == 1) {
      const double implied = kBaseMva * (sol.angle[f] - sol.angle[t]) / br.reactance;
      flag(ConstraintKind::FlowDefinition, br.id, std::abs(sol.flow[k] - implied));
      flag(ConstraintKind::LineLimit, br.id, std::abs(sol.flow[k]) - br.rate_a);
    } else {
      flag(ConstraintKind::OpenLineFlow, br.id, std::abs(sol.flow[k]));
    }
  }
  for (std::size_t n = 0; n < N; ++n)
    flag(ConstraintKind::NodalBalance, net.buses()[n].id, std::abs(balance[n] - loads[n]));
  if (net.reference_index() != kNoIndex)
    flag(ConstraintKind::ReferenceAngle, net.reference_bus(), std::abs(sol.angle[net.reference_index()]));
  if (std::abs(sol.cost - cost) > 1e-8 * std::max(1.0, std::abs(cost)))
    rep.violations.push_back({ConstraintKind::CostConsistency, 0, std::abs(sol.cost - cost)});
  return rep;
}

// ---------------------------------------------------------------------------
// Solution records

inline nlohmann::json solution_to_json(const Network& net, const LoadVector& loads, const OpfSolution& sol) {
  nlohmann::json doc;
  doc["format"] = "nropf-solution";
  doc["version"] = 1;
  doc["fingerprint"] = network_fingerprint(net);
  doc["loads"] = loads;
  doc["dispatch"] = sol.dispatch;
  doc["reserve"] = sol.reserve;
  doc["angle"] = sol.angle;
  doc["flow"] = sol.flow;
  doc["switching"] = sol.switching;
  doc["cost"] = sol.cost;
  doc["solve_time"] = sol.solve_time;
  return doc;
}

inline std::string serialize_solution(const Network& net, const LoadVector& loads, const OpfSolution& sol) {
  return solution_to_json(net, loads, sol).dump(2) + "\n";
}

struct SolutionRecord {
  std::string fingerprint;
  LoadVector loads;
  OpfSolution solution;
};

inline SolutionRecord parse_solution(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("solution syntax error", line, col);
  }
  try {
    if (doc.at("format") != "nropf-solution") throw ParseError("not a solution record");
    if (doc.at("version") != 1) throw ParseError("unsupported solution record version");
    SolutionRecord rec;
    rec.fingerprint = doc.at("fingerprint").get<std::string>();
    rec.loads = doc.at("loads").get<std::vector<double>>();
    auto& s = rec.solution;
    s.dispatch = doc.at("dispatch").get<std::vector<double>>();
    s.reserve = doc.at("reserve").get<std::vector<double>>();
    s.angle = doc.at("angle").get<std::vector<double>>();
    s.flow = doc.at("flow").get<std::vector<double>>();
    s.switching = doc.at("switching").get<std::vector<int>>();
    s.cost = doc.at("cost").get<double>();
    s.solve_time = doc.at("solve_time").get<double>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("solution record: ") + e.what());
  }
}

}  // namespace nropf
