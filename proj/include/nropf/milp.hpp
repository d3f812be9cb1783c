#pragma once

// Branch-and-bound over the switching binaries of a MixedProgram, plus an
// exhaustive topology enumerator used as a reference.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nropf/common.hpp"
#include "nropf/grid.hpp"
#include "nropf/lp.hpp"
#include "nropf/opf.hpp"

namespace nropf {

enum class MilpStatus { Optimal, Infeasible, GapLimit, NodeLimit, TimeLimit };

inline const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::GapLimit: return "gap_limit";
    case MilpStatus::NodeLimit: return "node_limit";
    case MilpStatus::TimeLimit: return "time_limit";
  }
  return "unknown";
}

/// True when the outcome carries a usable incumbent.
inline bool has_solution(MilpStatus s) { return s != MilpStatus::Infeasible; }

enum class BranchingRule { MostFractional };

struct MilpOptions {
  double mip_gap = 0.0;                // relative
  std::size_t node_limit = 1000000;
  double time_limit = kInfinity;       // seconds
  BranchingRule branching = BranchingRule::MostFractional;
  double integrality_tol = 1e-6;
};

struct MilpOutcome {
  MilpStatus status = MilpStatus::Infeasible;
  std::optional<OpfSolution> incumbent;
  double best_bound = kInfinity;
  std::size_t nodes = 0;
  double wall_time = 0.0;
};

/// One entry per processed node: the node's relaxation value (+inf when
/// infeasible), the global lower bound over unexplored nodes including this
/// one, and the incumbent cost after the node (+inf while none exists).
struct NodeTrace {
  std::size_t node;
  std::size_t depth;
  double relaxation;
  double global_bound;
  double incumbent;
};

namespace detail {

struct BbNode {
  std::vector<std::int8_t> fix;  // per free branch: -1 relaxed, 0 or 1
  double parent_bound;
  std::size_t depth;
  std::size_t seq;
};

inline std::string describe_node(const MixedProgram& mp, const BbNode& node, std::size_t count) {
  std::string s = "node " + std::to_string(count) + " (depth " + std::to_string(node.depth) + ", fixed";
  const auto free = mp.free_branches();
  bool any = false;
  for (std::size_t i = 0; i < free.size(); ++i)
    if (node.fix[i] >= 0) {
      s += " k" + std::to_string(free[i]) + "=" + std::to_string(node.fix[i]);
      any = true;
    }
  return s + (any ? ")" : " none)");
}

}  // namespace detail

/// Best-first/depth-first B&B. Until the first incumbent the search dives
/// (NR=1 child first); afterwards it always expands the open node with the
/// smallest parent bound, ties by creation order. Deterministic.
inline MilpOutcome solve_milp(const MixedProgram& mp, const MilpOptions& options = {},
                              std::vector<NodeTrace>* trace = nullptr) {
  if (!(options.mip_gap >= 0.0)) throw std::invalid_argument("solve_milp: mip_gap must be >= 0");
  if (!(options.integrality_tol > 0.0 && options.integrality_tol < 0.5))
    throw std::invalid_argument("solve_milp: integrality tolerance must lie in (0, 0.5)");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  const auto free = mp.free_branches();
  std::vector<std::size_t> cols;
  for (std::size_t k : free) cols.push_back(mp.binary_column[k]);

  MilpOutcome result;
  double inc_cost = kInfinity;
  double gap_pruned_bound = kInfinity;  // smallest bound discarded only thanks to mip_gap
  std::vector<detail::BbNode> open;
  std::size_t seq = 0;
  open.push_back({std::vector<std::int8_t>(free.size(), -1), -kInfinity, 0, seq++});

  auto tiny = [](double ref) { return 1e-9 * std::max(1.0, std::abs(ref)); };
  auto prune_tol = [&](double ref) { return std::max(options.mip_gap * std::max(1.0, std::abs(ref)), tiny(ref)); };
  auto open_bound = [&] {
    double b = kInfinity;
    for (const auto& n : open) b = std::min(b, n.parent_bound);
    return b;
  };

  std::vector<double> lo(mp.lp.lower), up(mp.lp.upper);
  auto apply = [&](const std::vector<std::int8_t>& fix) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      lo[cols[i]] = fix[i] == 1 ? 1.0 : 0.0;
      up[cols[i]] = fix[i] == 0 ? 0.0 : 1.0;
    }
  };

  std::optional<MilpStatus> stopped;
  while (!open.empty()) {
    if (result.nodes >= options.node_limit) {
      stopped = MilpStatus::NodeLimit;
      break;
    }
    if (elapsed() >= options.time_limit) {
      stopped = MilpStatus::TimeLimit;
      break;
    }
    // Selection: dive while there is no incumbent, best bound afterwards.
    std::size_t pick = open.size() - 1;
    if (result.incumbent) {
      for (std::size_t i = 0; i < open.size(); ++i)
        if (open[i].parent_bound < open[pick].parent_bound ||
            (open[i].parent_bound == open[pick].parent_bound && open[i].seq < open[pick].seq))
          pick = i;
    }
    const detail::BbNode node = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
    if (result.incumbent && node.parent_bound >= inc_cost - prune_tol(inc_cost)) {
      if (node.parent_bound < inc_cost - tiny(inc_cost))
        gap_pruned_bound = std::min(gap_pruned_bound, node.parent_bound);
      continue;
    }
    const double global_before = std::min(node.parent_bound, open_bound());
    const std::size_t number = result.nodes++;

    apply(node.fix);
    LpOutcome lp;
    try {
      lp = solve_lp(mp.lp, lo, up);
    } catch (const NumericalError& e) {
      throw NumericalError(detail::describe_node(mp, node, number) + ": " + e.what());
    }
    auto record = [&](double relax) {
      if (trace)
        trace->push_back({number, node.depth, relax, std::min({global_before, relax, open_bound(), inc_cost}),
                          inc_cost});
    };
    if (lp.status == LpStatus::Unbounded)
      throw NumericalError(detail::describe_node(mp, node, number) + ": relaxation is unbounded");
    if (lp.status == LpStatus::Infeasible) {
      record(kInfinity);
      continue;
    }
    const double bound = std::max(lp.objective, node.parent_bound);
    if (result.incumbent && bound >= inc_cost - prune_tol(inc_cost)) {
      if (bound < inc_cost - tiny(inc_cost)) gap_pruned_bound = std::min(gap_pruned_bound, bound);
      record(lp.objective);
      continue;
    }

    // Most fractional binary; strict comparison keeps the lowest branch id on ties.
    std::size_t branch = cols.size();
    double best_frac = options.integrality_tol;
    bool exact = true;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const double v = lp.primal[cols[i]];
      const double frac = std::abs(v - std::round(v));
      if (frac != 0.0) exact = false;
      if (frac > best_frac) {
        best_frac = frac;
        branch = i;
      }
    }

    if (branch == cols.size()) {
      // Integral within tolerance. Re-solve with the rounded pattern so the
      // incumbent satisfies the big-M rows exactly.
      std::vector<double> primal = lp.primal;
      double cost = lp.objective;
      if (!exact) {
        std::vector<std::int8_t> rounded(cols.size());
        for (std::size_t i = 0; i < cols.size(); ++i) rounded[i] = lp.primal[cols[i]] >= 0.5 ? 1 : 0;
        apply(rounded);
        LpOutcome again;
        try {
          again = solve_lp(mp.lp, lo, up);
        } catch (const NumericalError& e) {
          throw NumericalError(detail::describe_node(mp, node, number) + " (rounded re-solve): " + e.what());
        }
        if (again.status != LpStatus::Optimal) {
          record(lp.objective);
          continue;
        }
        primal = std::move(again.primal);
        cost = again.objective;
      }
      if (!result.incumbent || cost < inc_cost - tiny(inc_cost)) {
        result.incumbent = extract_solution(mp, std::span<const double>(primal));
        inc_cost = cost;
      }
      record(lp.objective);
      continue;
    }

    auto child = [&](std::int8_t value) {
      detail::BbNode c{node.fix, bound, node.depth + 1, seq++};
      c.fix[branch] = value;
      return c;
    };
    // Pushed so that the NR=1 child is popped first while diving and, having
    // the smaller sequence number, wins bound ties afterwards.
    auto on = child(1);
    auto off = child(0);
    open.push_back(std::move(off));
    open.push_back(std::move(on));
    record(lp.objective);
  }

  result.wall_time = elapsed();
  if (result.incumbent) result.incumbent->solve_time = result.wall_time;
  if (stopped) {
    result.status = *stopped;
    result.best_bound = std::min({open_bound(), gap_pruned_bound, inc_cost});
    return result;
  }
  if (!result.incumbent) {
    result.status = MilpStatus::Infeasible;
    result.best_bound = kInfinity;
    return result;
  }
  result.best_bound = std::min(gap_pruned_bound, inc_cost);
  result.status = gap_pruned_bound < kInfinity ? MilpStatus::GapLimit : MilpStatus::Optimal;
  return result;
}

/// Solves every on/off assignment of the `free` branches (ids) as an LP with
/// all other branches in service, and returns the cheapest feasible topology.
/// Assignments are visited from all-on downward; ties keep the first found.
inline MilpOutcome enumerate_topologies(const Network& net, const LoadVector& loads, const std::vector<int>& free) {
  constexpr std::size_t kMaxFree = 20;
  if (free.size() > kMaxFree)
    throw std::invalid_argument("enumerate_topologies: " + std::to_string(free.size()) +
                                " free branches exceed the cap of 20");
  std::vector<int> ids = free;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument("enumerate_topologies: duplicate branch id");
  for (int id : ids)
    if (net.find_branch(id) == kNoIndex) throw SemanticError("unknown branch " + std::to_string(id));

  const auto start = std::chrono::steady_clock::now();
  MilpOutcome result;
  SwitchingMap fixed;
  for (const auto& br : net.branches()) fixed[br.id] = 1;
  const std::size_t total = std::size_t{1} << ids.size();
  for (std::size_t m = total; m-- > 0;) {
    for (std::size_t b = 0; b < ids.size(); ++b) fixed[ids[b]] = (m >> b) & 1 ? 1 : 0;
    const auto mp = build_nropf(net, loads, fixed);
    const auto out = solve_lp(mp.lp);
    ++result.nodes;
    if (out.status != LpStatus::Optimal) continue;
    if (!result.incumbent || out.objective < result.best_bound - 1e-9 * std::max(1.0, std::abs(result.best_bound))) {
      result.incumbent = extract_solution(mp, out);
      result.best_bound = out.objective;
    }
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.status = result.incumbent ? MilpStatus::Optimal : MilpStatus::Infeasible;
  if (result.incumbent) result.incumbent->solve_time = result.wall_time;
  return result;
}

}  // namespace nropf
