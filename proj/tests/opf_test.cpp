#include <cmath>

#include <gtest/gtest.h>

#include "nropf/opf.hpp"
#include "oracles.hpp"

namespace nropf {
namespace {

constexpr double kRel = 1e-8;

double rel_tol(double v) { return kRel * std::max(1.0, std::abs(v)); }

OpfSolution solve_fixed(const Network& net, const LoadVector& loads, const SwitchingMap& fixed,
                        LpStatus expect = LpStatus::Optimal) {
  const auto mp = build_nropf(net, loads, fixed);
  const auto out = solve_lp(mp.lp);
  EXPECT_EQ(out.status, expect);
  if (out.status != LpStatus::Optimal) return {};
  return extract_solution(mp, out);
}

SwitchingMap all_fixed(const Network& net, const std::vector<int>& status) {
  SwitchingMap m;
  for (std::size_t k = 0; k < net.branch_count(); ++k) m[net.branches()[k].id] = status[k];
  return m;
}

TEST(BuildOpf, TriangleShape) {
  const auto net = triangle3();
  const auto lp = build_opf(net, net.base_loads());
  EXPECT_EQ(lp.variable_count(), 10u);
  EXPECT_EQ(lp.row_count(), 1u + 2u + 3u + 3u);
  EXPECT_EQ(lp.row_names[0], "reserve");
  EXPECT_DOUBLE_EQ(lp.rhs[0], 5.0);
  const auto ref = lp.find_column({VarKind::Angle, net.reference_index()});
  EXPECT_EQ(lp.lower[ref], 0.0);
  EXPECT_EQ(lp.upper[ref], 0.0);
}

TEST(BuildOpf, TriangleOptimum) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  const auto lp = build_opf(net, loads);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, LpStatus::Optimal);
  const auto sol = extract_solution(lp, out);
  const auto expected = oracle::ptdf_opf_cost(net, loads, {1, 1, 1});
  ASSERT_TRUE(expected);
  EXPECT_NEAR(*expected, 3250.0, 1e-6);
  EXPECT_NEAR(sol.cost, 3250.0, rel_tol(3250.0));
  EXPECT_NEAR(std::abs(sol.flow[2]), 50.0, 1e-9);
  EXPECT_EQ(sol.switching, (std::vector<int>{1, 1, 1}));
  EXPECT_TRUE(verify_solution(net, loads, sol).empty());
}

TEST(BuildOpf, ZeroLoadCostsMinimumOutput) {
  const auto net = triangle3();
  const LoadVector zero(3, 0.0);
  const auto lp = build_opf(net, zero);
  const auto out = solve_lp(lp);
  ASSERT_EQ(out.status, LpStatus::Optimal);
  const auto sol = extract_solution(lp, out);
  EXPECT_EQ(sol.cost, 0.0);
  for (double f : sol.flow) EXPECT_NEAR(f, 0.0, 1e-12);
}

TEST(BuildOpf, RejectsInvalidInputs) {
  const auto net = triangle3();
  EXPECT_THROW(build_opf(net, LoadVector(2, 0.0)), std::invalid_argument);
  EXPECT_THROW(build_opf(net, LoadVector{0.0, -1.0, 0.0}), std::invalid_argument);
  const Network broken({{1, 0.0}, {2, 10.0}}, {{1, 1, 0.0, 100.0, 1.0}}, {{1, 1, 2, -0.1, 50.0, true}}, 1);
  EXPECT_THROW(build_opf(broken, broken.base_loads()), SemanticError);
}

TEST(BuildNrOpf, FreeBranchesGetOneBinaryEach) {
  const auto net = triangle3();
  const auto mp = build_nropf(net, net.base_loads(), {{2, 1}});
  EXPECT_EQ(mp.free_count(), 2u);
  EXPECT_EQ(mp.binary_column[1], LinearProgram::kNoColumn);
  for (std::size_t k : mp.free_branches()) {
    const auto col = mp.binary_column[k];
    EXPECT_EQ(mp.lp.labels[col].kind, VarKind::Switch);
    EXPECT_EQ(mp.lp.lower[col], 0.0);
    EXPECT_EQ(mp.lp.upper[col], 1.0);
    EXPECT_NEAR(mp.big_m[k] * net.branches()[k].reactance / kBaseMva, 2.0 * std::numbers::pi, 1e-12);
  }
}

TEST(BuildNrOpf, NonSwitchableBranchesAreFixedOn) {
  auto net = triangle3();
  std::vector<Branch> branches(net.branches().begin(), net.branches().end());
  branches[0].switchable = false;
  const Network pinned(std::vector<Bus>(net.buses().begin(), net.buses().end()),
                       std::vector<Generator>(net.generators().begin(), net.generators().end()), branches, 1);
  const auto mp = build_nropf(pinned, pinned.base_loads());
  EXPECT_EQ(mp.fixed_status[0], 1);
  EXPECT_EQ(mp.free_count(), 2u);
}

TEST(BuildNrOpf, UnknownFixedBranchIsRejected) {
  const auto net = triangle3();
  EXPECT_THROW(build_nropf(net, net.base_loads(), {{99, 0}}), SemanticError);
  EXPECT_THROW(build_nropf(net, net.base_loads(), {{1, 2}}), std::invalid_argument);
}

TEST(BuildNrOpf, TriangleFixedTopologies) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  struct Case {
    std::vector<int> status;
    double cost;
  };
  for (const auto& c : {Case{{1, 1, 1}, 3250.0}, Case{{1, 1, 0}, 1000.0}, Case{{0, 0, 0}, 10000.0}}) {
    const auto expected = oracle::ptdf_opf_cost(net, loads, c.status);
    ASSERT_TRUE(expected);
    EXPECT_NEAR(*expected, c.cost, 1e-6);
    const auto sol = solve_fixed(net, loads, all_fixed(net, c.status));
    EXPECT_NEAR(sol.cost, c.cost, rel_tol(c.cost));
    EXPECT_EQ(sol.switching, c.status);
    EXPECT_TRUE(verify_solution(net, loads, sol).empty()) << verify_solution(net, loads, sol).to_string();
  }
}

TEST(BuildNrOpf, RelaxationBoundsTheRestrictedOptimum) {
  // L13 forced open, L12/L23 relaxed: the LP value cannot exceed the integral optimum of 1000.
  const auto net = triangle3();
  const auto mp = build_nropf(net, net.base_loads(), {{3, 0}});
  const auto out = solve_lp(mp.lp);
  ASSERT_EQ(out.status, LpStatus::Optimal);
  EXPECT_LE(out.objective, 1000.0 + 1e-6);
}

TEST(ExtractSolution, RecomputesCostAndReadsBinaries) {
  const auto net = triangle3();
  const auto mp = build_nropf(net, net.base_loads(), {{3, 0}, {1, 1}});
  auto out = solve_lp(mp.lp);
  ASSERT_EQ(out.status, LpStatus::Optimal);
  const auto sol = extract_solution(mp, out);
  EXPECT_EQ(sol.switching, (std::vector<int>{1, 1, 0}));
  EXPECT_NEAR(sol.cost, 1000.0, rel_tol(1000.0));
  EXPECT_NEAR(sol.flow[2], 0.0, 1e-12);

  out.status = LpStatus::Infeasible;
  EXPECT_THROW(extract_solution(mp, out), std::logic_error);
}

TEST(ExtractSolution, LabelMismatchIsLoud) {
  const auto net = triangle3();
  auto lp = build_opf(net, net.base_loads());
  const auto out = solve_lp(lp);
  lp.labels[1] = lp.labels[0];
  EXPECT_THROW(extract_solution(lp, out), std::logic_error);
}

TEST(VerifySolution, FlagsOverloadedLine) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  const auto lp = build_opf(net, loads);
  auto sol = extract_solution(lp, solve_lp(lp));
  sol.flow[2] = sol.flow[2] > 0 ? 60.0 : -60.0;
  const auto rep = verify_solution(net, loads, sol);
  ASSERT_EQ(rep.count(ConstraintKind::LineLimit), 1u);
  for (const auto& v : rep.violations)
    if (v.constraint == ConstraintKind::LineLimit) {
      EXPECT_EQ(v.entity, 3);
      EXPECT_NEAR(v.magnitude, 10.0, 1e-9);
    }
}

TEST(VerifySolution, FlagsFlowOnOpenLine) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  const auto lp = build_opf(net, loads);
  auto sol = extract_solution(lp, solve_lp(lp));
  sol.switching = {1, 1, 0};
  const auto rep = verify_solution(net, loads, sol);
  ASSERT_EQ(rep.count(ConstraintKind::OpenLineFlow), 1u);
  EXPECT_NEAR(rep.violations[0].magnitude, 50.0, 1e-9);
}

TEST(VerifySolution, FlagsEveryConstraintFamily) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  const auto lp = build_opf(net, loads);
  const auto good = extract_solution(lp, solve_lp(lp));

  auto sol = good;
  sol.reserve[0] += 1.0;
  EXPECT_EQ(verify_solution(net, loads, sol).count(ConstraintKind::ReserveTotal), 1u);
  sol = good;
  sol.angle[1] += 0.01;
  EXPECT_EQ(verify_solution(net, loads, sol).count(ConstraintKind::FlowDefinition), 2u);
  sol = good;
  sol.dispatch[1] = 200.0;
  const auto rep = verify_solution(net, loads, sol);
  EXPECT_EQ(rep.count(ConstraintKind::GenerationMax), 1u);
  EXPECT_EQ(rep.count(ConstraintKind::NodalBalance), 1u);
  EXPECT_EQ(rep.count(ConstraintKind::CostConsistency), 1u);
  sol = good;
  sol.switching[0] = 2;
  EXPECT_EQ(verify_solution(net, loads, sol).count(ConstraintKind::SwitchingValue), 1u);
  sol = good;
  sol.flow.pop_back();
  EXPECT_EQ(verify_solution(net, loads, sol).count(ConstraintKind::Shape), 1u);
  EXPECT_THROW(verify_solution(net, loads, good, 0.0), std::invalid_argument);
}

TEST(SolutionRecord, RoundTrips) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  const auto sol = solve_fixed(net, loads, all_fixed(net, {1, 1, 0}));
  const auto text = serialize_solution(net, loads, sol);
  const auto rec = parse_solution(text);
  EXPECT_EQ(rec.fingerprint, network_fingerprint(net));
  EXPECT_EQ(rec.loads, loads);
  EXPECT_EQ(rec.solution.flow, sol.flow);
  EXPECT_EQ(rec.solution.switching, sol.switching);
  EXPECT_EQ(rec.solution.cost, sol.cost);
  EXPECT_THROW(parse_solution("{\"format\": 1"), ParseError);
  EXPECT_THROW(parse_solution("{\"format\": \"other\"}"), ParseError);
}

// Every fixed topology of small random networks agrees with the PTDF oracle on
// feasibility and cost, fixing everything on reproduces the plain OPF, and
// open lines never need more angle separation than the big-M allows.
TEST(NrOpfProperty, FixedTopologiesMatchPtdfOracle) {
  int feasible = 0, infeasible = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto net = synthetic_network(4, 5, seed);
    const auto loads = perturb_loads(net, 0.3, seed);
    const auto opf = build_opf(net, loads);
    const auto opf_out = solve_lp(opf);
    for (std::size_t mask = 0; mask < (std::size_t{1} << net.branch_count()); ++mask) {
      std::vector<int> status(net.branch_count());
      for (std::size_t k = 0; k < status.size(); ++k) status[k] = (mask >> k) & 1 ? 1 : 0;
      const auto expected = oracle::ptdf_opf_cost(net, loads, status);
      const auto mp = build_nropf(net, loads, all_fixed(net, status));
      const auto out = solve_lp(mp.lp);
      if (!expected) {
        EXPECT_EQ(out.status, LpStatus::Infeasible) << "seed " << seed << " mask " << mask;
        ++infeasible;
        continue;
      }
      ASSERT_EQ(out.status, LpStatus::Optimal) << "seed " << seed << " mask " << mask;
      ++feasible;
      const auto sol = extract_solution(mp, out);
      EXPECT_NEAR(sol.cost, *expected, 1e-6 * std::max(1.0, *expected));
      EXPECT_TRUE(verify_solution(net, loads, sol).empty());
      for (std::size_t k = 0; k < status.size(); ++k) {
        if (status[k]) continue;
        const double sep = std::abs(sol.angle[net.from_index(k)] - sol.angle[net.to_index(k)]);
        EXPECT_LT(sep, 2.0 * std::numbers::pi);
      }
      if (mask + 1 == (std::size_t{1} << net.branch_count())) {
        ASSERT_EQ(opf_out.status, LpStatus::Optimal);
        EXPECT_NEAR(sol.cost, opf_out.objective, rel_tol(opf_out.objective));
      }
    }
  }
  EXPECT_GT(feasible, 20);
  EXPECT_GT(infeasible, 5);
}

}  // namespace
}  // namespace nropf
