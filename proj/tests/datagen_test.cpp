#include <set>

#include <gtest/gtest.h>

#include "nropf/datagen.hpp"

namespace nropf {
namespace {

Dataset triangle_dataset(std::size_t n, double delta, std::uint64_t seed, unsigned workers = 1) {
  GenerateOptions opt;
  opt.delta = delta;
  opt.master_seed = seed;
  opt.workers = workers;
  return generate_dataset(triangle3(), n, opt);
}

TEST(GenerateDataset, ZeroPerturbationRepeatsTheOptimum) {
  const auto ds = triangle_dataset(3, 0.0, 5);
  ASSERT_EQ(ds.samples.size(), 3u);
  for (const auto& s : ds.samples) {
    EXPECT_EQ(s.label, (std::vector<int>{1, 1, 0}));
    EXPECT_NEAR(s.cost, 1000.0, 1e-8 * 1000.0);
    EXPECT_EQ(s.loads, triangle3().base_loads());
    EXPECT_EQ(s.solve_time, 0.0);
    EXPECT_GE(s.nodes, 1u);
  }
  EXPECT_NE(ds.samples[0].seed, ds.samples[1].seed);
  EXPECT_EQ(ds.fingerprint, network_fingerprint(triangle3()));
}

TEST(GenerateDataset, ByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto a = serialize_dataset(triangle_dataset(100, 0.07, 1));
  const auto b = serialize_dataset(triangle_dataset(100, 0.07, 1));
  const auto c = serialize_dataset(triangle_dataset(100, 0.07, 1, 4));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_NE(a, serialize_dataset(triangle_dataset(100, 0.07, 2)));
}

TEST(GenerateDataset, SwitchingNeverCostsMoreThanAllOn) {
  const auto net = triangle3();
  const auto ds = triangle_dataset(100, 0.07, 1);
  for (const auto& s : ds.samples) {
    const auto opf = solve_lp(build_opf(net, s.loads));
    ASSERT_EQ(opf.status, LpStatus::Optimal);
    EXPECT_LE(s.cost, opf.objective + 1e-6);
  }
}

TEST(GenerateDataset, EveryLabelIsAFeasibleTopologyAtTheRecordedCost) {
  const auto net = synthetic_network(6, 8, 2);
  GenerateOptions opt;
  opt.delta = 0.1;
  opt.master_seed = 11;
  const auto ds = generate_dataset(net, 30, opt);
  for (const auto& s : ds.samples) {
    SwitchingMap fixed;
    for (std::size_t k = 0; k < net.branch_count(); ++k) fixed[net.branches()[k].id] = s.label[k];
    const auto mp = build_nropf(net, s.loads, fixed);
    const auto out = solve_lp(mp.lp);
    ASSERT_EQ(out.status, LpStatus::Optimal);
    const auto sol = extract_solution(mp, out);
    EXPECT_TRUE(verify_solution(net, s.loads, sol).empty());
    EXPECT_NEAR(sol.cost, s.cost, 1e-8 * std::max(1.0, s.cost));
  }
}

TEST(GenerateDataset, RecordsSolveTimesOnlyWhenAsked) {
  GenerateOptions opt;
  opt.record_time = true;
  const auto ds = generate_dataset(triangle3(), 5, opt);
  for (const auto& s : ds.samples) EXPECT_GT(s.solve_time, 0.0);
}

TEST(GenerateDataset, ResamplesInfeasibleDrawsAndAbortsWhenTooMany) {
  // Capacity 250 MW carries at most 238 MW of load once the 5% reserve is held back.
  const Network tight({{1, 0.0}, {2, 0.0}, {3, 230.0}},
                      {{1, 1, 0.0, 150.0, 10.0}, {3, 3, 0.0, 100.0, 100.0}},
                      {{1, 1, 2, 0.1, 200.0, true}, {2, 2, 3, 0.1, 200.0, true}, {3, 1, 3, 0.1, 200.0, true}}, 1);
  GenerateOptions opt;
  opt.delta = 0.04;
  GenerateReport rep;
  const auto ds = generate_dataset(tight, 40, opt, &rep);
  EXPECT_EQ(ds.samples.size(), 40u);
  EXPECT_GT(rep.infeasible, 0u);
  EXPECT_EQ(rep.draws, 40u + rep.infeasible);
  for (const auto& s : ds.samples) EXPECT_LE(1.05 * (s.loads[2]), 250.0 + 1e-9);

  opt.delta = 0.3;
  try {
    generate_dataset(tight, 40, opt);
    FAIL() << "expected abort";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("infeasible"), std::string::npos);
  }
}

TEST(SplitDataset, CountsFollowFloorWithRemainderToTrain) {
  auto ds = triangle_dataset(10, 0.07, 3);
  split_dataset(ds, {0.8, 0.1, 0.1}, 9);
  EXPECT_EQ(ds.indices(Split::Train).size(), 8u);
  EXPECT_EQ(ds.indices(Split::Val).size(), 1u);
  EXPECT_EQ(ds.indices(Split::Test).size(), 1u);
  auto again = triangle_dataset(10, 0.07, 3);
  split_dataset(again, {0.8, 0.1, 0.1}, 9);
  EXPECT_EQ(serialize_dataset(ds), serialize_dataset(again));

  auto odd = triangle_dataset(7, 0.07, 3);
  split_dataset(odd, {0.5, 0.3, 0.2}, 1);
  EXPECT_EQ(odd.indices(Split::Val).size(), 2u);
  EXPECT_EQ(odd.indices(Split::Test).size(), 1u);
  EXPECT_EQ(odd.indices(Split::Train).size(), 4u);
}

TEST(SplitDataset, PartitionsEverySample) {
  auto ds = triangle_dataset(100, 0.07, 4);
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    split_dataset(ds, {0.8, 0.1, 0.1}, seed);
    std::set<std::size_t> seen;
    for (auto s : {Split::Train, Split::Val, Split::Test})
      for (auto i : ds.indices(s)) EXPECT_TRUE(seen.insert(i).second);
    EXPECT_EQ(seen.size(), 100u);
    EXPECT_TRUE(ds.indices(Split::None).empty());
  }
}

TEST(SplitDataset, RejectsBadInputs) {
  auto small = triangle_dataset(2, 0.07, 1);
  EXPECT_THROW(split_dataset(small), DataError);
  auto ds = triangle_dataset(5, 0.07, 1);
  EXPECT_THROW(split_dataset(ds, {0.8, 0.2, 0.0}), std::invalid_argument);
  EXPECT_THROW(split_dataset(ds, {0.8, 0.1, 0.2}), std::invalid_argument);
}

TEST(DatasetFile, RoundTripsByteExactly) {
  auto ds = triangle_dataset(50, 0.07, 8);
  split_dataset(ds);
  const auto text = serialize_dataset(ds);
  const auto back = parse_dataset(text);
  EXPECT_EQ(serialize_dataset(back), text);
  EXPECT_EQ(back.fingerprint, ds.fingerprint);
  EXPECT_EQ(back.samples[7].loads, ds.samples[7].loads);
  EXPECT_NO_THROW(check_fingerprint(back, triangle3()));
  EXPECT_THROW(check_fingerprint(back, synthetic_network(3, 3, 1)), DataError);
}

TEST(DatasetFile, MalformedInputReportsTheLine) {
  const auto text = serialize_dataset(triangle_dataset(3, 0.07, 8));
  auto expect_line = [](const std::string& bad, std::size_t line) {
    try {
      parse_dataset(bad);
      ADD_FAILURE() << "expected a parse error";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_line("NROPF-DATASET 2 abc 3 3 0\n", 1);
  auto bad_label = text;
  bad_label[bad_label.size() - 2] = '7';
  expect_line(bad_label, 5);
  auto short_row = text.substr(0, text.rfind('\t')) + "\n";
  expect_line(short_row, 5);
  EXPECT_THROW(parse_dataset(""), ParseError);
  EXPECT_THROW(parse_dataset(text.substr(0, text.rfind('\n', text.size() - 2) + 1)), ParseError);
}

TEST(DatasetStats, OnRatesLieInTheUnitInterval) {
  const auto ds = triangle_dataset(40, 0.07, 2);
  const auto rates = on_rates(ds);
  ASSERT_EQ(rates.size(), 3u);
  for (double r : rates) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

}  // namespace
}  // namespace nropf
