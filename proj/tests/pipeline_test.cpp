#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "nropf/pipeline.hpp"

namespace nropf {
namespace {

double round_to(double v, int digits) {
  const double f = std::pow(10.0, digits);
  return std::round(v * f) / f;
}

// Predicts the stored label of whichever dataset sample has exactly these loads.
SwitchPredictor oracle_stub(const Network& net, const Dataset& ds, std::vector<int> targets) {
  auto table = std::make_shared<std::map<LoadVector, std::vector<int>>>();
  for (const auto& s : ds.samples) (*table)[s.loads] = s.label;
  return {targets, [table, targets, &net](const Network&, const LoadVector& loads) {
            const auto& label = table->at(loads);
            std::vector<EdgeProb> out;
            for (int id : targets) {
              const int on = label[net.find_branch(id)];
              out.push_back({on ? 0.0 : 1.0, on ? 1.0 : 0.0});
            }
            return out;
          }};
}

SwitchPredictor constant_stub(std::vector<int> targets, EdgeProb p) {
  return {targets, [n = targets.size(), p](const Network&, const LoadVector&) { return std::vector<EdgeProb>(n, p); }};
}

// Deterministic pseudo-random probabilities keyed on the loads; the first
// `shared` entries are equal for every stub built with the same salt.
SwitchPredictor noisy_stub(std::vector<int> targets, std::uint64_t salt) {
  return {targets, [targets, salt](const Network&, const LoadVector& loads) {
            std::uint64_t h = salt;
            for (double v : loads) h = derive_seed(h, fnv1a64(format_double(v)));
            std::vector<EdgeProb> out;
            for (int id : targets) {
              CounterRng rng(derive_seed(h, static_cast<std::uint64_t>(id)));
              const double on = rng.uniform();
              out.push_back({1.0 - on, on});
            }
            return out;
          }};
}

std::vector<int> switchable_ids(const Network& net) {
  std::vector<int> ids;
  for (std::size_t k : net.switchable_branches()) ids.push_back(net.branches()[k].id);
  return ids;
}

TEST(FindNoncritical, ColumnConstancy) {
  const auto crit = find_noncritical(triangle3(), {{1, 1, 0}, {1, 0, 0}, {1, 1, 0}});
  EXPECT_EQ(crit.constant_status, (std::map<int, int>{{1, 1}, {3, 0}}));
  EXPECT_EQ(crit.critical, (std::vector<int>{2}));

  const auto single = find_noncritical(triangle3(), {{0, 1, 1}});
  EXPECT_EQ(single.constant_status.size(), 3u);
  EXPECT_TRUE(single.critical.empty());
  EXPECT_THROW(find_noncritical(triangle3(), {}), DataError);
  EXPECT_THROW(find_noncritical(triangle3(), {{1, 1}}), DataError);
}

TEST(FindNoncritical, FixedLinesAreNeitherCriticalNorConstant) {
  const auto base = triangle3();
  std::vector<Branch> branches(base.branches().begin(), base.branches().end());
  branches[0].switchable = false;
  const Network net(std::vector<Bus>(base.buses().begin(), base.buses().end()),
                    std::vector<Generator>(base.generators().begin(), base.generators().end()), branches, 1);
  const auto crit = find_noncritical(net, {{1, 1, 0}, {1, 0, 1}});
  EXPECT_TRUE(crit.constant_status.empty());
  EXPECT_EQ(crit.critical, (std::vector<int>{2, 3}));
}

TEST(FindNoncritical, TriangleDatasetIsReproducibleAndSound) {
  const auto net = triangle3();
  GenerateOptions opt;
  auto ds = generate_dataset(net, 200, opt);
  split_dataset(ds);
  auto rows = ds.indices(Split::Train);
  for (auto i : ds.indices(Split::Val)) rows.push_back(i);
  const auto a = find_noncritical(net, label_matrix(ds, rows));
  const auto b = find_noncritical(net, label_matrix(parse_dataset(serialize_dataset(ds)), rows));
  EXPECT_EQ(a.constant_status, b.constant_status);
  EXPECT_EQ(a.critical, b.critical);
  EXPECT_EQ(a.constant_status.size() + a.critical.size(), 3u);
  for (auto i : rows)
    for (const auto& [id, s] : a.constant_status) EXPECT_EQ(ds.samples[i].label[net.find_branch(id)], s);
}

TEST(SelectConfident, ReferenceProbabilityRows) {
  const std::vector<EdgeProb> rows{{0.0611, 0.9389}, {0.0004, 0.9996}, {0.0753, 0.9247},
                                   {0.8154, 0.1846}, {0.2303, 0.7697}, {0.0015, 0.9985}};
  const auto sel = select_confident({1, 2, 3, 4, 5, 6}, rows);
  EXPECT_EQ(sel.selected, (std::map<int, int>{{2, 1}, {6, 1}}));
  EXPECT_EQ(sel.excluded, (std::vector<int>{1, 3, 4, 5}));
}

TEST(SelectConfident, EdgesOfTheBand) {
  const auto sel = select_confident({1, 2, 3, 4, 5, 6}, {{0.0, 1.0}, {0.5, 0.5}, {0.95, 0.05}, {0.05, 0.95},
                                                         {0.96, 0.04}, {1.0, 0.0}});
  EXPECT_EQ(sel.selected, (std::map<int, int>{{1, 1}, {5, 0}, {6, 0}}));
  EXPECT_EQ(sel.excluded, (std::vector<int>{2, 3, 4}));
  EXPECT_THROW(select_confident({1}, {{0.5, 0.5}}, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(select_confident({1}, {{0.5, 0.5}}, -0.1, 0.5), std::invalid_argument);
  EXPECT_THROW(select_confident({1, 2}, {{0.5, 0.5}}), std::invalid_argument);
}

TEST(SelectConfidentProperty, FixedLinesLieOutsideTheBand) {
  CounterRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double lower = 0.4 * rng.uniform(), upper = 0.6 + 0.4 * rng.uniform();
    std::vector<int> ids;
    std::vector<EdgeProb> probs;
    for (int i = 0; i < 12; ++i) {
      const double on = rng.uniform();
      ids.push_back(i + 1);
      probs.push_back({1.0 - on, on});
    }
    const auto sel = select_confident(ids, probs, lower, upper);
    EXPECT_EQ(sel.selected.size() + sel.excluded.size(), ids.size());
    for (const auto& [id, s] : sel.selected) {
      const double on = probs[static_cast<std::size_t>(id - 1)][1];
      EXPECT_TRUE(on < lower || on > upper);
      EXPECT_EQ(s, on > 0.5 ? 1 : 0);
    }
  }
}

TEST(RunMethod, TriangleExamples) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  const auto full = run_method(Method::Full, net, loads, nullptr, nullptr, nullptr);
  ASSERT_TRUE(full.feasible());
  EXPECT_NEAR(full.cost, 1000.0, 1e-8 * 1000.0);
  EXPECT_EQ(full.solution->switching, (std::vector<int>{1, 1, 0}));
  EXPECT_EQ(full.free_binaries, 3u);

  Dataset ds;
  ds.samples.push_back({1, loads, {1, 1, 0}, 1000.0, 0.0, 1, Split::Test});
  const auto perfect = oracle_stub(net, ds, {1, 2, 3});
  const auto lp = run_method(Method::FgnnLp, net, loads, &perfect, nullptr, nullptr);
  EXPECT_NEAR(lp.cost, 1000.0, 1e-8 * 1000.0);
  EXPECT_EQ(lp.free_binaries, 0u);
  EXPECT_EQ(lp.nodes, 1u);
  EXPECT_GT(lp.inference_time, 0.0);

  const auto all_off = constant_stub({1, 2, 3}, {1.0, 0.0});
  const auto off = run_method(Method::FgnnLp, net, loads, &all_off, nullptr, nullptr);
  ASSERT_TRUE(off.feasible());
  EXPECT_NEAR(off.cost, 10000.0, 1e-8 * 10000.0);
  EXPECT_EQ(off.solution->switching, (std::vector<int>{0, 0, 0}));

  const auto unsure = constant_stub({1, 2, 3}, {0.5, 0.5});
  const auto milp = run_method(Method::FgnnMilp, net, loads, &unsure, nullptr, nullptr);
  EXPECT_EQ(milp.free_binaries, 3u);
  EXPECT_NEAR(milp.cost, 1000.0, 1e-8 * 1000.0);
}

TEST(RunMethod, ReducedModelsUseTheCriticalMap) {
  const auto net = triangle3();
  const auto loads = net.base_loads();
  CriticalLineMap crit;
  crit.constant_status = {{1, 1}, {2, 1}};
  crit.critical = {3};
  const auto off3 = constant_stub({3}, {0.99, 0.01});
  const auto lp = run_method(Method::RgnnLp, net, loads, nullptr, &off3, &crit);
  EXPECT_EQ(lp.fixed, (SwitchingMap{{1, 1}, {2, 1}, {3, 0}}));
  EXPECT_NEAR(lp.cost, 1000.0, 1e-8 * 1000.0);

  const auto unsure3 = constant_stub({3}, {0.3, 0.7});
  const auto milp = run_method(Method::RgnnMilp, net, loads, nullptr, &unsure3, &crit);
  EXPECT_EQ(milp.free_binaries, 1u);
  EXPECT_NEAR(milp.cost, 1000.0, 1e-8 * 1000.0);

  EXPECT_THROW(run_method(Method::RgnnLp, net, loads, nullptr, nullptr, &crit), DataError);
  EXPECT_THROW(run_method(Method::RgnnLp, net, loads, nullptr, &off3, nullptr), DataError);
  const auto wrong = constant_stub({2}, {0.5, 0.5});
  EXPECT_THROW(run_method(Method::RgnnMilp, net, loads, nullptr, &wrong, &crit), DataError);
  EXPECT_THROW(run_method(Method::FgnnLp, net, loads, &off3, nullptr, nullptr), DataError);
}

TEST(RunMethod, InfeasibleTopologyIsReportedOrFallsBack) {
  // 120 MW at bus 3 cannot be served by the 100 MW unit there alone.
  const auto base = triangle3();
  const Network net({{1, 0.0}, {2, 0.0}, {3, 120.0}},
                    std::vector<Generator>(base.generators().begin(), base.generators().end()),
                    std::vector<Branch>(base.branches().begin(), base.branches().end()), 1);
  const auto all_off = constant_stub({1, 2, 3}, {1.0, 0.0});
  const auto plain = run_method(Method::FgnnLp, net, net.base_loads(), &all_off, nullptr, nullptr);
  EXPECT_FALSE(plain.feasible());
  EXPECT_EQ(plain.status, MilpStatus::Infeasible);
  EXPECT_FALSE(plain.fallback);
  EXPECT_EQ(plain.cost, kInfinity);

  MethodOptions opt;
  opt.fallback = true;
  const auto rescued = run_method(Method::FgnnLp, net, net.base_loads(), &all_off, nullptr, nullptr, opt);
  ASSERT_TRUE(rescued.feasible());
  EXPECT_TRUE(rescued.fallback);
  const auto full = run_method(Method::Full, net, net.base_loads(), nullptr, nullptr, nullptr);
  EXPECT_NEAR(rescued.cost, full.cost, 1e-8 * full.cost);
}

// Reference values from exact rational arithmetic on the decimal inputs.
TEST(Ratios, MatchExactQuotients) {
  EXPECT_NEAR(pct_cost(156510.3, 154427.9), 101.34846099700896, 1e-12);
  EXPECT_EQ(round_to(pct_cost(154426.0, 154427.9), 3), 99.999);
  EXPECT_NEAR(pct_time(0.195, 10.765), 1.8114259173246632, 1e-12);
  EXPECT_EQ(round_to(pct_time(9.122, 10.765), 2), 84.74);
  EXPECT_EQ(pct_cost(1234.5, 1234.5), 100.0);
  EXPECT_EQ(pct_time(0.25, 0.25), 100.0);
  EXPECT_THROW(pct_cost(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(pct_time(1.0, -2.0), std::invalid_argument);
  EXPECT_THROW(pct_cost(kInfinity, 5.0), std::invalid_argument);
}

TEST(AggregateStats, SmallSeries) {
  const auto flat = aggregate_stats({100, 100, 100});
  EXPECT_EQ(flat.mean, 100.0);
  EXPECT_EQ(flat.std_dev, 0.0);
  EXPECT_EQ(aggregate_stats({99, 101}).median, 100.0);
  const auto s = aggregate_stats({4, 1, 3});
  EXPECT_EQ(s.median, 3.0);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 4.0);
  EXPECT_NEAR(s.std_dev, std::sqrt(7.0 / 3.0), 1e-15);
  EXPECT_EQ(aggregate_stats({42}).std_dev, 0.0);
  EXPECT_THROW(aggregate_stats({}), std::invalid_argument);
}

// Welford's update and selection by nth_element, written independently of
// aggregate_stats.
RatioStats reference_stats(std::vector<double> v) {
  RatioStats r;
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  r.mean = mean;
  r.std_dev = std::sqrt(m2 / static_cast<double>(n - 1));
  r.min = *std::min_element(v.begin(), v.end());
  r.max = *std::max_element(v.begin(), v.end());
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2) {
    r.median = upper;
  } else {
    const double lower = *std::max_element(v.begin(), mid);
    r.median = (lower + upper) / 2.0;
  }
  return r;
}

TEST(AggregateStatsProperty, AgreesWithReferenceImplementation) {
  for (std::size_t n : {999u, 1000u}) {
    CounterRng rng(n);
    std::vector<double> series;
    for (std::size_t i = 0; i < n; ++i) series.push_back(100.0 + 3.0 * rng.uniform() * rng.uniform());
    const auto a = aggregate_stats(series);
    const auto b = reference_stats(series);
    EXPECT_NEAR(a.mean, b.mean, 1e-10);
    EXPECT_NEAR(a.std_dev, b.std_dev, 1e-10);
    EXPECT_EQ(a.median, b.median);
    EXPECT_EQ(a.min, b.min);
    EXPECT_EQ(a.max, b.max);
    EXPECT_LE(a.min, a.median);
    EXPECT_LE(a.median, a.max);
  }
}

struct BenchFixture {
  Network net = synthetic_network(6, 9, 4);
  Dataset ds;
  CriticalLineMap crit;
  std::vector<std::size_t> test_rows;

  BenchFixture() {
    GenerateOptions opt;
    opt.delta = 0.3;
    opt.master_seed = 3;
    ds = generate_dataset(net, 40, opt);
    split_dataset(ds, {0.5, 0.25, 0.25}, 2);
    auto rows = ds.indices(Split::Train);
    for (auto i : ds.indices(Split::Val)) rows.push_back(i);
    crit = find_noncritical(net, label_matrix(ds, rows));
    test_rows = ds.indices(Split::Test);
  }
};

TEST(Bench, OraclePerfectStubsMatchFull) {
  BenchFixture f;
  const auto fgnn = oracle_stub(f.net, f.ds, switchable_ids(f.net));
  const auto rgnn = oracle_stub(f.net, f.ds, f.crit.critical);
  // Test samples may move a line the train/val labels never moved; the map
  // is then wrong for that sample, so pin the check to the full method set.
  const std::vector<Method> methods{Method::FgnnLp, Method::FgnnMilp};
  const auto rep = run_bench(f.net, f.ds, f.test_rows, methods, &fgnn, &rgnn, &f.crit);
  ASSERT_EQ(rep.methods.size(), 3u);
  for (const auto& row : rep.rows) {
    const auto& full = row.results[0];
    ASSERT_TRUE(full.feasible());
    for (std::size_t m = 1; m < row.results.size(); ++m) {
      ASSERT_TRUE(row.results[m].feasible());
      EXPECT_NEAR(pct_cost(row.results[m].cost, full.cost), 100.0, 1e-9);
      EXPECT_EQ(row.results[m].solution->switching, full.solution->switching);
      EXPECT_EQ(row.results[m].free_binaries, 0u);
    }
  }
  for (const auto& s : rep.summary) {
    ASSERT_TRUE(s.cost);
    EXPECT_NEAR(s.cost->mean, 100.0, 1e-9);
    EXPECT_EQ(s.infeasible, 0u);
  }
}

// Any stub: feasible reduced results never beat FULL, LP methods leave no
// binaries, and when the reduced model agrees with the full one on the
// critical lines RGNN-MILP leaves no more binaries than FGNN-MILP.
TEST(BenchProperty, DominanceAndFreeBinaryOrdering) {
  BenchFixture f;
  const auto fgnn = noisy_stub(switchable_ids(f.net), 7);
  const SwitchPredictor rgnn{f.crit.critical, [&](const Network& net, const LoadVector& loads) {
                               const auto all = fgnn.predict(net, loads);
                               std::vector<EdgeProb> out;
                               for (int id : f.crit.critical) {
                                 const auto pos = std::find(fgnn.targets.begin(), fgnn.targets.end(), id);
                                 out.push_back(all[static_cast<std::size_t>(pos - fgnn.targets.begin())]);
                               }
                               return out;
                             }};
  MethodOptions opt;
  opt.lower = 0.2;
  opt.upper = 0.8;
  std::vector<Method> methods(std::begin(kAllMethods) + 1, std::end(kAllMethods));
  const auto rep = run_bench(f.net, f.ds, f.test_rows, methods, &fgnn, &rgnn, &f.crit, opt, 3);
  ASSERT_EQ(rep.methods.size(), 5u);
  for (const auto& row : rep.rows) {
    const auto& full = row.results[0];
    for (const auto& r : row.results) {
      if (r.feasible()) {
        EXPECT_GE(pct_cost(r.cost, full.cost), 100.0 - 1e-6) << to_string(r.method);
        EXPECT_TRUE(verify_solution(f.net, f.ds.samples[row.sample].loads, *r.solution).empty());
      }
    }
    EXPECT_EQ(row.results[1].free_binaries, 0u);
    EXPECT_EQ(row.results[3].free_binaries, 0u);
    EXPECT_LE(row.results[4].free_binaries, row.results[2].free_binaries);
    EXPECT_LE(row.results[2].free_binaries, full.free_binaries);
  }
}

TEST(Bench, ResultsDoNotDependOnWorkerCount) {
  BenchFixture f;
  const auto fgnn = noisy_stub(switchable_ids(f.net), 3);
  const std::vector<Method> methods{Method::FgnnMilp};
  const auto a = run_bench(f.net, f.ds, f.test_rows, methods, &fgnn, nullptr, nullptr, {}, 1);
  const auto b = run_bench(f.net, f.ds, f.test_rows, methods, &fgnn, nullptr, nullptr, {}, 4);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    for (std::size_t m = 0; m < 2; ++m) {
      EXPECT_EQ(a.rows[i].results[m].cost, b.rows[i].results[m].cost);
      EXPECT_EQ(a.rows[i].results[m].nodes, b.rows[i].results[m].nodes);
    }
}

TEST(BenchReport, TablesHaveTheExpectedShape) {
  BenchFixture f;
  const auto fgnn = noisy_stub(switchable_ids(f.net), 3);
  const auto rep = run_bench(f.net, f.ds, f.test_rows, {Method::FgnnLp, Method::FgnnMilp}, &fgnn, nullptr, nullptr);
  std::ostringstream per, sum, text;
  write_method_table(per, rep, 2);
  write_summary_table(sum, rep);
  write_text_report(text, rep);
  const auto p = per.str(), su = sum.str();
  EXPECT_EQ(std::count(p.begin(), p.end(), '\n'), static_cast<long>(f.test_rows.size() + 1));
  EXPECT_EQ(std::count(su.begin(), su.end(), '\n'), 4);
  EXPECT_NE(su.find("cost_mean,cost_max,cost_min,cost_median,cost_std"), std::string::npos);
  const auto t = text.str();
  const auto header = t.substr(t.find("Method"), t.find('\n', t.find("Method")) - t.find("Method"));
  std::istringstream words(header);
  std::vector<std::string> cols;
  for (std::string w; words >> w;) cols.push_back(w);
  EXPECT_EQ(cols, (std::vector<std::string>{"Method", "Mean", "Max", "Min", "Median", "Std.", "Dev."}));
}

}  // namespace
}  // namespace nropf
