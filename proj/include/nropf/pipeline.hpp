#pragma once

// Pre-ML critical-line filter, post-ML confidence selection, the four
// GNN-assisted solve methods plus the FULL baseline, cost/time ratios and
// their summary statistics, and the bench report writers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nropf/common.hpp"
#include "nropf/datagen.hpp"
#include "nropf/gnn.hpp"
#include "nropf/grid.hpp"
#include "nropf/milp.hpp"
#include "nropf/opf.hpp"

namespace nropf {

// ---------------------------------------------------------------------------
// Pre-ML filter

struct CriticalLineMap {
  std::map<int, int> constant_status;  // non-critical switchable lines
  std::vector<int> critical;           // ascending branch ids
};

/// Splits the switchable branches into those whose label never changes over
/// `labels` (samples x branches, branch order of `net`) and the rest.
inline CriticalLineMap find_noncritical(const Network& net, const std::vector<std::vector<int>>& labels) {
  if (labels.empty()) throw DataError("critical-line filter needs at least one labelled sample");
  CriticalLineMap out;
  for (std::size_t k : net.switchable_branches()) {
    bool constant = true;
    for (const auto& row : labels) {
      if (row.size() != net.branch_count()) throw DataError("label width does not match the case");
      constant = constant && row[k] == labels.front()[k];
    }
    const int id = net.branches()[k].id;
    if (constant)
      out.constant_status[id] = labels.front()[k];
    else
      out.critical.push_back(id);
  }
  std::sort(out.critical.begin(), out.critical.end());
  return out;
}

inline nlohmann::json critical_map_to_json(const CriticalLineMap& m) {
  nlohmann::json constant = nlohmann::json::array();
  for (const auto& [id, s] : m.constant_status) constant.push_back({{"branch", id}, {"status", s}});
  return {{"critical", m.critical}, {"constant", constant}};
}

inline CriticalLineMap parse_critical_map(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text.begin(), text.end());
    CriticalLineMap m;
    m.critical = doc.at("critical").get<std::vector<int>>();
    for (const auto& e : doc.at("constant")) m.constant_status[e.at("branch").get<int>()] = e.at("status").get<int>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("critical-line map: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Post-ML selection

struct SelectionResult {
  std::map<int, int> selected;  // branch id -> fixed status
  std::vector<int> excluded;    // left free, in input order
};

/// A branch stays free iff lower <= P_ON <= upper; otherwise it is fixed to
/// its more likely status (ON on an exact tie).
inline SelectionResult select_confident(const std::vector<int>& ids, const std::vector<EdgeProb>& probs,
                                        double lower = 0.05, double upper = 0.95) {
  if (!(lower >= 0.0 && lower < upper && upper <= 1.0))
    throw std::invalid_argument("selection thresholds must satisfy 0 <= lower < upper <= 1");
  if (ids.size() != probs.size()) throw std::invalid_argument("select_confident: one probability pair per branch");
  SelectionResult out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double on = probs[i][1];
    if (on >= lower && on <= upper)
      out.excluded.push_back(ids[i]);
    else
      out.selected[ids[i]] = on >= probs[i][0] ? 1 : 0;
  }
  return out;
}

inline int argmax_status(const EdgeProb& p) { return p[1] >= p[0] ? 1 : 0; }

// ---------------------------------------------------------------------------
// Methods

enum class Method { Full, FgnnLp, FgnnMilp, RgnnLp, RgnnMilp };

inline constexpr Method kAllMethods[] = {Method::Full, Method::FgnnLp, Method::FgnnMilp, Method::RgnnLp,
                                         Method::RgnnMilp};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Full: return "FULL";
    case Method::FgnnLp: return "FGNN-LP";
    case Method::FgnnMilp: return "FGNN-MILP";
    case Method::RgnnLp: return "RGNN-LP";
    case Method::RgnnMilp: return "RGNN-MILP";
  }
  return "FULL";
}

inline Method parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

/// Anything that maps (network, loads) to per-branch (P_OFF, P_ON) for a
/// fixed list of branch ids. Wraps a trained model or a test stub.
struct SwitchPredictor {
  std::vector<int> targets;
  std::function<std::vector<EdgeProb>(const Network&, const LoadVector&)> predict;
};

inline SwitchPredictor make_predictor(const XenetModel& model) {
  return {model.targets(), [&model](const Network& net, const LoadVector& loads) { return model.predict(net, loads); }};
}

struct MethodOptions {
  MilpOptions milp;
  double lower = 0.05;
  double upper = 0.95;
  bool fallback = false;  // re-solve FULL when the reduced problem is infeasible
};

struct MethodResult {
  Method method = Method::Full;
  MilpStatus status = MilpStatus::Infeasible;
  std::optional<OpfSolution> solution;
  double cost = kInfinity;
  double solve_time = 0.0;       // optimization stage only
  double inference_time = 0.0;   // GNN forward pass
  std::size_t free_binaries = 0;
  std::size_t nodes = 0;
  bool fallback = false;
  SwitchingMap fixed;  // statuses imposed before the solve

  bool feasible() const noexcept { return solution.has_value(); }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<EdgeProb> timed_predict(const SwitchPredictor& p, const Network& net, const LoadVector& loads,
                                           double& elapsed) {
  const auto t0 = std::chrono::steady_clock::now();
  auto probs = p.predict(net, loads);
  elapsed = seconds_since(t0);
  if (probs.size() != p.targets.size())
    throw std::logic_error("predictor returned " + std::to_string(probs.size()) + " rows for " +
                           std::to_string(p.targets.size()) + " targets");
  return probs;
}

inline void require(bool ok, Method m, const std::string& what) {
  if (!ok) throw DataError(std::string(to_string(m)) + " needs " + what);
}

}  // namespace detail

/// Solves one load vector with the given method. A feasible result always
/// passes verify_solution; an infeasible reduced problem is reported as such
/// unless `fallback` is set.
inline MethodResult run_method(Method method, const Network& net, const LoadVector& loads,
                               const SwitchPredictor* fgnn, const SwitchPredictor* rgnn, const CriticalLineMap* crit,
                               const MethodOptions& opt = {}) {
  MethodResult res;
  res.method = method;
  SwitchingMap fixed;
  switch (method) {
    case Method::Full:
      break;
    case Method::FgnnLp:
    case Method::FgnnMilp: {
      detail::require(fgnn != nullptr, method, "a full GNN model");
      for (std::size_t k : net.switchable_branches())
        detail::require(std::count(fgnn->targets.begin(), fgnn->targets.end(), net.branches()[k].id) == 1, method,
                        "a full GNN model covering branch " + std::to_string(net.branches()[k].id));
      const auto probs = detail::timed_predict(*fgnn, net, loads, res.inference_time);
      if (method == Method::FgnnLp) {
        for (std::size_t t = 0; t < probs.size(); ++t) fixed[fgnn->targets[t]] = argmax_status(probs[t]);
      } else {
        fixed = select_confident(fgnn->targets, probs, opt.lower, opt.upper).selected;
      }
      break;
    }
    case Method::RgnnLp:
    case Method::RgnnMilp: {
      detail::require(rgnn != nullptr, method, "a reduced GNN model");
      detail::require(crit != nullptr, method, "a critical-line map");
      detail::require(rgnn->targets == crit->critical, method, "a reduced GNN whose targets are the critical lines");
      fixed = crit->constant_status;
      std::vector<EdgeProb> probs;
      if (!rgnn->targets.empty()) probs = detail::timed_predict(*rgnn, net, loads, res.inference_time);
      if (method == Method::RgnnLp) {
        for (std::size_t t = 0; t < probs.size(); ++t) fixed[rgnn->targets[t]] = argmax_status(probs[t]);
      } else {
        for (const auto& [id, s] : select_confident(rgnn->targets, probs, opt.lower, opt.upper).selected)
          fixed[id] = s;
      }
      break;
    }
  }

  const auto program = build_nropf(net, loads, fixed);
  res.fixed = fixed;
  res.free_binaries = program.free_count();
  if ((method == Method::FgnnLp || method == Method::RgnnLp) && res.free_binaries != 0)
    throw std::logic_error(std::string(to_string(method)) + " left binaries free");
  auto outcome = solve_milp(program, opt.milp);
  res.solve_time = outcome.wall_time;
  res.nodes = outcome.nodes;
  if (!outcome.incumbent && opt.fallback && method != Method::Full) {
    outcome = solve_milp(build_nropf(net, loads), opt.milp);
    res.fallback = true;
    res.solve_time += outcome.wall_time;
    res.nodes += outcome.nodes;
  }
  res.status = outcome.status;
  if (outcome.incumbent) {
    if (const auto rep = verify_solution(net, loads, *outcome.incumbent); !rep.empty())
      throw NumericalError(std::string(to_string(method)) + " produced a solution that fails verification: " +
                           rep.to_string());
    res.cost = outcome.incumbent->cost;
    res.solution = std::move(outcome.incumbent);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Ratios and statistics

inline double pct_cost(double method_cost, double full_cost) {
  if (!(full_cost > 0.0) || !std::isfinite(full_cost) || !std::isfinite(method_cost))
    throw std::invalid_argument("pct_cost: reference cost must be positive and finite");
  return 100.0 * method_cost / full_cost;
}

inline double pct_time(double method_time, double full_time) {
  if (!(full_time > 0.0) || !std::isfinite(full_time) || !std::isfinite(method_time))
    throw std::invalid_argument("pct_time: reference time must be positive and finite");
  return 100.0 * method_time / full_time;
}

struct RatioStats {
  double mean = 0.0, max = 0.0, min = 0.0, median = 0.0, std_dev = 0.0;
  std::size_t count = 0;
};

/// Sample standard deviation; median is the midpoint of the two central
/// values for an even count.
inline RatioStats aggregate_stats(const std::vector<double>& series) {
  if (series.empty()) throw std::invalid_argument("aggregate_stats: empty series");
  RatioStats s;
  s.count = series.size();
  auto sorted = series;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double sum = 0.0;
  for (double v : series) sum += v;
  s.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : series) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Bench

struct BenchRow {
  std::size_t sample = 0;              // dataset index
  std::vector<MethodResult> results;   // FULL first, then the requested methods
};

struct MethodSummary {
  Method method = Method::Full;
  std::size_t samples = 0;
  std::size_t infeasible = 0;
  std::size_t fallbacks = 0;
  std::optional<RatioStats> cost;  // pct_cost over feasible samples
  std::optional<RatioStats> time;  // pct_time over feasible samples
  double mean_nodes = 0.0;
  double mean_free_binaries = 0.0;
  double mean_inference_time = 0.0;

  double infeasible_rate() const { return samples ? static_cast<double>(infeasible) / static_cast<double>(samples) : 0.0; }
};

struct BenchReport {
  std::vector<Method> methods;  // FULL first
  std::vector<BenchRow> rows;
  std::vector<MethodSummary> summary;
};

inline std::vector<MethodSummary> summarize(const std::vector<Method>& methods, const std::vector<BenchRow>& rows) {
  std::vector<MethodSummary> out;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodSummary s;
    s.method = methods[m];
    std::vector<double> cost, time;
    double nodes = 0.0, free = 0.0, infer = 0.0;
    for (const auto& row : rows) {
      const auto& full = row.results.front();
      const auto& r = row.results[m];
      ++s.samples;
      nodes += static_cast<double>(r.nodes);
      free += static_cast<double>(r.free_binaries);
      infer += r.inference_time;
      if (r.fallback) ++s.fallbacks;
      if (!r.feasible()) {
        ++s.infeasible;
        continue;
      }
      if (full.feasible() && full.cost > 0.0) cost.push_back(pct_cost(r.cost, full.cost));
      if (full.solve_time > 0.0) time.push_back(pct_time(r.solve_time, full.solve_time));
    }
    if (s.samples) {
      const double n = static_cast<double>(s.samples);
      s.mean_nodes = nodes / n;
      s.mean_free_binaries = free / n;
      s.mean_inference_time = infer / n;
    }
    if (!cost.empty()) s.cost = aggregate_stats(cost);
    if (!time.empty()) s.time = aggregate_stats(time);
    out.push_back(s);
  }
  return out;
}

/// Runs FULL plus `methods` on every listed sample. Rows come back in the
/// order of `rows`, independent of `workers`.
inline BenchReport run_bench(const Network& net, const Dataset& ds, const std::vector<std::size_t>& rows,
                             const std::vector<Method>& methods, const SwitchPredictor* fgnn,
                             const SwitchPredictor* rgnn, const CriticalLineMap* crit, const MethodOptions& opt = {},
                             unsigned workers = 1) {
  check_fingerprint(ds, net);
  BenchReport rep;
  rep.methods.push_back(Method::Full);
  for (Method m : methods)
    if (m != Method::Full) rep.methods.push_back(m);
  rep.rows.resize(rows.size());
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    const auto& loads = ds.samples[rows[i]].loads;
    rep.rows[i].sample = rows[i];
    for (Method m : rep.methods) rep.rows[i].results.push_back(run_method(m, net, loads, fgnn, rgnn, crit, opt));
  });
  rep.summary = summarize(rep.methods, rep.rows);
  return rep;
}

namespace detail {

inline std::string cell(double v) { return std::isfinite(v) ? format_double(v) : ""; }

}  // namespace detail

/// Per-sample delimited table for one method (index into report.methods).
inline void write_method_table(std::ostream& os, const BenchReport& rep, std::size_t m) {
  os << "sample,status,fallback,cost,full_cost,pct_cost,solve_time,full_time,pct_time,inference_time,"
        "free_binaries,full_free_binaries,nodes,full_nodes,switching\n";
  for (const auto& row : rep.rows) {
    const auto& full = row.results.front();
    const auto& r = row.results[m];
    const bool both = r.feasible() && full.feasible() && full.cost > 0.0;
    os << row.sample << ',' << (r.feasible() ? to_string(r.status) : "infeasible") << ',' << (r.fallback ? 1 : 0)
       << ',' << detail::cell(r.cost) << ',' << detail::cell(full.cost) << ','
       << (both ? format_double(pct_cost(r.cost, full.cost)) : "") << ',' << format_double(r.solve_time) << ','
       << format_double(full.solve_time) << ','
       << (r.feasible() && full.solve_time > 0.0 ? format_double(pct_time(r.solve_time, full.solve_time)) : "")
       << ',' << format_double(r.inference_time) << ',' << r.free_binaries << ',' << full.free_binaries << ','
       << r.nodes << ',' << full.nodes << ',';
    if (r.solution)
      for (int b : r.solution->switching) os << (b ? '1' : '0');
    os << '\n';
  }
}

inline void write_summary_table(std::ostream& os, const BenchReport& rep) {
  os << "method,samples,infeasible,infeasible_rate,fallbacks,"
        "cost_mean,cost_max,cost_min,cost_median,cost_std,"
        "time_mean,time_max,time_min,time_median,time_std,"
        "mean_nodes,mean_free_binaries,mean_inference_time\n";
  auto stats = [&](const std::optional<RatioStats>& s) {
    if (!s) return std::string(",,,,");
    return format_double(s->mean) + ',' + format_double(s->max) + ',' + format_double(s->min) + ',' +
           format_double(s->median) + ',' + format_double(s->std_dev);
  };
  for (const auto& s : rep.summary)
    os << to_string(s.method) << ',' << s.samples << ',' << s.infeasible << ',' << format_double(s.infeasible_rate())
       << ',' << s.fallbacks << ',' << stats(s.cost) << ',' << stats(s.time) << ',' << format_double(s.mean_nodes)
       << ',' << format_double(s.mean_free_binaries) << ',' << format_double(s.mean_inference_time) << '\n';
}

/// Aligned text: total cost and solving time as a percentage of FULL, then
/// search effort per method.
inline void write_text_report(std::ostream& os, const BenchReport& rep) {
  auto fixed = [](double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  auto block = [&](const char* title, bool cost) {
    os << title << '\n';
    os << pad("Method", 10) << pad("Mean", 11) << pad("Max", 11) << pad("Min", 11) << pad("Median", 11)
       << pad("Std. Dev.", 11) << '\n';
    for (const auto& s : rep.summary) {
      if (s.method == Method::Full) continue;
      const auto& st = cost ? s.cost : s.time;
      os << pad(to_string(s.method), 10);
      if (st)
        os << pad(fixed(st->mean, 3), 11) << pad(fixed(st->max, 3), 11) << pad(fixed(st->min, 3), 11)
           << pad(fixed(st->median, 3), 11) << pad(fixed(st->std_dev, 3), 11);
      else
        os << pad("n/a", 11);
      os << '\n';
    }
    os << '\n';
  };
  os << "Samples: " << rep.rows.size() << "\n\n";
  block("Total cost, % of FULL", true);
  block("Solving time, % of FULL", false);
  os << pad("Method", 10) << pad("Infeasible", 12) << pad("Fallbacks", 11) << pad("Free bin.", 11) << pad("Nodes", 11)
     << pad("Infer. s", 11) << '\n';
  for (const auto& s : rep.summary)
    os << pad(to_string(s.method), 10) << pad(std::to_string(s.infeasible), 12) << pad(std::to_string(s.fallbacks), 11)
       << pad(fixed(s.mean_free_binaries, 2), 11) << pad(fixed(s.mean_nodes, 2), 11)
       << pad(fixed(s.mean_inference_time, 6), 11) << '\n';
}

}  // namespace nropf
