#pragma once

// Labelled samples (perturbed load vector -> optimal switching vector),
// train/val/test splits, and the tab-delimited dataset file.
//
// File layout:
//   NROPF-DATASET 1 <fingerprint> <buses> <branches> <samples>
//   # seed  split  cost  solve_time  nodes  loads  label
//   <one tab-separated record per sample>
// loads are comma separated MW values in bus-id order; label is a string of
// 0/1 characters in branch-id order.

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nropf/common.hpp"
#include "nropf/grid.hpp"
#include "nropf/milp.hpp"
#include "nropf/opf.hpp"

namespace nropf {

enum class Split { None, Train, Val, Test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::None: return "none";
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "none";
}

inline Split parse_split(std::string_view s) {
  if (s == "none") return Split::None;
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw ParseError("unknown split tag '" + std::string(s) + "'");
}

struct Sample {
  std::uint64_t seed = 0;
  LoadVector loads;
  std::vector<int> label;  // per branch, 1 = ON
  double cost = 0.0;
  double solve_time = 0.0;
  std::size_t nodes = 0;
  Split split = Split::None;
};

struct Dataset {
  std::string fingerprint;
  std::size_t bus_count = 0;
  std::size_t branch_count = 0;
  std::vector<Sample> samples;

  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].split == s) out.push_back(i);
    return out;
  }
};

struct GenerateOptions {
  double delta = 0.07;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  MilpOptions milp;
  /// Store measured solve times. Off by default so that reruns are byte-identical.
  bool record_time = false;
  std::size_t max_attempts = 25;         // draws per sample before giving up
  double max_infeasible_rate = 0.2;      // over all draws
};

struct GenerateReport {
  std::size_t draws = 0;
  std::size_t infeasible = 0;
  std::vector<std::uint64_t> infeasible_seeds;  // in sample order
};

namespace detail {

struct SampleAttempt {
  Sample sample;
  std::size_t draws = 0;
  std::vector<std::uint64_t> infeasible_seeds;
  bool ok = false;
};

inline SampleAttempt label_sample(const Network& net, std::size_t index, const GenerateOptions& opt) {
  SampleAttempt out;
  const std::uint64_t base = derive_seed(opt.master_seed, index);
  for (std::size_t a = 0; a < opt.max_attempts; ++a) {
    const std::uint64_t seed = a == 0 ? base : derive_seed(base, a);
    const auto loads = perturb_loads(net, opt.delta, seed);
    ++out.draws;
    const auto result = solve_milp(build_nropf(net, loads), opt.milp);
    if (!result.incumbent) {
      out.infeasible_seeds.push_back(seed);
      continue;
    }
    const auto& sol = *result.incumbent;
    if (const auto rep = verify_solution(net, loads, sol); !rep.empty())
      throw NumericalError("sample " + std::to_string(index) + " (seed " + std::to_string(seed) +
                           "): labelled solution fails verification: " + rep.to_string());
    out.sample = {seed, loads, sol.switching, sol.cost, opt.record_time ? result.wall_time : 0.0, result.nodes,
                  Split::None};
    out.ok = true;
    return out;
  }
  return out;
}

}  // namespace detail

/// n samples labelled by the full NR-OPF MILP. Sample i draws its loads with
/// seed derive_seed(master, i); an infeasible draw is replaced by the next
/// derived seed. Output order (and content) is independent of `workers`.
inline Dataset generate_dataset(const Network& net, std::size_t n, const GenerateOptions& opt = {},
                                GenerateReport* report = nullptr) {
  if (n == 0) throw std::invalid_argument("generate_dataset: need at least one sample");
  if (const auto rep = validate_network(net); !rep.empty()) throw SemanticError("invalid network: " + rep.to_string());
  std::vector<detail::SampleAttempt> attempts(n);
  parallel_for(n, opt.workers, [&](std::size_t i) { attempts[i] = detail::label_sample(net, i, opt); });

  GenerateReport rep;
  for (const auto& a : attempts) {
    rep.draws += a.draws;
    rep.infeasible += a.infeasible_seeds.size();
    rep.infeasible_seeds.insert(rep.infeasible_seeds.end(), a.infeasible_seeds.begin(), a.infeasible_seeds.end());
  }
  if (report) *report = rep;
  const double rate = static_cast<double>(rep.infeasible) / static_cast<double>(rep.draws);
  std::size_t stuck = n;
  for (std::size_t i = 0; i < n && stuck == n; ++i)
    if (!attempts[i].ok) stuck = i;
  if (stuck < n || rate > opt.max_infeasible_rate) {
    std::string msg = "dataset generation aborted: " + std::to_string(rep.infeasible) + " of " +
                      std::to_string(rep.draws) + " load draws were infeasible (" +
                      format_double(std::round(1000.0 * rate) / 10.0) + "%, limit " +
                      format_double(100.0 * opt.max_infeasible_rate) + "%)";
    if (stuck < n)
      msg += "; sample " + std::to_string(stuck) + " stayed infeasible after " + std::to_string(opt.max_attempts) +
             " draws";
    msg += "; first infeasible seed " + std::to_string(rep.infeasible_seeds.front());
    throw DataError(msg);
  }

  Dataset ds;
  ds.fingerprint = network_fingerprint(net);
  ds.bus_count = net.bus_count();
  ds.branch_count = net.branch_count();
  ds.samples.reserve(n);
  for (auto& a : attempts) ds.samples.push_back(std::move(a.sample));
  return ds;
}

/// Shuffles sample positions with `seed`, then assigns contiguous blocks:
/// floor(n * val) to val, floor(n * test) to test, the rest to train.
inline void split_dataset(Dataset& ds, std::array<double, 3> fractions = {0.8, 0.1, 0.1}, std::uint64_t seed = 1) {
  const std::size_t n = ds.samples.size();
  if (n < 3) throw DataError("split_dataset: need at least 3 samples, have " + std::to_string(n));
  for (double f : fractions)
    if (!(f > 0.0)) throw std::invalid_argument("split_dataset: fractions must be positive");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: fractions must sum to 1");
  auto count = [&](double f) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9)); };
  const std::size_t n_val = count(fractions[1]), n_test = count(fractions[2]);
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  CounterRng rng(seed);
  shuffle(order, rng);
  for (std::size_t r = 0; r < n; ++r)
    ds.samples[order[r]].split = r < n_train ? Split::Train : r < n_train + n_val ? Split::Val : Split::Test;
}

/// Raises DataError unless the dataset was generated from `net`.
inline void check_fingerprint(const Dataset& ds, const Network& net) {
  const auto fp = network_fingerprint(net);
  if (ds.fingerprint != fp)
    throw DataError("dataset fingerprint " + ds.fingerprint + " does not match case fingerprint " + fp);
  if (ds.bus_count != net.bus_count() || ds.branch_count != net.branch_count())
    throw DataError("dataset dimensions do not match the case");
}

/// Labels of the given samples as a row-major matrix (samples x branches).
inline std::vector<std::vector<int>> label_matrix(const Dataset& ds, const std::vector<std::size_t>& rows) {
  std::vector<std::vector<int>> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(ds.samples[i].label);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::string_view kDatasetMagic = "NROPF-DATASET";

inline void write_dataset(std::ostream& os, const Dataset& ds) {
  os << kDatasetMagic << " 1 " << ds.fingerprint << ' ' << ds.bus_count << ' ' << ds.branch_count << ' '
     << ds.samples.size() << '\n';
  os << "# seed\tsplit\tcost\tsolve_time\tnodes\tloads\tlabel\n";
  for (const auto& s : ds.samples) {
    os << s.seed << '\t' << to_string(s.split) << '\t' << format_double(s.cost) << '\t'
       << format_double(s.solve_time) << '\t' << s.nodes << '\t';
    for (std::size_t i = 0; i < s.loads.size(); ++i) os << (i ? "," : "") << format_double(s.loads[i]);
    os << '\t';
    for (int b : s.label) os << (b ? '1' : '0');
    os << '\n';
  }
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream os;
  write_dataset(os, ds);
  return os.str();
}

inline Dataset parse_dataset(std::string_view text) {
  Dataset ds;
  std::size_t line_no = 0, expected = 0;
  bool header = false;
  auto fail = [&](const std::string& what) -> ParseError { return ParseError("dataset: " + what, line_no, 1); };
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      const auto f = split(line, ' ');
      if (f.size() != 6 || f[0] != kDatasetMagic) throw fail("missing NROPF-DATASET header");
      if (f[1] != "1") throw fail("unsupported format version '" + std::string(f[1]) + "'");
      ds.fingerprint = std::string(f[2]);
      try {
        ds.bus_count = parse_integer<std::size_t>(f[3]);
        ds.branch_count = parse_integer<std::size_t>(f[4]);
        expected = parse_integer<std::size_t>(f[5]);
      } catch (const ParseError& e) {
        throw fail(e.what());
      }
      header = true;
      continue;
    }
    const auto f = split(line, '\t');
    if (f.size() != 7) throw fail("expected 7 tab-separated fields, found " + std::to_string(f.size()));
    Sample s;
    try {
      s.seed = parse_integer<std::uint64_t>(f[0]);
      s.split = parse_split(f[1]);
      s.cost = parse_double(f[2]);
      s.solve_time = parse_double(f[3]);
      s.nodes = parse_integer<std::size_t>(f[4]);
      for (auto v : split(f[5], ',')) s.loads.push_back(parse_double(v));
    } catch (const ParseError& e) {
      throw fail(e.what());
    }
    for (char c : f[6]) {
      if (c != '0' && c != '1') throw fail("label must consist of 0/1 characters");
      s.label.push_back(c == '1');
    }
    if (s.loads.size() != ds.bus_count) throw fail("load vector length does not match the header");
    if (s.label.size() != ds.branch_count) throw fail("label length does not match the header");
    ds.samples.push_back(std::move(s));
  }
  if (!header) throw ParseError("dataset: empty input");
  if (ds.samples.size() != expected)
    throw ParseError("dataset: header announces " + std::to_string(expected) + " samples, found " +
                     std::to_string(ds.samples.size()));
  return ds;
}

/// Fraction of samples with each branch ON, per branch.
inline std::vector<double> on_rates(const Dataset& ds) {
  std::vector<double> rate(ds.branch_count, 0.0);
  if (ds.samples.empty()) return rate;
  for (const auto& s : ds.samples)
    for (std::size_t k = 0; k < rate.size(); ++k) rate[k] += s.label[k];
  for (double& r : rate) r /= static_cast<double>(ds.samples.size());
  return rate;
}

}  // namespace nropf
