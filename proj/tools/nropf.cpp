// nropf command-line driver.
//
// Exit codes: 0 success, 1 usage error, 2 data or parse error,
// 3 infeasibility where it is fatal (verify, solve), 4 internal numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nropf/nropf.hpp"

namespace fs = std::filesystem;
using namespace nropf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInfeasible = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

Network load_case(const std::string& path) {
  try {
    return parse_case(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Dataset load_dataset(const std::string& path, const Network& net) {
  auto ds = parse_dataset(read_text(path));
  check_fingerprint(ds, net);
  return ds;
}

XenetModel load_model(const std::string& path, const Network& net) {
  auto model = parse_model(read_text(path));
  if (!model.fingerprint.empty() && model.fingerprint != network_fingerprint(net))
    throw DataError("model '" + path + "' was trained on a different case (fingerprint " + model.fingerprint + ")");
  return model;
}

LoadVector parse_loads(const std::string& text, const Network& net) {
  LoadVector loads;
  for (auto v : split(text, ',')) loads.push_back(parse_double(v));
  if (loads.size() != net.bus_count())
    throw UsageError("--loads needs " + std::to_string(net.bus_count()) + " comma-separated values, got " +
                     std::to_string(loads.size()));
  return loads;
}

std::array<double, 3> parse_split_fractions(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw UsageError("--split needs three comma-separated fractions");
  return {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
}

unsigned resolve_workers(unsigned w) { return w ? w : std::max(1u, std::thread::hardware_concurrency()); }

CriticalLineMap critical_map(const Network& net, const Dataset& ds) {
  auto rows = ds.indices(Split::Train);
  const auto val = ds.indices(Split::Val);
  rows.insert(rows.end(), val.begin(), val.end());
  if (rows.empty()) throw DataError("dataset has no train/val samples; run gen-data with a split");
  return find_noncritical(net, label_matrix(ds, rows));
}

std::string switching_string(const std::vector<int>& s) {
  std::string out;
  for (int b : s) out += b ? '1' : '0';
  return out;
}

// ---------------------------------------------------------------------------

int cmd_case_validate(const std::string& path) {
  const auto text = read_text(path);
  nlohmann::json doc;
  Network net;
  try {
    net = parse_case(text);
  } catch (const SemanticError& e) {
    std::cout << path << ": INVALID\n" << e.what() << '\n';
    return kData;
  }
  std::cout << path << ": ok\n"
            << "  buses " << net.bus_count() << ", generators " << net.generator_count() << ", branches "
            << net.branch_count() << " (" << net.switchable_branches().size() << " switchable)\n"
            << "  load " << format_double(net.total_load()) << " MW, capacity " << format_double(net.total_capacity())
            << " MW\n"
            << "  fingerprint " << network_fingerprint(net) << '\n';
  return kOk;
}

struct GenArgs {
  std::string case_path, out, log;
  std::size_t samples = 500;
  double delta = 0.07;
  std::uint64_t seed = 1, split_seed = 1;
  std::string split = "0.8,0.1,0.1";
  double mip_gap = 0.0;
  bool record_time = false;
  unsigned workers = 1;
};

int cmd_gen_data(const GenArgs& a) {
  const auto net = load_case(a.case_path);
  const auto fractions = parse_split_fractions(a.split);
  GenerateOptions opt;
  opt.delta = a.delta;
  opt.master_seed = a.seed;
  opt.workers = resolve_workers(a.workers);
  opt.milp.mip_gap = a.mip_gap;
  opt.record_time = a.record_time;
  GenerateReport rep;
  auto ds = generate_dataset(net, a.samples, opt, &rep);
  split_dataset(ds, fractions, a.split_seed);
  write_text(a.out, serialize_dataset(ds));

  std::ostringstream log;
  log << "samples " << ds.samples.size() << "  draws " << rep.draws << "  infeasible resamples " << rep.infeasible
      << "\nsplit train " << ds.indices(Split::Train).size() << "  val " << ds.indices(Split::Val).size() << "  test "
      << ds.indices(Split::Test).size() << "\n\nbranch\tfrom\tto\tswitchable\ton_rate\n";
  const auto rates = on_rates(ds);
  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    const auto& b = net.branches()[k];
    log << b.id << '\t' << b.from << '\t' << b.to << '\t' << (b.switchable ? 1 : 0) << '\t' << format_double(rates[k])
        << '\n';
  }
  std::cout << log.str();
  if (!a.log.empty()) write_text(a.log, log.str());
  return kOk;
}

int cmd_filter(const std::string& case_path, const std::string& data, const std::string& out) {
  const auto net = load_case(case_path);
  const auto ds = load_dataset(data, net);
  const auto crit = critical_map(net, ds);
  std::cout << "critical " << crit.critical.size() << " of " << net.switchable_branches().size()
            << " switchable lines\n";
  std::cout << "branch\tstatus\n";
  for (std::size_t k : net.switchable_branches()) {
    const int id = net.branches()[k].id;
    const auto it = crit.constant_status.find(id);
    std::cout << id << '\t' << (it == crit.constant_status.end() ? "critical" : it->second ? "always-on" : "always-off")
              << '\n';
  }
  if (!out.empty()) write_text(out, critical_map_to_json(crit).dump(2) + "\n");
  return kOk;
}

struct TrainArgs {
  std::string case_path, data, variant = "fgnn", out, curve;
  ModelConfig model;
  TrainConfig train;
};

int cmd_train(const TrainArgs& a) {
  const auto net = load_case(a.case_path);
  const auto ds = load_dataset(a.data, net);
  const auto train_rows = ds.indices(Split::Train), val_rows = ds.indices(Split::Val);
  std::vector<int> targets;
  CriticalLineMap crit;
  if (a.variant == "fgnn") {
    for (std::size_t k : net.switchable_branches()) targets.push_back(net.branches()[k].id);
  } else {
    crit = critical_map(net, ds);
    targets = crit.critical;
  }
  XenetModel model(a.model, targets, a.train.seed);
  model.variant = a.variant;
  model.fingerprint = network_fingerprint(net);
  model.fixed_status = crit.constant_status;
  model.train_config = a.train;

  std::ostringstream curve;
  curve << "epoch,train_loss,val_loss,train_acc,val_acc\n";
  if (targets.empty()) {
    std::cerr << "note: every switchable line is constant over train/val; the " << a.variant
              << " model has no prediction targets and reduces to the stored table of constant statuses\n";
    std::vector<GraphFeatures> raw;
    for (std::size_t i : train_rows) raw.push_back(build_features(net, ds.samples[i].loads));
    if (!raw.empty()) model.normalization() = fit_normalization(raw);
  } else {
    const auto res = train(model, net, ds, train_rows, val_rows, a.train, [&](const EpochStats& s) {
      curve << s.epoch << ',' << format_double(s.train_loss) << ',' << format_double(s.val_loss) << ','
            << format_double(s.train_acc) << ',' << format_double(s.val_acc) << '\n';
    });
    const auto& best = res.curve[res.best_epoch - 1];
    // Majority-class baseline per branch over the val split.
    double baseline = 0.0;
    if (!val_rows.empty()) {
      const auto idx = model.resolve_targets(net);
      std::size_t hits = 0;
      for (std::size_t t = 0; t < idx.size(); ++t) {
        std::size_t on_train = 0, on_val = 0;
        for (std::size_t i : train_rows) on_train += ds.samples[i].label[idx[t]];
        for (std::size_t i : val_rows) on_val += ds.samples[i].label[idx[t]];
        hits += 2 * on_train >= train_rows.size() ? on_val : val_rows.size() - on_val;
      }
      baseline = static_cast<double>(hits) / static_cast<double>(idx.size() * val_rows.size());
    }
    std::cout << a.variant << ": " << targets.size() << " target lines, " << res.curve.size()
              << " epochs, best epoch " << res.best_epoch << "\n  val loss " << format_double(best.val_loss)
              << "  val accuracy " << format_double(best.val_acc) << "  majority baseline "
              << format_double(baseline) << '\n';
  }
  write_text(a.out, serialize_model(model));
  if (!a.curve.empty()) write_text(a.curve, curve.str());
  return kOk;
}

int cmd_predict(const std::string& case_path, const std::string& model_path, const std::string& loads_text,
                const std::string& data, long sample, double lower, double upper) {
  const auto net = load_case(case_path);
  const auto model = load_model(model_path, net);
  LoadVector loads = net.base_loads();
  if (!loads_text.empty()) loads = parse_loads(loads_text, net);
  if (!data.empty()) {
    const auto ds = load_dataset(data, net);
    if (sample < 0 || static_cast<std::size_t>(sample) >= ds.samples.size())
      throw UsageError("--sample out of range");
    loads = ds.samples[static_cast<std::size_t>(sample)].loads;
  }
  const auto probs = model.predict(net, loads);
  const auto sel = select_confident(model.targets(), probs, lower, upper);
  std::cout << "branch\tP_OFF\tP_ON\tselection\n";
  for (const auto& [id, s] : model.fixed_status) std::cout << id << "\t-\t-\tconstant-" << (s ? "on" : "off") << '\n';
  for (std::size_t t = 0; t < probs.size(); ++t) {
    const int id = model.targets()[t];
    const auto it = sel.selected.find(id);
    std::cout << id << '\t' << format_double(probs[t][0]) << '\t' << format_double(probs[t][1]) << '\t'
              << (it == sel.selected.end() ? std::string("exclude") : it->second ? "select-on" : "select-off")
              << '\n';
  }
  return kOk;
}

struct SolveArgs {
  std::string case_path, loads, method = "FULL", fgnn, rgnn, out, lp_dump;
  double mip_gap = 0.0, lower = 0.05, upper = 0.95;
  bool fallback = false;
};

int cmd_solve(const SolveArgs& a) {
  const auto net = load_case(a.case_path);
  const LoadVector loads = a.loads.empty() ? net.base_loads() : parse_loads(a.loads, net);
  const Method method = parse_method(a.method);
  std::optional<XenetModel> fgnn, rgnn;
  std::optional<SwitchPredictor> fp, rp;
  std::optional<CriticalLineMap> crit;
  if (!a.fgnn.empty()) fp = make_predictor(fgnn.emplace(load_model(a.fgnn, net)));
  if (!a.rgnn.empty()) {
    rp = make_predictor(rgnn.emplace(load_model(a.rgnn, net)));
    crit = CriticalLineMap{rgnn->fixed_status, rgnn->targets()};
  }
  if (!a.lp_dump.empty()) {
    std::ofstream out(a.lp_dump);
    write_lp_format(out, build_nropf(net, loads).lp);
  }
  MethodOptions opt;
  opt.milp.mip_gap = a.mip_gap;
  opt.lower = a.lower;
  opt.upper = a.upper;
  opt.fallback = a.fallback;
  const auto res = run_method(method, net, loads, fp ? &*fp : nullptr, rp ? &*rp : nullptr, crit ? &*crit : nullptr, opt);
  std::cout << "method " << to_string(method) << "  status " << to_string(res.status) << (res.fallback ? " (fallback)" : "")
            << "\nfree binaries " << res.free_binaries << "  nodes " << res.nodes << "  solve time "
            << format_double(res.solve_time) << " s\n";
  if (!res.feasible()) {
    std::cout << "no feasible topology\n";
    return kInfeasible;
  }
  std::cout << "cost " << format_double(res.cost) << "\nswitching " << switching_string(res.solution->switching)
            << '\n';
  if (!a.out.empty()) write_text(a.out, serialize_solution(net, loads, *res.solution));
  return kOk;
}

struct BenchArgs {
  std::string case_path, data, fgnn, rgnn, report_dir = "report";
  std::vector<std::string> methods{"FGNN-LP", "FGNN-MILP", "RGNN-LP", "RGNN-MILP"};
  double mip_gap = 0.0, lower = 0.05, upper = 0.95;
  bool fallback = false;
  unsigned workers = 1;
};

int cmd_bench(const BenchArgs& a) {
  const auto net = load_case(a.case_path);
  const auto ds = load_dataset(a.data, net);
  std::vector<Method> methods;
  bool need_f = false, need_r = false;
  for (const auto& m : a.methods) {
    methods.push_back(parse_method(m));
    need_f = need_f || methods.back() == Method::FgnnLp || methods.back() == Method::FgnnMilp;
    need_r = need_r || methods.back() == Method::RgnnLp || methods.back() == Method::RgnnMilp;
  }
  std::vector<std::string> missing;
  if (need_f && a.fgnn.empty()) missing.push_back("--fgnn model");
  if (need_r && a.rgnn.empty()) missing.push_back("--rgnn model");
  if (!missing.empty()) {
    std::string msg = "bench is missing:";
    for (const auto& m : missing) msg += " " + m;
    throw UsageError(msg);
  }
  const auto rows = ds.indices(Split::Test);
  if (rows.empty()) throw DataError("dataset has no test samples");
  std::optional<XenetModel> fgnn, rgnn;
  std::optional<SwitchPredictor> fp, rp;
  std::optional<CriticalLineMap> crit;
  if (need_f) fp = make_predictor(fgnn.emplace(load_model(a.fgnn, net)));
  if (need_r) {
    rp = make_predictor(rgnn.emplace(load_model(a.rgnn, net)));
    crit = CriticalLineMap{rgnn->fixed_status, rgnn->targets()};
  }
  MethodOptions opt;
  opt.milp.mip_gap = a.mip_gap;
  opt.lower = a.lower;
  opt.upper = a.upper;
  opt.fallback = a.fallback;
  const auto rep = run_bench(net, ds, rows, methods, fp ? &*fp : nullptr, rp ? &*rp : nullptr,
                             crit ? &*crit : nullptr, opt, resolve_workers(a.workers));
  for (std::size_t m = 0; m < rep.methods.size(); ++m) {
    std::ostringstream os;
    write_method_table(os, rep, m);
    write_text((fs::path(a.report_dir) / (std::string(to_string(rep.methods[m])) + ".csv")).string(), os.str());
  }
  std::ostringstream sum, text;
  write_summary_table(sum, rep);
  write_text_report(text, rep);
  write_text((fs::path(a.report_dir) / "summary.csv").string(), sum.str());
  write_text((fs::path(a.report_dir) / "report.txt").string(), text.str());
  std::cout << text.str();
  return kOk;
}

int cmd_verify(const std::string& case_path, const std::string& solution_path, const std::string& loads_text,
               double tol) {
  const auto net = load_case(case_path);
  const auto rec = parse_solution(read_text(solution_path));
  if (rec.fingerprint != network_fingerprint(net))
    throw DataError("solution fingerprint " + rec.fingerprint + " does not match case fingerprint " +
                    network_fingerprint(net) + " (wrong case/solution pairing)");
  const LoadVector loads = loads_text.empty() ? rec.loads : parse_loads(loads_text, net);
  const auto rep = verify_solution(net, loads, rec.solution, tol);
  if (rep.empty()) {
    std::cout << "feasible: all constraints hold within " << format_double(tol) << '\n';
    return kOk;
  }
  std::cout << "INFEASIBLE: " << rep.violations.size() << " violation(s)\n" << rep.to_string() << '\n';
  return kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-reconfigured DC optimal power flow with GNN-assisted line switching"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned workers = 1;
  app.add_option("--workers", workers, "Worker threads for per-sample work (0 = all cores)")->capture_default_str();

  auto* case_cmd = app.add_subcommand("case", "Case file utilities");
  case_cmd->require_subcommand(1);
  std::string validate_path;
  auto* validate = case_cmd->add_subcommand("validate", "Parse and check a case file");
  validate->add_option("case", validate_path, "Case JSON")->required();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labelled dataset by solving the full MILP per sample");
  gen_cmd->add_option("--case", gen.case_path, "Case JSON")->required();
  gen_cmd->add_option("--out", gen.out, "Dataset file to write")->required();
  gen_cmd->add_option("--samples", gen.samples, "Number of samples")->capture_default_str();
  gen_cmd->add_option("--delta", gen.delta, "Uniform per-bus load perturbation half-width")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  gen_cmd->add_option("--split", gen.split, "train,val,test fractions")->capture_default_str();
  gen_cmd->add_option("--split-seed", gen.split_seed, "Seed for the split shuffle")->capture_default_str();
  gen_cmd->add_option("--mip-gap", gen.mip_gap, "Relative MILP gap")->capture_default_str();
  gen_cmd->add_flag("--record-time", gen.record_time, "Store solve times (makes output non-reproducible)");
  gen_cmd->add_option("--log", gen.log, "Also write the generation log here");

  std::string filter_case, filter_data, filter_out;
  auto* filter_cmd = app.add_subcommand("filter", "Critical-line filter over the train and val labels");
  filter_cmd->add_option("--case", filter_case, "Case JSON")->required();
  filter_cmd->add_option("--data", filter_data, "Dataset file")->required();
  filter_cmd->add_option("--out", filter_out, "Write the critical-line map as JSON");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a full (fgnn) or reduced (rgnn) switching model");
  train_cmd->add_option("--case", tr.case_path, "Case JSON")->required();
  train_cmd->add_option("--data", tr.data, "Dataset file")->required();
  train_cmd->add_option("--variant", tr.variant, "fgnn or rgnn")
      ->check(CLI::IsMember({"fgnn", "rgnn"}))
      ->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Model file to write")->required();
  train_cmd->add_option("--curve", tr.curve, "Per-epoch loss/accuracy CSV");
  train_cmd->add_option("--epochs", tr.train.epochs)->capture_default_str();
  train_cmd->add_option("--batch", tr.train.batch)->capture_default_str();
  train_cmd->add_option("--lr", tr.train.learning_rate)->capture_default_str();
  train_cmd->add_option("--patience", tr.train.patience)->capture_default_str();
  train_cmd->add_option("--seed", tr.train.seed)->capture_default_str();
  train_cmd->add_option("--layers", tr.model.layers)->capture_default_str();
  train_cmd->add_option("--stack", tr.model.stack)->capture_default_str();
  train_cmd->add_option("--hidden", tr.model.hidden)->capture_default_str();
  train_cmd->add_option("--node-width", tr.model.node_width)->capture_default_str();
  train_cmd->add_option("--edge-width", tr.model.edge_width)->capture_default_str();
  train_cmd->add_option("--readout-hidden", tr.model.readout_hidden)->capture_default_str();

  std::string pred_case, pred_model, pred_loads, pred_data;
  long pred_sample = -1;
  double pred_lower = 0.05, pred_upper = 0.95;
  auto* predict_cmd = app.add_subcommand("predict", "Print switching probabilities and the post-ML selection");
  predict_cmd->add_option("--case", pred_case, "Case JSON")->required();
  predict_cmd->add_option("--model", pred_model, "Model file")->required();
  auto* pl = predict_cmd->add_option("--loads", pred_loads, "Comma-separated loads in bus-id order (default: case)");
  auto* pd = predict_cmd->add_option("--data", pred_data, "Take the loads from a dataset sample");
  predict_cmd->add_option("--sample", pred_sample, "Sample index for --data")->needs(pd);
  pl->excludes(pd);
  predict_cmd->add_option("--lower", pred_lower)->capture_default_str();
  predict_cmd->add_option("--upper", pred_upper)->capture_default_str();

  SolveArgs sv;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one load vector with one method");
  solve_cmd->add_option("--case", sv.case_path, "Case JSON")->required();
  solve_cmd->add_option("--loads", sv.loads, "Comma-separated loads in bus-id order (default: case)");
  solve_cmd->add_option("--method", sv.method, "FULL, FGNN-LP, FGNN-MILP, RGNN-LP or RGNN-MILP")
      ->capture_default_str();
  solve_cmd->add_option("--fgnn", sv.fgnn, "Full model file");
  solve_cmd->add_option("--rgnn", sv.rgnn, "Reduced model file");
  solve_cmd->add_option("--out", sv.out, "Write the solution record");
  solve_cmd->add_option("--lp-dump", sv.lp_dump, "Write the full MILP in LP format");
  solve_cmd->add_option("--mip-gap", sv.mip_gap)->capture_default_str();
  solve_cmd->add_option("--lower", sv.lower)->capture_default_str();
  solve_cmd->add_option("--upper", sv.upper)->capture_default_str();
  solve_cmd->add_flag("--fallback", sv.fallback, "Re-solve FULL when the reduced problem is infeasible");

  BenchArgs bn;
  auto* bench_cmd = app.add_subcommand("bench", "Compare methods against FULL on the test split");
  bench_cmd->add_option("--case", bn.case_path, "Case JSON")->required();
  bench_cmd->add_option("--data", bn.data, "Dataset file")->required();
  bench_cmd->add_option("--fgnn", bn.fgnn, "Full model file");
  bench_cmd->add_option("--rgnn", bn.rgnn, "Reduced model file");
  bench_cmd->add_option("--report-dir", bn.report_dir)->capture_default_str();
  bench_cmd->add_option("--methods", bn.methods)->capture_default_str();
  bench_cmd->add_option("--mip-gap", bn.mip_gap)->capture_default_str();
  bench_cmd->add_option("--lower", bn.lower)->capture_default_str();
  bench_cmd->add_option("--upper", bn.upper)->capture_default_str();
  bench_cmd->add_flag("--fallback", bn.fallback, "Re-solve FULL when a reduced problem is infeasible");

  std::string ver_case, ver_solution, ver_loads;
  double ver_tol = 1e-6;
  auto* verify_cmd = app.add_subcommand("verify", "Check a solution record against a case");
  verify_cmd->add_option("--case", ver_case, "Case JSON")->required();
  verify_cmd->add_option("--solution", ver_solution, "Solution record")->required();
  verify_cmd->add_option("--loads", ver_loads, "Override the loads stored in the record");
  verify_cmd->add_option("--tol", ver_tol)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (validate->parsed()) return cmd_case_validate(validate_path);
    if (gen_cmd->parsed()) {
      gen.workers = workers;
      return cmd_gen_data(gen);
    }
    if (filter_cmd->parsed()) return cmd_filter(filter_case, filter_data, filter_out);
    if (train_cmd->parsed()) return cmd_train(tr);
    if (predict_cmd->parsed())
      return cmd_predict(pred_case, pred_model, pred_loads, pred_data, pred_sample, pred_lower, pred_upper);
    if (solve_cmd->parsed()) return cmd_solve(sv);
    if (bench_cmd->parsed()) {
      bn.workers = workers;
      return cmd_bench(bn);
    }
    if (verify_cmd->parsed()) return cmd_verify(ver_case, ver_solution, ver_loads, ver_tol);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
