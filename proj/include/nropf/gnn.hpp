#pragma once

// Edge-classification graph network built from XENet layers, with manual
// backpropagation, Adam training and a finite-difference gradient check.
//
// Per layer, with node features p (N x Fn) and directed-edge features q
// (E x Fe), E = 2|K| (row 2k is branch k from->to, row 2k+1 is to->from):
//   f_xy    = phi_f(p_x | p_y | q_xy | q_yx)
//   f_x^out = sum over edges leaving x  of sigmoid(d_out(f_xy)) * f_xy
//   f_x^in  = sum over edges entering x of sigmoid(d_in(f_yx))  * f_yx
//   p'_x    = phi_n(p_x | f_x^out | f_x^in)
//   q'_xy   = phi_q(f_xy)
// Each phi is Dense -> PReLU -> Dense -> PReLU. The readout maps
// q'_xy | q'_yx of a branch through Dense -> PReLU -> Dense to two logits,
// softmaxed into (P_OFF, P_ON).
//
// All products are plain row-wise loops with a fixed summation order, so
// relabeling the buses permutes node rows without changing any edge result.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nropf/common.hpp"
#include "nropf/datagen.hpp"
#include "nropf/grid.hpp"

namespace nropf {

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// ---------------------------------------------------------------------------
// Features

inline constexpr std::size_t kNodeFeatures = 5;  // sum p_max, sum p_min, min cost, load, is_ref
inline constexpr std::size_t kEdgeFeatures = 2;  // reactance, rating

struct GraphFeatures {
  Matrix node;                  // N x kNodeFeatures
  Matrix edge;                  // 2K x kEdgeFeatures
  std::vector<std::size_t> src;  // per directed edge
  std::vector<std::size_t> dst;
};

struct Normalization {
  std::vector<double> node_mean, node_std, edge_mean, edge_std;
  bool empty() const noexcept { return node_mean.empty(); }
};

inline void apply_normalization(GraphFeatures& f, const Normalization& norm) {
  if (norm.empty()) return;
  for (std::size_t r = 0; r < f.node.rows; ++r)
    for (std::size_t c = 0; c < f.node.cols; ++c)
      f.node(r, c) = (f.node(r, c) - norm.node_mean[c]) / norm.node_std[c];
  for (std::size_t r = 0; r < f.edge.rows; ++r)
    for (std::size_t c = 0; c < f.edge.cols; ++c)
      f.edge(r, c) = (f.edge(r, c) - norm.edge_mean[c]) / norm.edge_std[c];
}

/// Raw bus and branch attributes; normalized when `norm` is given.
inline GraphFeatures build_features(const Network& net, const LoadVector& loads, const Normalization* norm = nullptr) {
  if (loads.size() != net.bus_count()) throw std::invalid_argument("build_features: load vector length mismatch");
  GraphFeatures f;
  f.node = Matrix(net.bus_count(), kNodeFeatures);
  std::vector<bool> has_gen(net.bus_count(), false);
  for (std::size_t g = 0; g < net.generator_count(); ++g) {
    const auto& gen = net.generators()[g];
    const std::size_t n = net.generator_bus_index(g);
    f.node(n, 0) += gen.p_max;
    f.node(n, 1) += gen.p_min;
    f.node(n, 2) = has_gen[n] ? std::min(f.node(n, 2), gen.cost) : gen.cost;
    has_gen[n] = true;
  }
  for (std::size_t n = 0; n < net.bus_count(); ++n) {
    f.node(n, 3) = loads[n];
    f.node(n, 4) = n == net.reference_index() ? 1.0 : 0.0;
  }
  f.edge = Matrix(2 * net.branch_count(), kEdgeFeatures);
  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    const auto& br = net.branches()[k];
    for (std::size_t d = 0; d < 2; ++d) {
      f.edge(2 * k + d, 0) = br.reactance;
      f.edge(2 * k + d, 1) = br.rate_a;
    }
    f.src.push_back(net.from_index(k));
    f.dst.push_back(net.to_index(k));
    f.src.push_back(net.to_index(k));
    f.dst.push_back(net.from_index(k));
  }
  if (norm) apply_normalization(f, *norm);
  return f;
}

/// Per-column z-score statistics over all rows of the given raw features.
/// Zero spread maps to a unit divisor.
inline Normalization fit_normalization(const std::vector<GraphFeatures>& raw) {
  Normalization norm;
  auto fit = [&](auto get, std::size_t cols, std::vector<double>& mean, std::vector<double>& sd) {
    mean.assign(cols, 0.0);
    sd.assign(cols, 0.0);
    double count = 0.0;
    for (const auto& f : raw) {
      const Matrix& m = get(f);
      for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) mean[c] += m(r, c);
        count += 1.0;
      }
    }
    if (count == 0.0) throw std::invalid_argument("fit_normalization: no feature rows");
    for (double& v : mean) v /= count;
    for (const auto& f : raw) {
      const Matrix& m = get(f);
      for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) sd[c] += (m(r, c) - mean[c]) * (m(r, c) - mean[c]);
    }
    for (double& v : sd) {
      v = std::sqrt(v / count);
      if (!(v > 1e-12)) v = 1.0;
    }
  };
  fit([](const GraphFeatures& f) -> const Matrix& { return f.node; }, kNodeFeatures, norm.node_mean, norm.node_std);
  fit([](const GraphFeatures& f) -> const Matrix& { return f.edge; }, kEdgeFeatures, norm.edge_mean, norm.edge_std);
  return norm;
}

// ---------------------------------------------------------------------------
// Building blocks

/// View of one parameter tensor and its gradient accumulator.
struct ParamRef {
  std::string group;
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

struct Dense {
  std::size_t in = 0, out = 0;
  std::vector<double> w, b, gw, gb;  // w is in x out, row-major

  Dense() = default;
  Dense(std::size_t in_, std::size_t out_) : in(in_), out(out_), w(in_ * out_, 0.0), b(out_, 0.0),
                                             gw(in_ * out_, 0.0), gb(out_, 0.0) {}

  void init(CounterRng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& v : w) v = rng.uniform(-limit, limit);
  }

  Matrix forward(const Matrix& x) const {
    if (x.cols != in) throw std::invalid_argument("dense layer: input width mismatch");
    Matrix y(x.rows, out);
    for (std::size_t r = 0; r < x.rows; ++r) {
      double* yr = y.row(r);
      const double* xr = x.row(r);
      for (std::size_t j = 0; j < out; ++j) yr[j] = b[j];
      for (std::size_t k = 0; k < in; ++k) {
        const double a = xr[k];
        const double* wk = w.data() + k * out;
        for (std::size_t j = 0; j < out; ++j) yr[j] += a * wk[j];
      }
    }
    return y;
  }

  /// Accumulates parameter gradients; returns dL/dx when `want_dx`.
  Matrix backward(const Matrix& x, const Matrix& dy, bool want_dx = true) {
    for (std::size_t r = 0; r < x.rows; ++r) {
      const double* xr = x.row(r);
      const double* dr = dy.row(r);
      for (std::size_t j = 0; j < out; ++j) gb[j] += dr[j];
      for (std::size_t k = 0; k < in; ++k) {
        const double a = xr[k];
        double* gk = gw.data() + k * out;
        for (std::size_t j = 0; j < out; ++j) gk[j] += a * dr[j];
      }
    }
    if (!want_dx) return {};
    Matrix dx(x.rows, in);
    for (std::size_t r = 0; r < x.rows; ++r) {
      const double* dr = dy.row(r);
      double* xr = dx.row(r);
      for (std::size_t k = 0; k < in; ++k) {
        const double* wk = w.data() + k * out;
        double s = 0.0;
        for (std::size_t j = 0; j < out; ++j) s += wk[j] * dr[j];
        xr[k] = s;
      }
    }
    return dx;
  }

  void params(const std::string& group, const std::string& name, std::vector<ParamRef>& out_) {
    out_.push_back({group, name + ".w", w, gw});
    out_.push_back({group, name + ".b", b, gb});
  }
};

struct PRelu {
  std::vector<double> alpha, galpha;

  PRelu() = default;
  explicit PRelu(std::size_t width) : alpha(width, 0.25), galpha(width, 0.0) {}

  Matrix forward(const Matrix& x) const {
    Matrix y = x;
    for (std::size_t r = 0; r < y.rows; ++r) {
      double* yr = y.row(r);
      for (std::size_t j = 0; j < y.cols; ++j)
        if (!(yr[j] > 0.0)) yr[j] *= alpha[j];
    }
    return y;
  }

  Matrix backward(const Matrix& x, const Matrix& dy) {
    Matrix dx = dy;
    for (std::size_t r = 0; r < x.rows; ++r) {
      const double* xr = x.row(r);
      double* dr = dx.row(r);
      for (std::size_t j = 0; j < x.cols; ++j)
        if (!(xr[j] > 0.0)) {
          galpha[j] += dr[j] * xr[j];
          dr[j] *= alpha[j];
        }
    }
    return dx;
  }

  void params(const std::string& name, std::vector<ParamRef>& out) { out.push_back({"prelu", name, alpha, galpha}); }
};

/// Dense -> PReLU -> Dense -> PReLU.
struct Mlp {
  Dense l1, l2;
  PRelu a1, a2;

  struct Cache {
    Matrix x, h1, h2;
  };

  Mlp() = default;
  Mlp(std::size_t in, std::size_t hidden, std::size_t out) : l1(in, hidden), l2(hidden, out), a1(hidden), a2(out) {}

  void init(CounterRng& rng) {
    l1.init(rng);
    l2.init(rng);
  }

  Matrix forward(const Matrix& x, Cache* cache) const {
    Matrix h1 = l1.forward(x);
    Matrix h1a = a1.forward(h1);
    Matrix h2 = l2.forward(h1a);
    Matrix y = a2.forward(h2);
    if (cache) *cache = {x, std::move(h1), std::move(h2)};
    return y;
  }

  Matrix backward(const Cache& c, const Matrix& dy, bool want_dx = true) {
    const Matrix dh2 = a2.backward(c.h2, dy);
    const Matrix dh1a = l2.backward(a1.forward(c.h1), dh2);
    const Matrix dh1 = a1.backward(c.h1, dh1a);
    return l1.backward(c.x, dh1, want_dx);
  }

  void params(const std::string& group, const std::string& name, std::vector<ParamRef>& out) {
    l1.params(group, name + ".dense1", out);
    a1.params(name + ".prelu1", out);
    l2.params(group, name + ".dense2", out);
    a2.params(name + ".prelu2", out);
  }
};

inline double sigmoid(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

struct XenetLayer {
  std::size_t node_in = 0, edge_in = 0, stack = 0;
  Mlp phi_f, phi_n, phi_q;
  Dense d_out, d_in;

  struct Cache {
    Mlp::Cache f, n, q;
    Matrix stack_rows;        // f_xy, E x stack
    std::vector<double> s_out, s_in;
  };

  XenetLayer() = default;
  XenetLayer(std::size_t node_in_, std::size_t edge_in_, std::size_t stack_, std::size_t hidden,
             std::size_t node_out, std::size_t edge_out)
      : node_in(node_in_),
        edge_in(edge_in_),
        stack(stack_),
        phi_f(2 * node_in_ + 2 * edge_in_, hidden, stack_),
        phi_n(node_in_ + 2 * stack_, hidden, node_out),
        phi_q(stack_, hidden, edge_out),
        d_out(stack_, 1),
        d_in(stack_, 1) {}

  void init(CounterRng& rng) {
    phi_f.init(rng);
    phi_n.init(rng);
    phi_q.init(rng);
    d_out.init(rng);
    d_in.init(rng);
  }

  void forward(const GraphFeatures& topo, const Matrix& p, const Matrix& q, Matrix& p_out, Matrix& q_out,
               Cache* cache) const {
    const std::size_t N = p.rows, E = q.rows;
    if (p.cols != node_in || q.cols != edge_in || topo.src.size() != E)
      throw std::invalid_argument("xenet layer: feature shapes do not match the layer");
    Matrix z(E, 2 * node_in + 2 * edge_in);
    for (std::size_t e = 0; e < E; ++e) {
      double* zr = z.row(e);
      const double* ps = p.row(topo.src[e]);
      const double* pd = p.row(topo.dst[e]);
      const double* qe = q.row(e);
      const double* qr = q.row(e ^ 1);
      std::copy(ps, ps + node_in, zr);
      std::copy(pd, pd + node_in, zr + node_in);
      std::copy(qe, qe + edge_in, zr + 2 * node_in);
      std::copy(qr, qr + edge_in, zr + 2 * node_in + edge_in);
    }
    Mlp::Cache fc;
    Matrix f = phi_f.forward(z, cache ? &fc : nullptr);
    const Matrix u_out = d_out.forward(f), u_in = d_in.forward(f);

    Matrix node_cat(N, node_in + 2 * stack);
    for (std::size_t n = 0; n < N; ++n) std::copy(p.row(n), p.row(n) + node_in, node_cat.row(n));
    std::vector<double> s_out(E), s_in(E);
    for (std::size_t e = 0; e < E; ++e) {
      s_out[e] = sigmoid(u_out(e, 0));
      s_in[e] = sigmoid(u_in(e, 0));
      double* out_slot = node_cat.row(topo.src[e]) + node_in;
      double* in_slot = node_cat.row(topo.dst[e]) + node_in + stack;
      const double* fe = f.row(e);
      for (std::size_t j = 0; j < stack; ++j) {
        out_slot[j] += s_out[e] * fe[j];
        in_slot[j] += s_in[e] * fe[j];
      }
    }
    Mlp::Cache nc, qc;
    p_out = phi_n.forward(node_cat, cache ? &nc : nullptr);
    q_out = phi_q.forward(f, cache ? &qc : nullptr);
    if (cache) *cache = {std::move(fc), std::move(nc), std::move(qc), std::move(f), std::move(s_out), std::move(s_in)};
  }

  /// Accumulates gradients; returns dL/dp and dL/dq of the layer inputs when requested.
  void backward(const GraphFeatures& topo, const Cache& c, const Matrix& dp_out, const Matrix& dq_out, Matrix* dp,
                Matrix* dq) {
    const std::size_t E = c.stack_rows.rows;
    const Matrix dcat = phi_n.backward(c.n, dp_out);
    Matrix df = phi_q.backward(c.q, dq_out);
    Matrix du_out(E, 1), du_in(E, 1);
    for (std::size_t e = 0; e < E; ++e) {
      const double* g_out = dcat.row(topo.src[e]) + node_in;
      const double* g_in = dcat.row(topo.dst[e]) + node_in + stack;
      const double* fe = c.stack_rows.row(e);
      double* dfe = df.row(e);
      double ds_out = 0.0, ds_in = 0.0;
      for (std::size_t j = 0; j < stack; ++j) {
        dfe[j] += c.s_out[e] * g_out[j] + c.s_in[e] * g_in[j];
        ds_out += g_out[j] * fe[j];
        ds_in += g_in[j] * fe[j];
      }
      du_out(e, 0) = ds_out * c.s_out[e] * (1.0 - c.s_out[e]);
      du_in(e, 0) = ds_in * c.s_in[e] * (1.0 - c.s_in[e]);
    }
    const Matrix a = d_out.backward(c.stack_rows, du_out);
    const Matrix b = d_in.backward(c.stack_rows, du_in);
    for (std::size_t i = 0; i < df.data.size(); ++i) df.data[i] += a.data[i] + b.data[i];
    const bool want = dp || dq;
    const Matrix dz = phi_f.backward(c.f, df, want);
    if (!want) return;
    const std::size_t N = dcat.rows;
    Matrix gp(N, node_in), gq(E, edge_in);
    for (std::size_t n = 0; n < N; ++n) std::copy(dcat.row(n), dcat.row(n) + node_in, gp.row(n));
    for (std::size_t e = 0; e < E; ++e) {
      const double* dzr = dz.row(e);
      double* ps = gp.row(topo.src[e]);
      double* pd = gp.row(topo.dst[e]);
      for (std::size_t j = 0; j < node_in; ++j) {
        ps[j] += dzr[j];
        pd[j] += dzr[node_in + j];
      }
      double* qe = gq.row(e);
      double* qr = gq.row(e ^ 1);
      for (std::size_t j = 0; j < edge_in; ++j) {
        qe[j] += dzr[2 * node_in + j];
        qr[j] += dzr[2 * node_in + edge_in + j];
      }
    }
    if (dp) *dp = std::move(gp);
    if (dq) *dq = std::move(gq);
  }

  void params(const std::string& prefix, std::vector<ParamRef>& out) {
    phi_f.params("phi_f", prefix + ".phi_f", out);
    phi_n.params("phi_n", prefix + ".phi_n", out);
    phi_q.params("phi_q", prefix + ".phi_q", out);
    d_out.params("d_out", prefix + ".d_out", out);
    d_in.params("d_in", prefix + ".d_in", out);
  }
};

// ---------------------------------------------------------------------------
// Model

struct ModelConfig {
  std::size_t layers = 3;
  std::size_t stack = 32;
  std::size_t hidden = 64;
  std::size_t node_width = 32;
  std::size_t edge_width = 32;
  std::size_t readout_hidden = 32;
};

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  std::size_t patience = 20;
};

/// (P_OFF, P_ON) for one target branch.
using EdgeProb = std::array<double, 2>;

class XenetModel {
 public:
  XenetModel() = default;

  /// `targets` are the branch ids the readout predicts, in output order.
  XenetModel(const ModelConfig& config, std::vector<int> targets, std::uint64_t seed)
      : config_(config), targets_(std::move(targets)) {
    if (config.layers == 0 || config.stack == 0 || config.hidden == 0 || config.node_width == 0 ||
        config.edge_width == 0 || config.readout_hidden == 0)
      throw std::invalid_argument("model: every width and the layer count must be positive");
    std::size_t fn = kNodeFeatures, fe = kEdgeFeatures;
    for (std::size_t l = 0; l < config.layers; ++l) {
      layers_.emplace_back(fn, fe, config.stack, config.hidden, config.node_width, config.edge_width);
      fn = config.node_width;
      fe = config.edge_width;
    }
    read1_ = Dense(2 * config.edge_width, config.readout_hidden);
    read_act_ = PRelu(config.readout_hidden);
    read2_ = Dense(config.readout_hidden, 2);
    CounterRng rng(derive_seed(seed, 0x5EED));
    for (auto& layer : layers_) layer.init(rng);
    read1_.init(rng);
    read2_.init(rng);
  }

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<int>& targets() const noexcept { return targets_; }
  Normalization& normalization() noexcept { return norm_; }
  const Normalization& normalization() const noexcept { return norm_; }

  // Free-form metadata carried in the model file.
  std::string variant = "fgnn";
  std::string fingerprint;
  std::map<int, int> fixed_status;  // non-critical lines for a reduced model
  TrainConfig train_config;

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) layers_[l].params("layer" + std::to_string(l), out);
    read1_.params("readout", "readout.dense1", out);
    read_act_.params("readout.prelu", out);
    read2_.params("readout", "readout.dense2", out);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : parameters()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
  }

  /// Positions of the target branches in `net`.
  std::vector<std::size_t> resolve_targets(const Network& net) const {
    std::vector<std::size_t> idx;
    for (int id : targets_) {
      const std::size_t k = net.find_branch(id);
      if (k == kNoIndex) throw DataError("model target branch " + std::to_string(id) + " is not in the case");
      idx.push_back(k);
    }
    return idx;
  }

  /// Probabilities for already-normalized features.
  std::vector<EdgeProb> forward(const GraphFeatures& feats, const std::vector<std::size_t>& target_index) const {
    return run(feats, target_index, nullptr);
  }

  /// Builds and normalizes features, then predicts every target branch.
  std::vector<EdgeProb> predict(const Network& net, const LoadVector& loads) const {
    const auto feats = build_features(net, loads, &norm_);
    return forward(feats, resolve_targets(net));
  }

  /// Forward pass, MSE against one-hot labels (1 = ON), and backward pass
  /// adding `scale` * dLoss/dparam into the gradient accumulators.
  double accumulate_gradient(const GraphFeatures& feats, const std::vector<std::size_t>& target_index,
                             const std::vector<int>& labels, double scale, std::vector<EdgeProb>* probs = nullptr) {
    if (labels.size() != target_index.size()) throw std::invalid_argument("labels and targets differ in length");
    Trace trace;
    const auto p = run(feats, target_index, &trace);
    const std::size_t T = target_index.size();
    const double count = 2.0 * static_cast<double>(T);
    double loss = 0.0;
    Matrix dlogits(T, 2);
    for (std::size_t t = 0; t < T; ++t) {
      const double y[2] = {labels[t] ? 0.0 : 1.0, labels[t] ? 1.0 : 0.0};
      double dp[2];
      for (int c = 0; c < 2; ++c) {
        const double diff = p[t][c] - y[c];
        loss += diff * diff;
        dp[c] = scale * 2.0 * diff / count;
      }
      const double dot = p[t][0] * dp[0] + p[t][1] * dp[1];
      for (int c = 0; c < 2; ++c) dlogits(t, c) = p[t][c] * (dp[c] - dot);
    }
    if (probs) *probs = p;
    backward(feats, trace, target_index, dlogits);
    return T == 0 ? 0.0 : loss / count;
  }

 private:
  struct Trace {
    std::vector<XenetLayer::Cache> layers;
    Matrix read_in, h1;
  };

  std::vector<EdgeProb> run(const GraphFeatures& feats, const std::vector<std::size_t>& target_index,
                            Trace* trace) const {
    Matrix p = feats.node, q = feats.edge;
    if (trace) trace->layers.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix np, nq;
      layers_[l].forward(feats, p, q, np, nq, trace ? &trace->layers[l] : nullptr);
      p = std::move(np);
      q = std::move(nq);
    }
    const std::size_t W = config_.edge_width;
    Matrix read_in(target_index.size(), 2 * W);
    for (std::size_t t = 0; t < target_index.size(); ++t) {
      const std::size_t k = target_index[t];
      if (2 * k + 1 >= q.rows) throw std::invalid_argument("model: target branch outside the graph");
      std::copy(q.row(2 * k), q.row(2 * k) + W, read_in.row(t));
      std::copy(q.row(2 * k + 1), q.row(2 * k + 1) + W, read_in.row(t) + W);
    }
    Matrix h1 = read1_.forward(read_in);
    const Matrix logits = read2_.forward(read_act_.forward(h1));
    std::vector<EdgeProb> out(target_index.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
      const double m = std::max(logits(t, 0), logits(t, 1));
      const double e0 = std::exp(logits(t, 0) - m), e1 = std::exp(logits(t, 1) - m);
      out[t] = {e0 / (e0 + e1), e1 / (e0 + e1)};
    }
    if (trace) {
      trace->read_in = std::move(read_in);
      trace->h1 = std::move(h1);
    }
    return out;
  }

  void backward(const GraphFeatures& feats, const Trace& trace, const std::vector<std::size_t>& target_index,
                const Matrix& dlogits) {
    const Matrix dh1a = read2_.backward(read_act_.forward(trace.h1), dlogits);
    const Matrix dh1 = read_act_.backward(trace.h1, dh1a);
    const Matrix dread = read1_.backward(trace.read_in, dh1);
    const std::size_t W = config_.edge_width;
    const std::size_t N = feats.node.rows, E = feats.edge.rows;
    Matrix dq(E, W), dp(N, config_.node_width);
    for (std::size_t t = 0; t < target_index.size(); ++t) {
      const std::size_t k = target_index[t];
      for (std::size_t j = 0; j < W; ++j) {
        dq(2 * k, j) += dread(t, j);
        dq(2 * k + 1, j) += dread(t, W + j);
      }
    }
    for (std::size_t l = layers_.size(); l-- > 0;) {
      Matrix np, nq;
      const bool first = l == 0;
      layers_[l].backward(feats, trace.layers[l], dp, dq, first ? nullptr : &np, first ? nullptr : &nq);
      if (!first) {
        dp = std::move(np);
        dq = std::move(nq);
      }
    }
  }

  ModelConfig config_;
  std::vector<int> targets_;
  Normalization norm_;
  std::vector<XenetLayer> layers_;
  Dense read1_, read2_;
  PRelu read_act_;
};

// ---------------------------------------------------------------------------
// Metrics

/// Mean over branches and samples of the squared error between (P_OFF, P_ON)
/// and the one-hot label.
inline double mse_loss(const std::vector<std::vector<EdgeProb>>& probs, const std::vector<std::vector<int>>& labels) {
  if (probs.size() != labels.size()) throw std::invalid_argument("mse_loss: batch sizes differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (probs[s].size() != labels[s].size()) throw std::invalid_argument("mse_loss: branch counts differ");
    for (std::size_t t = 0; t < probs[s].size(); ++t) {
      const double on = labels[s][t] ? 1.0 : 0.0;
      sum += (probs[s][t][0] - (1.0 - on)) * (probs[s][t][0] - (1.0 - on)) + (probs[s][t][1] - on) * (probs[s][t][1] - on);
      count += 2;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

/// Fraction of branches whose argmax matches the label; exact ties count as wrong.
inline double edge_accuracy(const std::vector<std::vector<EdgeProb>>& probs,
                            const std::vector<std::vector<int>>& labels) {
  if (probs.size() != labels.size()) throw std::invalid_argument("edge_accuracy: batch sizes differ");
  std::size_t hits = 0, count = 0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (probs[s].size() != labels[s].size()) throw std::invalid_argument("edge_accuracy: branch counts differ");
    for (std::size_t t = 0; t < probs[s].size(); ++t) {
      const auto& p = probs[s][t];
      if (p[0] != p[1] && (p[1] > p[0]) == (labels[s][t] != 0)) ++hits;
      ++count;
    }
  }
  return count == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Training

struct EpochStats {
  std::size_t epoch;
  double train_loss, val_loss, train_acc, val_acc;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  std::size_t best_epoch = 0;
  double best_val_loss = kInfinity;
};

struct TrainingSet {
  std::vector<GraphFeatures> features;  // normalized
  std::vector<std::vector<int>> labels;  // per sample, per target
};

/// Raw features and target labels for the given samples.
inline TrainingSet make_training_set(const Network& net, const Dataset& ds, const std::vector<std::size_t>& rows,
                                     const std::vector<std::size_t>& target_index, const Normalization* norm) {
  TrainingSet set;
  for (std::size_t i : rows) {
    set.features.push_back(build_features(net, ds.samples[i].loads, norm));
    std::vector<int> y;
    for (std::size_t k : target_index) y.push_back(ds.samples[i].label[k]);
    set.labels.push_back(std::move(y));
  }
  return set;
}

namespace detail {

inline void evaluate(const XenetModel& model, const TrainingSet& set, const std::vector<std::size_t>& targets,
                     double& loss, double& acc) {
  std::vector<std::vector<EdgeProb>> probs;
  for (const auto& f : set.features) probs.push_back(model.forward(f, targets));
  loss = mse_loss(probs, set.labels);
  acc = edge_accuracy(probs, set.labels);
}

}  // namespace detail

/// Adam on the MSE loss with seeded per-epoch shuffling. Normalization
/// statistics are fitted on the training rows and stored in the model; the
/// parameters with the lowest validation loss (training loss when the
/// validation split is empty) are kept.
inline TrainResult train(XenetModel& model, const Network& net, const Dataset& ds,
                         const std::vector<std::size_t>& train_rows, const std::vector<std::size_t>& val_rows,
                         const TrainConfig& cfg, const std::function<void(const EpochStats&)>& on_epoch = {}) {
  if (train_rows.empty()) throw DataError("train: the training split is empty");
  if (cfg.epochs == 0 || cfg.batch == 0 || !(cfg.learning_rate > 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) || !(cfg.adam_eps > 0.0))
    throw std::invalid_argument("train: hyperparameters must be positive");
  model.train_config = cfg;
  const auto targets = model.resolve_targets(net);

  std::vector<GraphFeatures> raw;
  for (std::size_t i : train_rows) raw.push_back(build_features(net, ds.samples[i].loads));
  model.normalization() = fit_normalization(raw);
  const auto train_set = make_training_set(net, ds, train_rows, targets, &model.normalization());
  const auto val_set = make_training_set(net, ds, val_rows, targets, &model.normalization());

  auto params = model.parameters();
  std::vector<std::vector<double>> m(params.size()), v(params.size()), best(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i].assign(params[i].value.size(), 0.0);
    v[i].assign(params[i].value.size(), 0.0);
  }
  auto snapshot = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) best[i].assign(params[i].value.begin(), params[i].value.end());
  };

  TrainResult result;
  std::size_t step = 0, since_best = 0;
  const std::size_t n = train_set.features.size();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    CounterRng rng(derive_seed(cfg.seed, epoch));
    shuffle(order, rng);

    double loss_sum = 0.0;
    std::size_t hits = 0, seen = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t end = std::min(n, start + cfg.batch);
      model.zero_grad();
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        std::vector<EdgeProb> probs;
        const double loss =
            model.accumulate_gradient(train_set.features[order[b]], targets, train_set.labels[order[b]], scale, &probs);
        if (!std::isfinite(loss))
          throw NumericalError("training diverged: loss is " + format_double(loss) + " at epoch " +
                               std::to_string(epoch) + ", sample " + std::to_string(train_rows[order[b]]));
        loss_sum += loss;
        for (std::size_t t = 0; t < probs.size(); ++t) {
          const auto& p = probs[t];
          if (p[0] != p[1] && (p[1] > p[0]) == (train_set.labels[order[b]][t] != 0)) ++hits;
          ++seen;
        }
      }
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto& val = params[i].value;
        const auto& g = params[i].grad;
        for (std::size_t j = 0; j < val.size(); ++j) {
          m[i][j] = cfg.beta1 * m[i][j] + (1.0 - cfg.beta1) * g[j];
          v[i][j] = cfg.beta2 * v[i][j] + (1.0 - cfg.beta2) * g[j] * g[j];
          val[j] -= cfg.learning_rate * (m[i][j] / c1) / (std::sqrt(v[i][j] / c2) + cfg.adam_eps);
        }
      }
    }

    EpochStats stats{epoch, loss_sum / static_cast<double>(n), 0.0,
                     seen ? static_cast<double>(hits) / static_cast<double>(seen) : 0.0, 0.0};
    if (!val_set.features.empty()) {
      detail::evaluate(model, val_set, targets, stats.val_loss, stats.val_acc);
    } else {
      stats.val_loss = stats.train_loss;
      stats.val_acc = stats.train_acc;
    }
    if (!std::isfinite(stats.val_loss))
      throw NumericalError("training diverged: validation loss is not finite at epoch " + std::to_string(epoch));
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (stats.val_loss < result.best_val_loss) {
      result.best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      since_best = 0;
      snapshot();
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    std::copy(best[i].begin(), best[i].end(), params[i].value.begin());
  model.zero_grad();
  return result;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradCheckOptions {
  double epsilon = 1e-5;
  std::uint64_t seed = 1;
  std::size_t min_params = 200;
  /// Test hook applied to the analytic gradients before comparison.
  std::function<void(std::vector<ParamRef>&)> corrupt;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::map<std::string, std::size_t> per_group;      // entries checked per group
  std::map<std::string, double> group_error;         // max error per group
  std::map<std::string, double> group_max_grad;      // max |analytic| per group; 0 means the check was vacuous
};

/// Compares backpropagated gradients of the single-sample MSE with central
/// differences on a random subset of parameters covering every group.
/// Relative error is |a - n| / max(|a|, |n|, 1e-7).
inline GradCheckReport grad_check(XenetModel& model, const GraphFeatures& feats,
                                  const std::vector<std::size_t>& targets, const std::vector<int>& labels,
                                  const GradCheckOptions& opt = {}) {
  if (!(opt.epsilon >= 1e-7 && opt.epsilon <= 1e-3)) throw std::invalid_argument("grad_check: epsilon outside [1e-7, 1e-3]");
  model.zero_grad();
  model.accumulate_gradient(feats, targets, labels, 1.0);
  auto params = model.parameters();
  if (opt.corrupt) opt.corrupt(params);

  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> by_group;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].value.size(); ++j) by_group[params[i].group].push_back({i, j});
  CounterRng rng(opt.seed);
  const std::size_t quota = (opt.min_params + by_group.size() - 1) / by_group.size();
  std::vector<std::pair<std::size_t, std::size_t>> picks, spare;
  for (auto& [group, entries] : by_group) {
    shuffle(entries, rng);
    const auto cut = entries.begin() + static_cast<std::ptrdiff_t>(std::min(quota, entries.size()));
    picks.insert(picks.end(), entries.begin(), cut);
    spare.insert(spare.end(), cut, entries.end());
  }
  // Small groups leave the quota short; top up from the rest.
  shuffle(spare, rng);
  for (std::size_t s = 0; s < spare.size() && picks.size() < opt.min_params; ++s) picks.push_back(spare[s]);

  auto loss_at = [&]() {
    std::vector<std::vector<EdgeProb>> probs{model.forward(feats, targets)};
    return mse_loss(probs, {labels});
  };
  GradCheckReport rep;
  for (const auto& [i, j] : picks) {
    double& x = params[i].value[j];
    const double saved = x;
    x = saved + opt.epsilon;
    const double up = loss_at();
    x = saved - opt.epsilon;
    const double down = loss_at();
    x = saved;
    const double numeric = (up - down) / (2.0 * opt.epsilon);
    const double analytic = params[i].grad[j];
    const double err =
        std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    rep.max_rel_error = std::max(rep.max_rel_error, err);
    rep.group_error[params[i].group] = std::max(rep.group_error[params[i].group], err);
    rep.group_max_grad[params[i].group] = std::max(rep.group_max_grad[params[i].group], std::abs(analytic));
    ++rep.per_group[params[i].group];
    ++rep.checked;
  }
  model.zero_grad();
  return rep;
}

// ---------------------------------------------------------------------------
// Model file

inline constexpr std::string_view kModelMagic = "NROPF-XENET";

inline nlohmann::json model_to_json(XenetModel& model) {
  nlohmann::json doc;
  doc["magic"] = kModelMagic;
  doc["version"] = 1;
  doc["variant"] = model.variant;
  doc["fingerprint"] = model.fingerprint;
  const auto& c = model.config();
  doc["architecture"] = {{"layers", c.layers},
                         {"stack", c.stack},
                         {"hidden", c.hidden},
                         {"node_width", c.node_width},
                         {"edge_width", c.edge_width},
                         {"readout_hidden", c.readout_hidden},
                         {"node_features", kNodeFeatures},
                         {"edge_features", kEdgeFeatures}};
  doc["targets"] = model.targets();
  nlohmann::json fixed = nlohmann::json::array();
  for (const auto& [id, status] : model.fixed_status) fixed.push_back({id, status});
  doc["fixed_status"] = fixed;
  const auto& n = model.normalization();
  doc["normalization"] = {{"node_mean", n.node_mean},
                          {"node_std", n.node_std},
                          {"edge_mean", n.edge_mean},
                          {"edge_std", n.edge_std}};
  const auto& t = model.train_config;
  doc["train_config"] = {{"epochs", t.epochs},   {"batch", t.batch}, {"learning_rate", t.learning_rate},
                         {"beta1", t.beta1},     {"beta2", t.beta2}, {"adam_eps", t.adam_eps},
                         {"seed", t.seed},       {"patience", t.patience}};
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.parameters())
    tensors.push_back({{"name", p.name}, {"group", p.group}, {"values", std::vector<double>(p.value.begin(), p.value.end())}});
  doc["tensors"] = tensors;
  return doc;
}

inline std::string serialize_model(XenetModel& model) { return model_to_json(model).dump(1) + "\n"; }

inline XenetModel parse_model(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("model syntax error", line, col);
  }
  try {
    if (doc.at("magic") != kModelMagic) throw ParseError("not a model file (magic tag missing)");
    if (doc.at("version") != 1) throw ParseError("unsupported model version");
    const auto& a = doc.at("architecture");
    if (a.at("node_features") != kNodeFeatures || a.at("edge_features") != kEdgeFeatures)
      throw ParseError("model feature layout differs from this build");
    ModelConfig c{a.at("layers"), a.at("stack"), a.at("hidden"), a.at("node_width"), a.at("edge_width"),
                  a.at("readout_hidden")};
    XenetModel model(c, doc.at("targets").get<std::vector<int>>(), 0);
    model.variant = doc.at("variant").get<std::string>();
    model.fingerprint = doc.at("fingerprint").get<std::string>();
    for (const auto& e : doc.at("fixed_status")) model.fixed_status[e.at(0).get<int>()] = e.at(1).get<int>();
    const auto& n = doc.at("normalization");
    auto& norm = model.normalization();
    norm.node_mean = n.at("node_mean").get<std::vector<double>>();
    norm.node_std = n.at("node_std").get<std::vector<double>>();
    norm.edge_mean = n.at("edge_mean").get<std::vector<double>>();
    norm.edge_std = n.at("edge_std").get<std::vector<double>>();
    if (!norm.empty() && (norm.node_mean.size() != kNodeFeatures || norm.node_std.size() != kNodeFeatures ||
                          norm.edge_mean.size() != kEdgeFeatures || norm.edge_std.size() != kEdgeFeatures))
      throw ParseError("normalization statistics have the wrong width");
    const auto& t = doc.at("train_config");
    model.train_config = {t.at("epochs"), t.at("batch"), t.at("learning_rate"), t.at("beta1"),
                          t.at("beta2"),  t.at("adam_eps"), t.at("seed"),     t.at("patience")};
    auto params = model.parameters();
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != params.size()) throw ParseError("model tensor count does not match the architecture");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (tensors[i].at("name") != params[i].name)
        throw ParseError("model tensor " + std::to_string(i) + " is '" + tensors[i].at("name").get<std::string>() +
                         "', expected '" + params[i].name + "'");
      const auto values = tensors[i].at("values").get<std::vector<double>>();
      if (values.size() != params[i].value.size())
        throw ParseError("model tensor '" + params[i].name + "' has the wrong size");
      std::copy(values.begin(), values.end(), params[i].value.begin());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

}  // namespace nropf
