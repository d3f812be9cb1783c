#pragma once

// Bounded-variable linear programming.
//
//   minimize    c'x
//   subject to  a_i'x  (<=, =, >=)  b_i      for every row i
//               l <= x <= u                  (entries may be infinite)
//
// solve_lp runs a two-phase revised primal simplex on the bounded form. Each
// row gets a logical (slack) column whose bounds encode the row sense; rows
// that the starting point cannot satisfy get an artificial column, and phase
// one drives the artificials to zero. The basis inverse is kept explicitly
// (instances are desk scale) and rebuilt from an LU factorization every few
// dozen pivots.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nropf/common.hpp"

namespace nropf {

enum class Sense { LessEqual, Equal, GreaterEqual };

/// Grid quantity a column stands for; `index` is the bus/generator/branch position.
enum class VarKind { Other, Dispatch, Reserve, Angle, Flow, Switch };

struct VarLabel {
  VarKind kind = VarKind::Other;
  std::size_t index = 0;
  friend bool operator==(const VarLabel&, const VarLabel&) = default;
};

struct ColumnEntry {
  std::size_t row;
  double value;
};

struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<VarLabel> labels;
  std::vector<std::string> names;
  std::vector<std::vector<ColumnEntry>> columns;  // column-major sparse matrix
  std::vector<Sense> senses;
  std::vector<double> rhs;
  std::vector<std::string> row_names;
  /// Optional starting hint: nonbasic columns flagged here start at their upper bound.
  std::vector<bool> start_at_upper;

  std::size_t variable_count() const noexcept { return objective.size(); }
  std::size_t row_count() const noexcept { return rhs.size(); }

  std::size_t add_variable(double cost, double lo, double up, VarLabel label = {}, std::string name = {}) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(up);
    labels.push_back(label);
    if (name.empty()) name = "x" + std::to_string(objective.size() - 1);
    names.push_back(std::move(name));
    columns.emplace_back();
    start_at_upper.push_back(false);
    return objective.size() - 1;
  }

  std::size_t add_row(const std::vector<std::pair<std::size_t, double>>& terms, Sense sense, double b,
                      std::string name = {}) {
    const std::size_t row = rhs.size();
    for (const auto& [col, value] : terms) {
      if (value == 0.0) continue;
      auto& column = columns.at(col);
      if (!column.empty() && column.back().row == row)
        column.back().value += value;
      else
        column.push_back({row, value});
    }
    senses.push_back(sense);
    rhs.push_back(b);
    if (name.empty()) name = "r" + std::to_string(row);
    row_names.push_back(std::move(name));
    return row;
  }

  /// Column index of the first variable carrying `label`, or kNoColumn.
  static constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);
  std::size_t find_column(VarLabel label) const {
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] == label) return j;
    return kNoColumn;
  }

  std::vector<double> row_activity(std::span<const double> x) const {
    std::vector<double> act(row_count(), 0.0);
    for (std::size_t j = 0; j < columns.size(); ++j)
      for (const auto& e : columns[j]) act[e.row] += e.value * x[j];
    return act;
  }

  /// Largest absolute violation of any row or bound at `x`.
  double max_violation(std::span<const double> x) const {
    double worst = 0.0;
    const auto act = row_activity(x);
    for (std::size_t i = 0; i < row_count(); ++i) {
      double v = 0.0;
      switch (senses[i]) {
        case Sense::LessEqual: v = act[i] - rhs[i]; break;
        case Sense::GreaterEqual: v = rhs[i] - act[i]; break;
        case Sense::Equal: v = std::abs(act[i] - rhs[i]); break;
      }
      worst = std::max(worst, v);
    }
    for (std::size_t j = 0; j < variable_count(); ++j) {
      worst = std::max(worst, lower[j] - x[j]);
      worst = std::max(worst, x[j] - upper[j]);
    }
    return worst;
  }

  double objective_value(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < objective.size(); ++j) s += objective[j] * x[j];
    return s;
  }

  /// Empty when dimensions agree, bounds are ordered and entries finite.
  std::string check() const {
    const std::size_t n = variable_count();
    if (lower.size() != n || upper.size() != n || labels.size() != n || columns.size() != n)
      return "column arrays have inconsistent sizes";
    if (senses.size() != row_count()) return "row arrays have inconsistent sizes";
    for (std::size_t j = 0; j < n; ++j) {
      if (!(lower[j] <= upper[j])) return "lower > upper for column " + names[j];
      if (lower[j] == kInfinity || upper[j] == -kInfinity) return "empty bound range for column " + names[j];
      if (!std::isfinite(objective[j])) return "non-finite cost for column " + names[j];
      for (const auto& e : columns[j]) {
        if (e.row >= row_count()) return "row index out of range in column " + names[j];
        if (!std::isfinite(e.value)) return "non-finite coefficient in column " + names[j];
      }
    }
    for (double b : rhs)
      if (!std::isfinite(b)) return "non-finite right-hand side";
    return {};
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

struct LpOutcome {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> primal;
  std::size_t iterations = 0;
};

namespace detail {

class BoundedSimplex {
 public:
  BoundedSimplex(const LinearProgram& lp, std::span<const double> lower, std::span<const double> upper,
                 double feas_tol, double opt_tol)
      : lp_(lp),
        m_(lp.row_count()),
        n_struct_(lp.variable_count()),
        feas_tol_(feas_tol),
        opt_tol_(opt_tol),
        harris_tol_(std::min(1e-10, 0.1 * feas_tol)) {
    const std::size_t n = n_struct_;
    lo_.assign(lower.begin(), lower.end());
    up_.assign(upper.begin(), upper.end());
    cost_ = lp.objective;
    state_.assign(n, State::Lower);
    x_.assign(n, 0.0);

    for (std::size_t j = 0; j < n; ++j) {
      const bool lo_fin = std::isfinite(lo_[j]), up_fin = std::isfinite(up_[j]);
      const bool hint = j < lp.start_at_upper.size() && lp.start_at_upper[j];
      if (up_fin && (hint || !lo_fin)) {
        state_[j] = State::Upper;
        x_[j] = up_[j];
      } else if (lo_fin) {
        state_[j] = State::Lower;
        x_[j] = lo_[j];
      } else {
        state_[j] = State::Zero;
        x_[j] = 0.0;
      }
    }

    std::vector<double> residual = lp.rhs;
    for (std::size_t j = 0; j < n; ++j)
      if (x_[j] != 0.0)
        for (const auto& e : lp.columns[j]) residual[e.row] -= e.value * x_[j];

    // Logical columns: one per row, unit coefficient; bounds encode the sense.
    basis_.assign(m_, 0);
    Binv_.setZero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      double sl = 0.0, su = 0.0;
      switch (lp.senses[i]) {
        case Sense::LessEqual: sl = 0.0; su = kInfinity; break;
        case Sense::GreaterEqual: sl = -kInfinity; su = 0.0; break;
        case Sense::Equal: sl = 0.0; su = 0.0; break;
      }
      const std::size_t slack = add_column({{i, 1.0}}, sl, su, 0.0);
      const double r = residual[i];
      if (r >= sl && r <= su) {
        make_basic(slack, i, r);
        Binv_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
      } else {
        const double s0 = r < sl ? sl : su;
        x_[slack] = s0;
        state_[slack] = s0 == sl ? State::Lower : State::Upper;
        const double sigma = r - s0 > 0.0 ? 1.0 : -1.0;
        const std::size_t art = add_column({{i, sigma}}, 0.0, kInfinity, 0.0);
        artificials_.push_back(art);
        make_basic(art, i, std::abs(r - s0));
        Binv_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = sigma;
      }
    }
    const std::size_t total = x_.size();
    max_iterations_ = 50 * (m_ + total) + 1000;
  }

  LpOutcome solve() {
    LpOutcome out;
    if (!artificials_.empty()) {
      std::vector<double> phase2_cost = cost_;
      std::fill(cost_.begin(), cost_.end(), 0.0);
      for (std::size_t a : artificials_) cost_[a] = 1.0;
      if (run() != Step::Optimal) throw NumericalError("simplex: phase one reported unbounded");
      refactor();
      double infeas = 0.0;
      for (std::size_t a : artificials_) infeas += std::max(0.0, x_[a]);
      if (infeas > feas_tol_) {
        out.status = LpStatus::Infeasible;
        out.iterations = iterations_;
        return out;
      }
      for (std::size_t a : artificials_) {
        up_[a] = 0.0;
        if (state_[a] != State::Basic) {
          x_[a] = 0.0;
          state_[a] = State::Lower;
        }
      }
      cost_ = std::move(phase2_cost);
      cost_.resize(x_.size(), 0.0);
    }

    const Step st = run();
    out.iterations = iterations_;
    if (st == Step::Unbounded) {
      out.status = LpStatus::Unbounded;
      return out;
    }
    refactor();

    double worst = 0.0;
    for (std::size_t j = 0; j < x_.size(); ++j) {
      worst = std::max(worst, lo_[j] - x_[j]);
      worst = std::max(worst, x_[j] - up_[j]);
    }
    if (worst > feas_tol_)
      throw NumericalError("simplex: final basis violates bounds by " + format_double(worst));

    out.status = LpStatus::Optimal;
    out.primal.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_struct_));
    out.objective = lp_.objective_value(out.primal);
    if (const double rows = row_violation(out.primal); rows > feas_tol_)
      throw NumericalError("simplex: solution violates rows by " + format_double(rows));
    return out;
  }

 private:
  enum class State : unsigned char { Basic, Lower, Upper, Zero };
  enum class Step { Optimal, Unbounded };

  std::size_t add_column(std::vector<ColumnEntry> col, double lo, double up, double cost) {
    extra_cols_.push_back(std::move(col));
    lo_.push_back(lo);
    up_.push_back(up);
    cost_.push_back(cost);
    x_.push_back(0.0);
    state_.push_back(State::Lower);
    return x_.size() - 1;
  }

  void make_basic(std::size_t j, std::size_t row, double value) {
    basis_[row] = j;
    state_[j] = State::Basic;
    x_[j] = value;
  }

  const std::vector<ColumnEntry>& column(std::size_t j) const {
    return j < n_struct_ ? lp_.columns[j] : extra_cols_[j - n_struct_];
  }

  double row_violation(std::span<const double> x) const {
    double worst = 0.0;
    const auto act = lp_.row_activity(x);
    for (std::size_t i = 0; i < m_; ++i) {
      const double d = act[i] - lp_.rhs[i];
      switch (lp_.senses[i]) {
        case Sense::LessEqual: worst = std::max(worst, d); break;
        case Sense::GreaterEqual: worst = std::max(worst, -d); break;
        case Sense::Equal: worst = std::max(worst, std::abs(d)); break;
      }
    }
    return worst;
  }

  void refactor() {
    const auto m = static_cast<Eigen::Index>(m_);
    if (m == 0) return;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& e : column(basis_[i]))
        B(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(i)) = e.value;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) throw NumericalError("simplex: basis matrix became singular");
    Binv_ = lu.inverse();

    Eigen::VectorXd r(m);
    for (std::size_t i = 0; i < m_; ++i) r(static_cast<Eigen::Index>(i)) = lp_.rhs[i];
    for (std::size_t j = 0; j < x_.size(); ++j) {
      if (state_[j] == State::Basic || x_[j] == 0.0) continue;
      for (const auto& e : column(j)) r(static_cast<Eigen::Index>(e.row)) -= e.value * x_[j];
    }
    const Eigen::VectorXd xb = Binv_ * r;
    for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] = xb(static_cast<Eigen::Index>(i));
    since_refactor_ = 0;
  }

  double reduced_cost(std::size_t j, const Eigen::VectorXd& y) const {
    double d = cost_[j];
    for (const auto& e : column(j)) d -= y(static_cast<Eigen::Index>(e.row)) * e.value;
    return d;
  }

  // Direction in which a nonbasic column may improve the objective, or 0.
  int improving_direction(std::size_t j, double d) const {
    if (state_[j] == State::Basic || lo_[j] == up_[j]) return 0;
    switch (state_[j]) {
      case State::Lower: return d < -opt_tol_ ? 1 : 0;
      case State::Upper: return d > opt_tol_ ? -1 : 0;
      case State::Zero: return d < -opt_tol_ ? 1 : (d > opt_tol_ ? -1 : 0);
      default: return 0;
    }
  }

  Step run() {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::VectorXd cb(m), y(m), alpha(m);
    std::size_t degenerate_run = 0;
    bool bland = false;
    bool confirmed = false;

    for (;;) {
      if (++iterations_ > max_iterations_) throw NumericalError("simplex: iteration limit reached");
      if (since_refactor_ >= kRefactorInterval) refactor();

      for (std::size_t i = 0; i < m_; ++i) cb(static_cast<Eigen::Index>(i)) = cost_[basis_[i]];
      y.noalias() = Binv_.transpose() * cb;

      // Pricing: Dantzig's largest reduced cost, or Bland's smallest index
      // while the objective is stalled on degenerate pivots.
      std::size_t entering = kNone;
      int dir = 0;
      double best = 0.0;
      for (std::size_t j = 0; j < x_.size(); ++j) {
        if (state_[j] == State::Basic) continue;
        const double d = reduced_cost(j, y);
        const int s = improving_direction(j, d);
        if (s == 0) continue;
        if (bland) {
          entering = j;
          dir = s;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          dir = s;
        }
      }

      if (entering == kNone) {
        // Confirm optimality on a fresh factorization before stopping.
        if (confirmed || since_refactor_ == 0) return Step::Optimal;
        refactor();
        confirmed = true;
        --iterations_;
        continue;
      }
      confirmed = false;

      alpha.setZero();
      for (const auto& e : column(entering)) alpha += e.value * Binv_.col(static_cast<Eigen::Index>(e.row));

      const double range = up_[entering] - lo_[entering];  // inf when either bound is infinite
      const auto [row, step] = bland ? ratio_test_textbook(alpha, dir) : ratio_test_harris(alpha, dir);

      if (row == kNone && !std::isfinite(range)) return Step::Unbounded;

      if (row == kNone || range <= step) {
        // Bound flip: the entering column reaches its opposite bound first.
        apply_step(alpha, dir, entering, range);
        state_[entering] = dir > 0 ? State::Upper : State::Lower;
        x_[entering] = dir > 0 ? up_[entering] : lo_[entering];
        degenerate_run = 0;
        bland = false;
        continue;
      }

      apply_step(alpha, dir, entering, step);
      pivot(row, entering, alpha, dir);

      if (step <= kDegenerateStep) {
        if (++degenerate_run > kBlandAfter) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
  }

  void apply_step(const Eigen::VectorXd& alpha, int dir, std::size_t entering, double step) {
    if (step == 0.0) return;
    x_[entering] += dir * step;
    for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= dir * alpha(static_cast<Eigen::Index>(i)) * step;
  }

  void pivot(std::size_t row, std::size_t entering, const Eigen::VectorXd& alpha, int dir) {
    const auto r = static_cast<Eigen::Index>(row);
    const std::size_t leaving = basis_[row];
    const double rate = -dir * alpha(r);
    // The leaving variable lands exactly on the bound it hit.
    if (rate < 0.0) {
      x_[leaving] = lo_[leaving];
      state_[leaving] = State::Lower;
    } else {
      x_[leaving] = up_[leaving];
      state_[leaving] = State::Upper;
    }
    if (lo_[leaving] == up_[leaving]) state_[leaving] = State::Lower;

    const double piv = alpha(r);
    Binv_.row(r) /= piv;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m_); ++i) {
      if (i == r || alpha(i) == 0.0) continue;
      Binv_.row(i) -= alpha(i) * Binv_.row(r);
    }
    basis_[row] = entering;
    state_[entering] = State::Basic;
    ++since_refactor_;
  }

  // Two-pass Harris ratio test: bounds are relaxed by a small tolerance when
  // computing the step limit, then the largest pivot within the limit wins.
  std::pair<std::size_t, double> ratio_test_harris(const Eigen::VectorXd& alpha, int dir) const {
    double limit = kInfinity;
    for (std::size_t i = 0; i < m_; ++i) {
      const double a = alpha(static_cast<Eigen::Index>(i));
      if (std::abs(a) <= kPivotTol) continue;
      const std::size_t j = basis_[i];
      const double rate = -dir * a;
      if (rate < 0.0 && std::isfinite(lo_[j])) limit = std::min(limit, (x_[j] - lo_[j] + harris_tol_) / -rate);
      if (rate > 0.0 && std::isfinite(up_[j])) limit = std::min(limit, (up_[j] - x_[j] + harris_tol_) / rate);
    }
    if (!std::isfinite(limit)) return {kNone, kInfinity};

    std::size_t best_row = kNone;
    double best_piv = 0.0, best_step = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double a = alpha(static_cast<Eigen::Index>(i));
      if (std::abs(a) <= kPivotTol) continue;
      const std::size_t j = basis_[i];
      const double rate = -dir * a;
      double t = kInfinity;
      if (rate < 0.0 && std::isfinite(lo_[j])) t = (x_[j] - lo_[j]) / -rate;
      if (rate > 0.0 && std::isfinite(up_[j])) t = (up_[j] - x_[j]) / rate;
      if (t <= limit && std::abs(a) > best_piv) {
        best_piv = std::abs(a);
        best_row = i;
        best_step = std::max(0.0, t);
      }
    }
    return {best_row, best_step};
  }

  // Minimum-ratio test with smallest-variable-index tie breaking (Bland).
  std::pair<std::size_t, double> ratio_test_textbook(const Eigen::VectorXd& alpha, int dir) const {
    std::size_t best_row = kNone;
    double best = kInfinity;
    for (std::size_t i = 0; i < m_; ++i) {
      const double a = alpha(static_cast<Eigen::Index>(i));
      if (std::abs(a) <= kPivotTol) continue;
      const std::size_t j = basis_[i];
      const double rate = -dir * a;
      double t = kInfinity;
      if (rate < 0.0 && std::isfinite(lo_[j])) t = std::max(0.0, (x_[j] - lo_[j]) / -rate);
      if (rate > 0.0 && std::isfinite(up_[j])) t = std::max(0.0, (up_[j] - x_[j]) / rate);
      if (!std::isfinite(t)) continue;
      const bool tie = best_row != kNone && std::abs(t - best) <= 1e-12 * (1.0 + best);
      if ((t < best && !tie) || (tie && basis_[i] < basis_[best_row])) {
        best = std::min(t, best);
        best_row = i;
      }
    }
    return {best_row, best};
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kRefactorInterval = 40;
  static constexpr std::size_t kBlandAfter = 50;
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kDegenerateStep = 1e-12;

  const LinearProgram& lp_;
  std::size_t m_;
  std::size_t n_struct_;
  double feas_tol_;
  double opt_tol_;
  double harris_tol_;

  std::vector<std::vector<ColumnEntry>> extra_cols_;
  std::vector<double> lo_, up_, cost_, x_;
  std::vector<State> state_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> artificials_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Binv_;
  std::size_t since_refactor_ = 0;
  std::size_t iterations_ = 0;
  std::size_t max_iterations_ = 0;
};

}  // namespace detail

/// Solves `lp` with its bounds replaced by `lower`/`upper` (same length as the columns).
/// Throws NumericalError when the simplex breaks down; never reports a status it
/// has not certified.
inline LpOutcome solve_lp(const LinearProgram& lp, std::span<const double> lower, std::span<const double> upper,
                          double feas_tol = 1e-9, double opt_tol = 1e-9) {
  if (!(feas_tol > 0.0 && opt_tol > 0.0)) throw std::invalid_argument("solve_lp: tolerances must be positive");
  if (lower.size() != lp.variable_count() || upper.size() != lp.variable_count())
    throw std::invalid_argument("solve_lp: bound override has the wrong length");
  for (std::size_t j = 0; j < lower.size(); ++j)
    if (lower[j] > upper[j]) return LpOutcome{LpStatus::Infeasible, 0.0, {}, 0};
  detail::BoundedSimplex simplex(lp, lower, upper, feas_tol, opt_tol);
  return simplex.solve();
}

inline LpOutcome solve_lp(const LinearProgram& lp, double feas_tol = 1e-9, double opt_tol = 1e-9) {
  if (auto msg = lp.check(); !msg.empty()) throw std::invalid_argument("solve_lp: " + msg);
  return solve_lp(lp, lp.lower, lp.upper, feas_tol, opt_tol);
}

// ---------------------------------------------------------------------------
// CPLEX LP-format dump, for cross-checking an instance with external solvers.

namespace detail {

inline std::string lp_name(const std::string& raw) {
  std::string out;
  for (char c : raw) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') ? c : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front())) || out.front() == '.') out = "v" + out;
  return out;
}

inline void lp_term(std::ostream& os, double coef, const std::string& name, bool first) {
  if (coef < 0)
    os << (first ? " -" : " - ");
  else
    os << (first ? " " : " + ");
  os << format_double(std::abs(coef)) << ' ' << name;
}

}  // namespace detail

inline void write_lp_format(std::ostream& os, const LinearProgram& lp) {
  std::vector<std::string> names;
  for (const auto& n : lp.names) names.push_back(detail::lp_name(n));
  os << "\\ nropf debug dump: " << lp.variable_count() << " columns, " << lp.row_count() << " rows\n";
  os << "Minimize\n obj:";
  bool first = true;
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    if (lp.objective[j] == 0.0) continue;
    detail::lp_term(os, lp.objective[j], names[j], first);
    first = false;
  }
  if (first) os << " 0 " << (names.empty() ? std::string("x0") : names.front());
  os << "\nSubject To\n";
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(lp.row_count());
  for (std::size_t j = 0; j < lp.variable_count(); ++j)
    for (const auto& e : lp.columns[j]) rows[e.row].push_back({j, e.value});
  for (std::size_t i = 0; i < lp.row_count(); ++i) {
    os << ' ' << detail::lp_name(lp.row_names[i]) << ':';
    first = true;
    for (const auto& [j, v] : rows[i]) {
      detail::lp_term(os, v, names[j], first);
      first = false;
    }
    if (first) os << " 0 " << (names.empty() ? std::string("x0") : names.front());
    os << (lp.senses[i] == Sense::LessEqual ? " <= " : lp.senses[i] == Sense::Equal ? " = " : " >= ")
       << format_double(lp.rhs[i]) << '\n';
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    const double lo = lp.lower[j], up = lp.upper[j];
    if (std::isinf(lo) && std::isinf(up))
      os << ' ' << names[j] << " free\n";
    else if (lo == up)
      os << ' ' << names[j] << " = " << format_double(lo) << '\n';
    else
      os << ' ' << (std::isinf(lo) ? std::string("-inf") : format_double(lo)) << " <= " << names[j] << " <= "
         << (std::isinf(up) ? std::string("+inf") : format_double(up)) << '\n';
  }
  os << "End\n";
}

}  // namespace nropf
