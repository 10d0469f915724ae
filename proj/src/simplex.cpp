#include "stablehh/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "stablehh/errors.hpp"

namespace stablehh::lp {

namespace {

using Entry = std::pair<std::uint32_t, double>;

/// Minimization problem in column form with ranged rows.
struct WorkProblem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<Entry>> columns;
  std::vector<double> col_lower, col_upper, cost;
  std::vector<double> row_lower, row_upper;
};

// ---------------------------------------------------------------------------
// Presolve: two-variable equality rows a1*x1 + a2*x2 = b are used to eliminate
// x2 = b/a2 - (a1/a2)*x1 everywhere; x2's bounds move onto x1. Single-variable
// equality rows fix their variable.

struct Elimination {
  std::uint32_t removed;
  std::uint32_t kept;
  double offset;  // removed = offset - ratio * kept
  double ratio;
};

struct Presolved {
  WorkProblem reduced;
  std::vector<std::uint32_t> kept_columns;  // reduced column -> original column
  std::vector<std::uint32_t> kept_rows;     // reduced row -> original row
  std::vector<Elimination> eliminations;    // in application order
  bool infeasible = false;
};

class Presolver {
 public:
  Presolver(const LinearProgram& lp, double tol) : tol_(tol) {
    const std::size_t n = lp.num_variables();
    const std::size_t m = lp.num_constraints();
    rows_.resize(m);
    col_rows_.resize(n);
    lower_.resize(n);
    upper_.resize(n);
    cost_.assign(n, 0.0);
    row_lower_.resize(m);
    row_upper_.resize(m);
    equality_.resize(m);
    row_alive_.assign(m, true);
    col_alive_.assign(n, true);
    for (std::size_t j = 0; j < n; ++j) {
      lower_[j] = lp.variables()[j].lower;
      upper_[j] = lp.variables()[j].upper;
    }
    double sign = lp.objective().direction == Direction::Maximize ? -1.0 : 1.0;
    for (const Term& t : lp.objective().terms) cost_[t.var.index] += sign * t.coef;
    for (std::size_t i = 0; i < m; ++i) {
      const Constraint& c = lp.constraints()[i];
      for (const Term& t : c.terms) {
        rows_[i][t.var.index] = t.coef;
        col_rows_[t.var.index].insert(static_cast<std::uint32_t>(i));
      }
      row_lower_[i] = c.sense == Sense::LessEqual ? -kInf : c.rhs;
      row_upper_[i] = c.sense == Sense::GreaterEqual ? kInf : c.rhs;
      equality_[i] = c.sense == Sense::Equal;
    }
  }

  Presolved run(bool enabled) {
    Presolved out;
    if (enabled) {
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (!row_alive_[i] || !equality_[i]) continue;
        if (rows_[i].size() == 1) {
          if (!fix_singleton(i)) {
            out.infeasible = true;
            return out;
          }
        } else if (rows_[i].size() == 2) {
          if (!eliminate_doubleton(i, out.eliminations)) {
            out.infeasible = true;
            return out;
          }
        }
      }
    }
    build(out);
    return out;
  }

 private:
  bool fix_singleton(std::size_t i) {
    auto [j, a] = *rows_[i].begin();
    double value = row_lower_[i] / a;
    if (value < lower_[j] - tol_ || value > upper_[j] + tol_) return false;
    value = std::clamp(value, lower_[j], upper_[j]);
    lower_[j] = upper_[j] = value;
    drop_row(i);
    return true;
  }

  bool eliminate_doubleton(std::size_t i, std::vector<Elimination>& log) {
    auto it = rows_[i].begin();
    std::uint32_t j1 = it->first;
    double a1 = it->second;
    ++it;
    std::uint32_t j2 = it->first;
    double a2 = it->second;
    // Remove the sparser column unless its coefficient is much smaller.
    bool swap = col_rows_[j1].size() < col_rows_[j2].size();
    if (swap && std::abs(a1) < 0.1 * std::abs(a2)) swap = false;
    if (!swap && std::abs(a2) < 0.1 * std::abs(a1)) swap = true;
    if (swap) {
      std::swap(j1, j2);
      std::swap(a1, a2);
    }
    const double b = row_lower_[i];
    const double offset = b / a2;
    const double ratio = a1 / a2;

    // Bounds of the removed column translate into bounds on the kept one.
    double lo = lower_[j1], hi = upper_[j1];
    if (ratio > 0.0) {
      if (upper_[j2] < kInf) lo = std::max(lo, (offset - upper_[j2]) / ratio);
      if (lower_[j2] > -kInf) hi = std::min(hi, (offset - lower_[j2]) / ratio);
    } else {
      if (lower_[j2] > -kInf) lo = std::max(lo, (offset - lower_[j2]) / ratio);
      if (upper_[j2] < kInf) hi = std::min(hi, (offset - upper_[j2]) / ratio);
    }
    if (lo > hi) {
      if (lo - hi > tol_ * std::max(1.0, std::abs(lo))) return false;
      hi = lo;
    }
    lower_[j1] = lo;
    upper_[j1] = hi;

    drop_row(i);
    for (std::uint32_t k : std::vector<std::uint32_t>(col_rows_[j2].begin(), col_rows_[j2].end())) {
      double ak2 = rows_[k].at(j2);
      rows_[k].erase(j2);
      double shift = ak2 * offset;
      row_lower_[k] -= shift;
      row_upper_[k] -= shift;
      double& coef = rows_[k][j1];
      coef -= ak2 * ratio;
      col_rows_[j1].insert(k);
      if (coef == 0.0) {
        rows_[k].erase(j1);
        col_rows_[j1].erase(k);
      }
    }
    col_rows_[j2].clear();
    cost_[j1] -= cost_[j2] * ratio;
    cost_[j2] = 0.0;
    col_alive_[j2] = false;
    log.push_back({j2, j1, offset, ratio});
    return true;
  }

  void drop_row(std::size_t i) {
    for (const auto& [j, a] : rows_[i]) col_rows_[j].erase(static_cast<std::uint32_t>(i));
    rows_[i].clear();
    row_alive_[i] = false;
  }

  void build(Presolved& out) {
    const std::size_t n = col_alive_.size();
    std::vector<std::int64_t> col_map(n, -1);
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_alive_[j]) continue;
      col_map[j] = static_cast<std::int64_t>(out.kept_columns.size());
      out.kept_columns.push_back(static_cast<std::uint32_t>(j));
    }
    WorkProblem& p = out.reduced;
    p.cols = out.kept_columns.size();
    p.columns.resize(p.cols);
    for (std::size_t jj = 0; jj < p.cols; ++jj) {
      std::size_t j = out.kept_columns[jj];
      p.col_lower.push_back(lower_[j]);
      p.col_upper.push_back(upper_[j]);
      p.cost.push_back(cost_[j]);
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!row_alive_[i]) continue;
      if (rows_[i].empty()) {
        // Empty row: consistent or the whole problem is infeasible.
        if (row_lower_[i] > tol_ || row_upper_[i] < -tol_) out.infeasible = true;
        continue;
      }
      auto r = static_cast<std::uint32_t>(out.kept_rows.size());
      out.kept_rows.push_back(static_cast<std::uint32_t>(i));
      p.row_lower.push_back(row_lower_[i]);
      p.row_upper.push_back(row_upper_[i]);
      for (const auto& [j, a] : rows_[i]) p.columns[col_map[j]].push_back({r, a});
    }
    p.rows = out.kept_rows.size();
  }

  double tol_;
  std::vector<std::map<std::uint32_t, double>> rows_;
  std::vector<std::set<std::uint32_t>> col_rows_;
  std::vector<double> lower_, upper_, cost_, row_lower_, row_upper_;
  std::vector<bool> equality_, row_alive_, col_alive_;
};

// ---------------------------------------------------------------------------
// Equilibration by powers of two: rows by their largest entry, then columns.

struct Scaling {
  std::vector<double> row, col;
};

double power_of_two_inverse(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return 1.0;
  int e = 0;
  std::frexp(v, &e);
  return std::ldexp(1.0, -(e - 1));
}

Scaling equilibrate(WorkProblem& p) {
  Scaling s;
  s.row.assign(p.rows, 1.0);
  s.col.assign(p.cols, 1.0);
  std::vector<double> row_max(p.rows, 0.0);
  for (const auto& col : p.columns)
    for (const auto& [i, a] : col) row_max[i] = std::max(row_max[i], std::abs(a));
  for (std::size_t i = 0; i < p.rows; ++i) s.row[i] = power_of_two_inverse(row_max[i]);
  for (std::size_t j = 0; j < p.cols; ++j) {
    double big = 0.0;
    for (const auto& [i, a] : p.columns[j]) big = std::max(big, std::abs(a * s.row[i]));
    s.col[j] = power_of_two_inverse(big);
  }
  for (std::size_t j = 0; j < p.cols; ++j) {
    for (auto& [i, a] : p.columns[j]) a *= s.row[i] * s.col[j];
    // x = col * x'
    p.col_lower[j] /= s.col[j];
    p.col_upper[j] /= s.col[j];
    p.cost[j] *= s.col[j];
  }
  for (std::size_t i = 0; i < p.rows; ++i) {
    p.row_lower[i] *= s.row[i];
    p.row_upper[i] *= s.row[i];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Bounded primal simplex.

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

class Simplex {
 public:
  Simplex(const WorkProblem& p, const SimplexOptions& opt)
      : p_(p), opt_(opt), m_(p.rows), n_(p.cols), total_(p.rows + p.cols) {
    lower_.resize(total_);
    upper_.resize(total_);
    cost_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lower_[j] = p.col_lower[j];
      upper_[j] = p.col_upper[j];
      cost_[j] = p.cost[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
      lower_[n_ + i] = p.row_lower[i];
      upper_[n_ + i] = p.row_upper[i];
    }
    x_.assign(total_, 0.0);
    state_.assign(total_, VarState::AtLower);
    for (std::size_t j = 0; j < n_; ++j) {
      if (lower_[j] > -kInf) {
        x_[j] = lower_[j];
        state_[j] = VarState::AtLower;
      } else if (upper_[j] < kInf) {
        x_[j] = upper_[j];
        state_[j] = VarState::AtUpper;
      } else {
        x_[j] = 0.0;
        state_[j] = VarState::FreeZero;
      }
    }
    basis_.resize(m_);
    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      state_[n_ + i] = VarState::Basic;
      binv_[i * m_ + i] = -1.0;
    }
    alpha_.resize(m_);
    y_.resize(m_);
    cb_.resize(m_);
    compute_primal();
  }

  Status run() {
    const std::size_t limit = opt_.max_iterations ? opt_.max_iterations : 50 * (m_ + n_) + 10000;
    std::size_t degenerate_run = 0;
    std::size_t reinversions = 0;
    for (;;) {
      if (iterations_ > limit) throw SolverFailure("simplex iteration limit reached");
      if (iterations_ % 64 == 0 && iterations_ > 0) {
        compute_primal();
        if (drift() > 1e-9 && reinversions < 8) {
          reinvert();
          ++reinversions;
        }
      }
      const bool phase1 = load_costs();
      compute_duals();
      const bool bland = degenerate_run >= opt_.bland_after;
      auto entering = price(bland);
      if (!entering) {
        // Confirm on fresh primal values before declaring a result.
        compute_primal();
        if (drift() > 1e-9 && reinversions < 8) {
          reinvert();
          ++reinversions;
          continue;
        }
        bool still_phase1 = load_costs();
        if (still_phase1 != phase1) continue;
        if (phase1) return Status::Infeasible;
        return Status::Optimal;
      }
      const std::size_t q = entering->first;
      const double d = entering->second;
      const double dir = d < 0.0 ? 1.0 : -1.0;
      compute_column(q);
      auto step = phase1 ? ratio_phase1(q, dir, std::abs(d), bland) : ratio_phase2(q, dir, bland);
      if (!step) {
        if (phase1) throw SolverFailure("phase 1 ratio test found no blocking variable", std::nullopt, q);
        return Status::Unbounded;
      }
      apply(q, dir, *step);
      ++iterations_;
      degenerate_run = step->t <= 1e-12 ? degenerate_run + 1 : 0;
    }
  }

  std::size_t iterations() const { return iterations_; }
  const std::vector<double>& values() const { return x_; }

 private:
  struct Step {
    double t = 0.0;
    std::optional<std::size_t> leaving_row;  // none: bound flip of the entering variable
    double leave_value = 0.0;
    bool leave_at_upper = false;
  };

  template <typename F>
  void for_column(std::size_t j, F&& f) const {
    if (j < n_) {
      for (const auto& [i, a] : p_.columns[j]) f(i, a);
    } else {
      f(static_cast<std::uint32_t>(j - n_), -1.0);
    }
  }

  void compute_primal() {
    std::vector<double> rhs(m_, 0.0);
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
      const double v = x_[j];
      for_column(j, [&](std::uint32_t i, double a) { rhs[i] -= a * v; });
    }
    for (std::size_t i = 0; i < m_; ++i) {
      const double* row = &binv_[i * m_];
      double s = 0.0;
      for (std::size_t k = 0; k < m_; ++k) s += row[k] * rhs[k];
      x_[basis_[i]] = s;
    }
  }

  double drift() const {
    std::vector<double> r(m_, 0.0);
    for (std::size_t j = 0; j < total_; ++j) {
      const double v = x_[j];
      if (v == 0.0) continue;
      for_column(j, [&](std::uint32_t i, double a) { r[i] += a * v; });
    }
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    return worst;
  }

  void reinvert() {
    std::vector<double> b(m_ * m_, 0.0);
    for (std::size_t c = 0; c < m_; ++c)
      for_column(basis_[c], [&](std::uint32_t i, double a) { b[i * m_ + c] = a; });
    std::vector<double> inv(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < m_; ++r)
        if (std::abs(b[r * m_ + c]) > std::abs(b[piv * m_ + c])) piv = r;
      if (std::abs(b[piv * m_ + c]) < 1e-13) throw SolverFailure("singular basis during reinversion", std::nullopt, basis_[c]);
      if (piv != c) {
        for (std::size_t k = 0; k < m_; ++k) {
          std::swap(b[piv * m_ + k], b[c * m_ + k]);
          std::swap(inv[piv * m_ + k], inv[c * m_ + k]);
        }
      }
      const double pv = b[c * m_ + c];
      for (std::size_t k = 0; k < m_; ++k) {
        b[c * m_ + k] /= pv;
        inv[c * m_ + k] /= pv;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = b[r * m_ + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < m_; ++k) {
          b[r * m_ + k] -= f * b[c * m_ + k];
          inv[r * m_ + k] -= f * inv[c * m_ + k];
        }
      }
    }
    binv_ = std::move(inv);
    compute_primal();
  }

  /// Loads basic costs for the current phase; returns true in phase 1.
  bool load_costs() {
    bool infeasible = false;
    const double tol = opt_.feasibility_tol;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basis_[i];
      if (x_[j] < lower_[j] - tol || x_[j] > upper_[j] + tol) infeasible = true;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basis_[i];
      if (infeasible) {
        cb_[i] = x_[j] < lower_[j] - tol ? -1.0 : (x_[j] > upper_[j] + tol ? 1.0 : 0.0);
      } else {
        cb_[i] = cost_[j];
      }
    }
    phase1_ = infeasible;
    return infeasible;
  }

  void compute_duals() {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double c = cb_[i];
      if (c == 0.0) continue;
      const double* row = &binv_[i * m_];
      for (std::size_t k = 0; k < m_; ++k) y_[k] += c * row[k];
    }
  }

  double reduced_cost(std::size_t j) const {
    double d = phase1_ ? 0.0 : cost_[j];
    for_column(j, [&](std::uint32_t i, double a) { d -= a * y_[i]; });
    return d;
  }

  std::optional<std::pair<std::size_t, double>> price(bool bland) const {
    const double tol = opt_.optimality_tol;
    std::optional<std::pair<std::size_t, double>> best;
    double best_score = 0.0;
    for (std::size_t j = 0; j < total_; ++j) {
      const VarState s = state_[j];
      if (s == VarState::Basic) continue;
      if (lower_[j] == upper_[j]) continue;
      const double d = reduced_cost(j);
      bool eligible = false;
      if (s == VarState::AtLower) eligible = d < -tol;
      else if (s == VarState::AtUpper) eligible = d > tol;
      else eligible = std::abs(d) > tol;
      if (!eligible) continue;
      if (bland) return std::make_pair(j, d);
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = std::make_pair(j, d);
      }
    }
    return best;
  }

  void compute_column(std::size_t q) {
    std::fill(alpha_.begin(), alpha_.end(), 0.0);
    for_column(q, [&](std::uint32_t k, double a) {
      for (std::size_t i = 0; i < m_; ++i) alpha_[i] += a * binv_[i * m_ + k];
    });
  }

  std::optional<Step> ratio_phase2(std::size_t q, double dir, bool bland) const {
    const double ptol = opt_.pivot_tol;
    std::optional<Step> best;
    double best_alpha = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double delta = -dir * alpha_[i];
      if (std::abs(delta) <= ptol) continue;
      const std::size_t j = basis_[i];
      double t;
      bool at_upper;
      if (delta > 0.0) {
        if (upper_[j] == kInf) continue;
        t = std::max(0.0, upper_[j] - x_[j]) / delta;
        at_upper = true;
      } else {
        if (lower_[j] == -kInf) continue;
        t = std::max(0.0, x_[j] - lower_[j]) / -delta;
        at_upper = false;
      }
      bool better = false;
      if (!best || t < best->t) {
        better = true;
      } else if (t == best->t) {
        better = bland ? basis_[i] < basis_[*best->leaving_row] : std::abs(alpha_[i]) > best_alpha;
      }
      if (better) {
        best = Step{t, i, at_upper ? upper_[j] : lower_[j], at_upper};
        best_alpha = std::abs(alpha_[i]);
      }
    }
    const double flip = upper_[q] - lower_[q];
    if (std::isfinite(flip) && (!best || flip <= best->t)) return Step{flip, std::nullopt, 0.0, false};
    return best;
  }

  struct Breakpoint {
    double t;
    std::size_t row;
    bool at_upper;
    double slope_gain;
  };

  std::optional<Step> ratio_phase1(std::size_t q, double dir, double slope_abs, bool bland) const {
    const double ptol = opt_.pivot_tol;
    const double tol = opt_.feasibility_tol;
    std::vector<Breakpoint> points;
    for (std::size_t i = 0; i < m_; ++i) {
      const double delta = -dir * alpha_[i];
      if (std::abs(delta) <= ptol) continue;
      const std::size_t j = basis_[i];
      const double v = x_[j], lo = lower_[j], up = upper_[j];
      const double g = std::abs(delta);
      if (v < lo - tol) {
        if (delta > 0.0) {
          points.push_back({(lo - v) / delta, i, false, g});
          if (up < kInf) points.push_back({(up - v) / delta, i, true, g});
        }
      } else if (v > up + tol) {
        if (delta < 0.0) {
          points.push_back({(v - up) / -delta, i, true, g});
          if (lo > -kInf) points.push_back({(v - lo) / -delta, i, false, g});
        }
      } else if (delta > 0.0) {
        if (up < kInf) points.push_back({std::max(0.0, up - v) / delta, i, true, g});
      } else {
        if (lo > -kInf) points.push_back({std::max(0.0, v - lo) / -delta, i, false, g});
      }
    }
    std::sort(points.begin(), points.end(), [&](const Breakpoint& a, const Breakpoint& b) {
      if (a.t != b.t) return a.t < b.t;
      if (bland) return basis_[a.row] < basis_[b.row];
      if (a.slope_gain != b.slope_gain) return a.slope_gain > b.slope_gain;
      return basis_[a.row] < basis_[b.row];
    });
    const double flip = upper_[q] - lower_[q];
    double slope = -slope_abs;
    for (const Breakpoint& bp : points) {
      if (std::isfinite(flip) && flip <= bp.t) return Step{flip, std::nullopt, 0.0, false};
      slope += bp.slope_gain;
      if (slope >= 0.0) {
        const std::size_t j = basis_[bp.row];
        return Step{bp.t, bp.row, bp.at_upper ? upper_[j] : lower_[j], bp.at_upper};
      }
    }
    if (std::isfinite(flip)) return Step{flip, std::nullopt, 0.0, false};
    if (!points.empty()) {
      const Breakpoint& bp = points.back();
      const std::size_t j = basis_[bp.row];
      return Step{bp.t, bp.row, bp.at_upper ? upper_[j] : lower_[j], bp.at_upper};
    }
    return std::nullopt;
  }

  void apply(std::size_t q, double dir, const Step& step) {
    const double t = step.t;
    if (t != 0.0) {
      for (std::size_t i = 0; i < m_; ++i)
        if (alpha_[i] != 0.0) x_[basis_[i]] -= dir * t * alpha_[i];
    }
    if (!step.leaving_row) {
      // Bound flip.
      if (dir > 0.0) {
        x_[q] = upper_[q];
        state_[q] = VarState::AtUpper;
      } else {
        x_[q] = lower_[q];
        state_[q] = VarState::AtLower;
      }
      return;
    }
    x_[q] += dir * t;
    const std::size_t r = *step.leaving_row;
    const std::size_t leaving = basis_[r];
    x_[leaving] = step.leave_value;
    state_[leaving] = step.leave_at_upper ? VarState::AtUpper : VarState::AtLower;
    basis_[r] = q;
    state_[q] = VarState::Basic;

    const double pivot = alpha_[r];
    double* prow = &binv_[r * m_];
    for (std::size_t k = 0; k < m_; ++k) prow[k] /= pivot;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = alpha_[i];
      if (f == 0.0) continue;
      double* row = &binv_[i * m_];
      for (std::size_t k = 0; k < m_; ++k) row[k] -= f * prow[k];
    }
  }

  const WorkProblem& p_;
  const SimplexOptions& opt_;
  std::size_t m_, n_, total_;
  std::vector<double> lower_, upper_, cost_, x_;
  std::vector<VarState> state_;
  std::vector<std::size_t> basis_;
  std::vector<double> binv_;
  std::vector<double> alpha_, y_, cb_;
  bool phase1_ = false;
  std::size_t iterations_ = 0;
};

}  // namespace

Solution SimplexBackend::solve(const LinearProgram& lp) const {
  lp.validate();
  const std::size_t n = lp.num_variables();
  Solution sol;

  Presolver presolver(lp, options_.feasibility_tol);
  Presolved pre = presolver.run(options_.presolve);
  if (pre.infeasible) {
    sol.status = Status::Infeasible;
    sol.values.assign(n, 0.0);
    return sol;
  }
  WorkProblem& work = pre.reduced;
  for (std::size_t j = 0; j < work.cols; ++j) {
    if (work.col_lower[j] > work.col_upper[j]) {
      sol.status = Status::Infeasible;
      sol.values.assign(n, 0.0);
      return sol;
    }
  }
  Scaling scaling;
  if (options_.scale) {
    scaling = equilibrate(work);
  } else {
    scaling.row.assign(work.rows, 1.0);
    scaling.col.assign(work.cols, 1.0);
  }

  Simplex simplex(work, options_);
  sol.status = simplex.run();
  sol.iterations = simplex.iterations();

  // Recover original variables.
  std::vector<double> x(n, 0.0);
  const std::vector<double>& xs = simplex.values();
  for (std::size_t jj = 0; jj < work.cols; ++jj) x[pre.kept_columns[jj]] = xs[jj] * scaling.col[jj];
  for (auto it = pre.eliminations.rbegin(); it != pre.eliminations.rend(); ++it)
    x[it->removed] = it->offset - it->ratio * x[it->kept];
  if (sol.status == Status::Optimal) {
    for (std::size_t j = 0; j < n; ++j) {
      const Variable& v = lp.variables()[j];
      x[j] = std::clamp(x[j], v.lower, v.upper);
    }
  }
  sol.values = std::move(x);

  double sign = 1.0;
  double obj = 0.0;
  for (const Term& t : lp.objective().terms) obj += sign * t.coef * sol.values[t.var.index];
  sol.objective_value = obj;
  sol.max_residual = lp.num_constraints() + n == 0 ? 0.0 : std::max(0.0, scaled_residual(lp, sol.values));
  if (sol.status == Status::Optimal && sol.max_residual > options_.feasibility_tol) {
    // Locate the worst row for the diagnostic.
    std::size_t worst_row = 0;
    double worst = -kInf;
    for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
      const Constraint& c = lp.constraints()[i];
      double act = activity(c, sol.values);
      double v = c.sense == Sense::LessEqual ? act - c.rhs
                 : c.sense == Sense::GreaterEqual ? c.rhs - act
                                                  : std::abs(act - c.rhs);
      if (v > worst) {
        worst = v;
        worst_row = i;
      }
    }
    throw SolverFailure("optimal basis violates constraints by " + std::to_string(sol.max_residual), worst_row);
  }
  return sol;
}

}  // namespace stablehh::lp
