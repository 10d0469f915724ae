#pragma once

#include <cstddef>

#include "stablehh/lp.hpp"

namespace stablehh::lp {

struct SimplexOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  /// 0 selects a limit proportional to the problem size.
  std::size_t max_iterations = 0;
  /// Consecutive degenerate pivots before pricing falls back to Bland's rule.
  std::size_t bland_after = 50;
  /// Eliminate two-variable equality rows before solving.
  bool presolve = true;
  /// Equilibrate rows and columns (powers of two) before solving.
  bool scale = true;
};

/// Bounded-variable primal simplex on an explicit dense basis inverse.
///
/// Every row gets a logical variable carrying the row's bounds, so equality,
/// inequality and ranged rows are handled alike. Phase 1 minimizes the sum of
/// bound infeasibilities of the basic variables with a piecewise-linear
/// ratio test; phase 2 optimizes the true objective. Pricing is Dantzig's
/// rule and switches to Bland's smallest-index rule after a run of degenerate
/// pivots, which rules out cycling. All choices are deterministic.
class SimplexBackend final : public Backend {
 public:
  SimplexBackend() = default;
  explicit SimplexBackend(SimplexOptions options) : options_(options) {}

  Solution solve(const LinearProgram& lp) const override;
  const SimplexOptions& options() const { return options_; }

 private:
  SimplexOptions options_;
};

}  // namespace stablehh::lp
