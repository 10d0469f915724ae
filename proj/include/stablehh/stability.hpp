#pragma once

// Stability restrictions of a marriage market under joint or sole custody,
// stability indices and the income adjustment that makes a dataset exactly
// rationalizable.
//
// Rows are built in currency-normalized units: every currency amount is
// divided by `currency_unit` (by default the largest household full
// expenditure in the market). Price variables (Lindahl shares of the public
// good and of the children's big-decision good) are left unscaled.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stablehh/lp.hpp"
#include "stablehh/market.hpp"

namespace stablehh {

/// How the unknown split of household non-labor income enters exit-option
/// incomes.
///   Fixed:      each spouse gets half; the index program is exactly linear.
///   Endogenous: splits are free inside the band; s*y is replaced by y - L.
///   Pinned:     splits are fixed at given values (stage-2 replays).
enum class SplitMode : std::uint8_t { Fixed, Endogenous, Pinned };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view text);

struct NonlaborSplit {
  double male = 0.0;
  double female = 0.0;

  bool operator==(const NonlaborSplit&) const = default;
};

struct ConstraintOptions {
  bool with_indices = true;
  SplitMode split = SplitMode::Fixed;
  /// Household id -> split, in currency units. Required for every couple in
  /// Pinned mode.
  std::map<std::string, NonlaborSplit> pinned;
  ChildSupportSchedule schedule;
  /// Sole custody supports female custodians only.
  Gender custodian = Gender::Female;
  /// <= 0 selects the market default.
  double currency_unit = 0.0;
};

/// Affine function of program variables: constant + sum coef * var.
struct AffineForm {
  double constant = 0.0;
  std::vector<lp::Term> terms;

  double evaluate(std::span<const double> values) const;
  bool is_constant() const { return terms.empty(); }
};

struct CoupleVariables {
  std::string household_id;
  lp::VarId private_m;
  lp::VarId private_w;
  std::optional<lp::VarId> child_price_m;  // joint custody only
  std::optional<lp::VarId> child_price_w;
  std::optional<lp::VarId> nonlabor_m;  // absent when the split is fixed
  std::optional<lp::VarId> nonlabor_w;
};

struct PairVariables {
  OptionKey key;
  lp::VarId public_price_m;
  lp::VarId public_price_w;
};

struct AllocationVariables {
  std::vector<CoupleVariables> couples;
  std::vector<PairVariables> pairs;
  /// One per exit option, parallel to StabilitySystem::rows: the index s in
  /// Fixed/Pinned mode, the income loss L in Endogenous mode. Empty without
  /// indices.
  std::vector<lp::VarId> option_vars;
};

struct OptionRow {
  ExitOption option;
  std::size_t row = 0;
  /// Exit-option income (normalized units).
  AffineForm income;
  /// Income with every couple's non-labor income split evenly.
  double even_split_income = 0.0;
  /// Constant added to the income on the left: the female's transfer from her
  /// current partner, minus the male's own transfer in the binding variant.
  double transfer = 0.0;
};

struct StabilitySystem {
  lp::LinearProgram program;
  AllocationVariables vars;
  std::vector<OptionRow> rows;
  double currency_unit = 1.0;
  ModelKind model = ModelKind::joint_custody();
  ConstraintOptions options;
};

/// Largest household full expenditure in the market (1 if all are zero).
double default_currency_unit(const MarriageMarket& market);

/// Joint custody restrictions. ModelMismatch if a couple lacks k or K.
StabilitySystem build_jc_constraints(const MarriageMarket& market, const ConstraintOptions& options);
/// Sole custody restrictions. ModelMismatch if a household lacks C;
/// Unsupported for a male custodian.
StabilitySystem build_spc_constraints(const MarriageMarket& market, const ConstraintOptions& options, bool binding);
StabilitySystem build_constraints(const MarriageMarket& market, ModelKind model, const ConstraintOptions& options);

struct CoupleAllocation {
  std::string household_id;
  std::string male_id;
  std::string female_id;
  double private_m = 0.0;
  double private_w = 0.0;
  std::optional<double> child_price_m;
  std::optional<double> child_price_w;
  double nonlabor_m = 0.0;
  double nonlabor_w = 0.0;

  bool operator==(const CoupleAllocation&) const = default;
};

struct PairAllocation {
  OptionKey key;
  double public_price_m = 0.0;
  double public_price_w = 0.0;

  bool operator==(const PairAllocation&) const = default;
};

/// Unknowns recovered from a solved program, in currency units.
struct Allocation {
  std::vector<CoupleAllocation> couples;
  std::vector<PairAllocation> pairs;

  bool operator==(const Allocation&) const = default;
};

Allocation extract_allocation(const StabilitySystem& system, std::span<const double> values);

/// Program point for `allocation`. Option variables, if any, are set to 1
/// (indices) or 0 (losses).
std::vector<double> allocation_point(const StabilitySystem& system, const Allocation& allocation);

struct OptionIndex {
  ExitOption option;
  double index = 1.0;
  /// Exit-option income at the recovered non-labor split (currency units).
  double income = 0.0;
  /// Income that had to be removed: (1 - index) * income.
  double loss = 0.0;

  bool operator==(const OptionIndex&) const = default;
};

struct CoupleSummary {
  std::string household_id;
  double average_index = 1.0;
  double minimum_index = 1.0;
  std::size_t options = 0;

  bool operator==(const CoupleSummary&) const = default;
};

struct StabilityReport {
  std::string region;
  ModelKind model = ModelKind::joint_custody();
  SplitMode split = SplitMode::Fixed;
  std::vector<OptionIndex> options;
  std::vector<CoupleSummary> couples;
  Allocation allocation;
  /// Sum of indices, the model-level statistic. Individual indices can differ
  /// between optimal solutions.
  double objective = 0.0;
  double max_residual = 0.0;
  bool indices_unique = false;

  bool operator==(const StabilityReport&) const = default;
};

struct SolveOptions {
  ChildSupportSchedule schedule;
  double currency_unit = 0.0;
  /// nullptr selects the default backend.
  const lp::Backend* backend = nullptr;
};

/// Maximizes the sum of stability indices (Fixed) or minimizes the weighted
/// income losses (Endogenous). Throws ModelError when no index vector makes
/// the market rationalizable, which requires transfers exceeding what the
/// custodian's household can cover.
StabilityReport solve_stability_indices(const MarriageMarket& market, ModelKind model, SplitMode split,
                                        const SolveOptions& options = {});

/// Mean and minimum index over each couple's own exit options: both spouses'
/// singlehood and every pair involving either spouse.
std::vector<CoupleSummary> summarize(const StabilityReport& report);

/// Grid with every exit-option income multiplied by its index. Verifies that
/// the recorded allocation satisfies the unindexed restrictions of the
/// adjusted market (scaled residual <= 1e-7); AdjustmentError otherwise.
PriceIncomeGrid adjust_incomes(const MarriageMarket& market, const StabilityReport& report,
                               const SolveOptions& options = {});

/// `market` with its grid replaced by adjust_incomes.
MarriageMarket adjusted_market(const MarriageMarket& market, const StabilityReport& report,
                               const SolveOptions& options = {});

/// Non-labor splits recorded in a report, keyed by household id.
std::map<std::string, NonlaborSplit> recorded_splits(const StabilityReport& report);

/// True when the restrictions hold at s = 1 for some allocation with
/// non-labor splits free inside the band.
bool is_rationalizable(const MarriageMarket& market, ModelKind model, const SolveOptions& options = {});

}  // namespace stablehh
