#pragma once

// Set identification of the female's private-consumption share and sharing
// rule from the stability restrictions of an adjusted (exactly
// rationalizable) market, plus the assignability-only naive bounds.

#include <string>
#include <vector>

#include "stablehh/market.hpp"
#include "stablehh/stability.hpp"

namespace stablehh {

struct Interval {
  double lower = 0.0;
  double upper = 1.0;

  double width() const { return upper - lower; }
  bool contains(double v, double tol = 0.0) const { return v >= lower - tol && v <= upper + tol; }
  bool within(const Interval& outer, double tol = 0.0) const {
    return lower >= outer.lower - tol && upper <= outer.upper + tol;
  }

  bool operator==(const Interval&) const = default;
};

/// Denominator of the sharing rule: household full income (market expenditure
/// plus wage-valued leisure) or market expenditure alone, in which case
/// leisure is left out of the numerator as well.
enum class Denominator : std::uint8_t { FullIncome, Expenditure };

std::string_view to_string(Denominator d);

struct BoundsOptions {
  SolveOptions solve;
  /// Replay the stage-1 non-labor splits instead of freeing them in the band.
  bool pin_nonlabor = false;
  std::map<std::string, NonlaborSplit> pinned;
  Denominator denominator = Denominator::FullIncome;
  /// Worker threads for the per-couple programs (1 = sequential).
  unsigned jobs = 1;
};

struct CoupleInterval {
  std::string household_id;
  Interval interval;

  bool operator==(const CoupleInterval&) const = default;
};

/// [min, max] of q_w / q_priv per couple subject to the unindexed restrictions
/// of `adjusted`. AdjustmentError when those restrictions are infeasible.
std::vector<CoupleInterval> bound_private_share(const MarriageMarket& adjusted, ModelKind model,
                                                const BoundsOptions& options = {});

/// [min, max] of the female's sharing rule per couple. Her numerator is her
/// leisure at her wage, her private good, her Lindahl share of the public good
/// and an attribution kappa in [0, 1] of the non-cooperative children's good
/// (k under joint custody, C under sole custody) plus her Lindahl share of K.
std::vector<CoupleInterval> bound_sharing_rule(const MarriageMarket& adjusted, ModelKind model,
                                               const BoundsOptions& options = {});

struct NaiveBounds {
  std::string household_id;
  Interval private_share;
  Interval sharing_rule;

  bool operator==(const NaiveBounds&) const = default;
};

/// Bounds from assignability alone: her assignable private consumption at the
/// bottom, all nonassignable consumption added at the top.
std::vector<NaiveBounds> naive_bounds(const MarriageMarket& market, ModelKind model,
                                      Denominator denominator = Denominator::FullIncome);

struct CoupleBounds {
  std::string household_id;
  double wage_ratio = 0.0;  // female wage / male wage
  Interval private_share;
  Interval sharing_rule;
  Interval naive_private_share;
  Interval naive_sharing_rule;

  bool operator==(const CoupleBounds&) const = default;
};

struct BoundsReport {
  std::string region;
  ModelKind model = ModelKind::joint_custody();
  Denominator denominator = Denominator::FullIncome;
  std::vector<CoupleBounds> couples;

  bool operator==(const BoundsReport&) const = default;
};

/// Two-stage recipe: adjust incomes with the stage-1 report, then bound on the
/// adjusted market. Naive bounds use the raw market.
BoundsReport compute_bounds(const MarriageMarket& market, const StabilityReport& report,
                            const BoundsOptions& options = {});

}  // namespace stablehh
