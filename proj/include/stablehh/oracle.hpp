#pragma once

// Synthetic markets that are rationalizable by construction, controlled
// income perturbations, and an exhaustive grid check that is independent of
// the LP formulation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stablehh/market.hpp"
#include "stablehh/stability.hpp"

namespace stablehh::oracle {

/// Allocation used to generate a market. Currency amounts per week.
struct HiddenCouple {
  std::string household_id;
  double private_m = 0.0;
  double private_w = 0.0;
  std::optional<double> child_price_m;
  std::optional<double> child_price_w;
  double nonlabor_m = 0.0;
  double nonlabor_w = 0.0;
  /// Her share of the non-cooperative children's good and her Lindahl price of
  /// the own public good; used only by the sharing rule.
  double kappa = 0.0;
  double public_price_w_own = 0.0;
  double private_share = 0.0;
  double sharing_rule = 0.0;

  bool operator==(const HiddenCouple&) const = default;
};

struct HiddenTruth {
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::joint_custody();
  std::vector<HiddenCouple> couples;
  std::vector<PairAllocation> pairs;
  /// Ratio of each exit option's income (plus transfer) to the right-hand side
  /// at the truth.
  std::map<OptionKey, double> margins;

  /// The truth in the form recorded by stability reports.
  Allocation allocation(const MarriageMarket& market) const;

  bool operator==(const HiddenTruth&) const = default;
};

struct GeneratorOptions {
  double margin_lower = 0.8;
  double margin_upper = 0.99;
  /// Age-window consideration sets; false leaves every set empty so that only
  /// singlehood options remain.
  bool consider = true;
  std::pair<double, double> percentile_band{0.01, 0.99};
  /// Couples report assignable private consumption (joint custody only).
  bool assignable = true;
};

struct SyntheticMarket {
  MarriageMarket market;
  HiddenTruth truth;
};

/// Every considered or not-yet-considered pair gets an explicit income, so
/// consideration sets can later be enlarged without losing exact
/// rationalizability. Deterministic in `seed`.
SyntheticMarket generate_stable_market(std::uint64_t seed, std::size_t n_couples, std::size_t n_singles,
                                       ModelKind model, const GeneratorOptions& options = {});

/// Multiplies the income of exit option `key` by `factor`. InvalidInput if
/// the market has no such exit option or the factor is not positive.
MarriageMarket perturb_incomes(const MarriageMarket& market, const OptionKey& key, double factor);

/// Largest multiple of the current income of singlehood option `key` that the
/// one-couple market can rationalize while the spouse's option stays at
/// index 1. Unit prices and a 50/50 non-labor split are assumed.
double singlehood_headroom(const MarriageMarket& market, ModelKind model, const OptionKey& key,
                           const ChildSupportSchedule& schedule = {});

/// Grid search over every unknown (private split, children's Lindahl price,
/// non-labor split, public-good Lindahl prices) with `grid_steps` points per
/// dimension. True iff some grid point satisfies all restrictions at s = 1.
/// Unsupported beyond 2 couples, 2 singles or 21 steps.
bool brute_force_rationalizable(const MarriageMarket& market, ModelKind model, std::size_t grid_steps,
                                const ChildSupportSchedule& schedule = {});

/// Largest violation of the restrictions at the hidden truth (<= 0 when all
/// hold), measured in currency units.
double truth_violation(const MarriageMarket& market, const HiddenTruth& truth,
                       const ChildSupportSchedule& schedule = {});

}  // namespace stablehh::oracle
