#include "stablehh/identification.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "stablehh/errors.hpp"

namespace stablehh {

using lp::Direction;
using lp::Sense;
using lp::Term;
using lp::VarId;

std::string_view to_string(Denominator d) { return d == Denominator::FullIncome ? "full_income" : "expenditure"; }

namespace {

// Pieces of a couple's own household valued at its own prices.
struct HouseholdValues {
  double leisure_m = 0.0;  // wage-valued
  double leisure_w = 0.0;
  double private_price = 1.0;
  double public_price = 1.0;
  double private_total = 0.0;
  double assignable_m = 0.0;
  double assignable_w = 0.0;
  bool has_assignable = false;
  double public_total = 0.0;
  double child_coop = 0.0;  // K valued at the child price (joint custody)
  double child_noncoop = 0.0;  // k (joint) or C (sole)

  double denominator(Denominator d) const {
    double v = private_price * private_total + public_price * public_total + child_coop + child_noncoop;
    if (d == Denominator::FullIncome) v += leisure_m + leisure_w;
    return v;
  }
};

HouseholdValues values_of(const MarketIndex& index, const Household& h, ModelKind model) {
  const Agent& m = index.agent(*h.male_id);
  const Agent& w = index.agent(*h.female_id);
  const HouseholdBundle& b = h.bundle;
  const OptionPricing own = index.pricing({m.id, w.id});
  HouseholdValues v;
  v.leisure_m = m.wage * b.leisure_m;
  v.leisure_w = w.wage * b.leisure_w;
  v.private_price = own.private_price;
  v.public_price = own.public_price;
  v.private_total = b.private_total;
  v.has_assignable = b.assignable_m.has_value() || b.assignable_w.has_value();
  v.assignable_m = b.assignable_m.value_or(0.0);
  v.assignable_w = b.assignable_w.value_or(0.0);
  v.public_total = b.public_total;
  if (model.is_joint()) {
    if (!b.has_joint_custody_split()) throw ModelMismatch("household " + h.id + " lacks the daily/big-decision children split");
    v.child_noncoop = *b.child_daily;
    v.child_coop = index.market().grid.child_price_of(h.id) * *b.child_big;
  } else {
    if (!b.child_total) throw ModelMismatch("household " + h.id + " lacks total children's consumption");
    v.child_noncoop = *b.child_total;
  }
  return v;
}

ConstraintOptions stage_two_options(const BoundsOptions& options) {
  ConstraintOptions co;
  co.with_indices = false;
  co.split = options.pin_nonlabor ? SplitMode::Pinned : SplitMode::Endogenous;
  co.pinned = options.pinned;
  co.schedule = options.solve.schedule;
  co.currency_unit = options.solve.currency_unit;
  return co;
}

void run_parallel(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, n); ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

double optimize(const lp::LinearProgram& base, std::vector<Term> objective, Direction direction,
                const BoundsOptions& options, const std::string& household_id) {
  lp::LinearProgram program = base;
  program.set_objective(std::move(objective), direction);
  const lp::Solution sol = options.solve.backend ? options.solve.backend->solve(program) : lp::solve(program);
  if (!sol.optimal())
    throw AdjustmentError("stage-2 program for household " + household_id + " is " +
                          std::string(lp::to_string(sol.status)) + "; the adjusted market is not rationalizable");
  return sol.objective_value;
}

Interval clamp_unit(double lo, double hi) {
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

}  // namespace

std::vector<CoupleInterval> bound_private_share(const MarriageMarket& adjusted, ModelKind model,
                                                const BoundsOptions& options) {
  StabilitySystem sys = build_constraints(adjusted, model, stage_two_options(options));
  MarketIndex index(adjusted);
  const double inv = 1.0 / sys.currency_unit;
  std::vector<CoupleInterval> out(sys.vars.couples.size());
  run_parallel(out.size(), options.jobs, [&](std::size_t c) {
    const CoupleVariables& cv = sys.vars.couples[c];
    const Household& h = index.household(cv.household_id);
    out[c].household_id = cv.household_id;
    const double q = h.bundle.private_total * inv;
    const double lo = optimize(sys.program, {{cv.private_w, 1.0}}, Direction::Minimize, options, h.id);
    const double hi = optimize(sys.program, {{cv.private_w, 1.0}}, Direction::Maximize, options, h.id);
    out[c].interval = q > 0.0 ? clamp_unit(lo / q, hi / q) : Interval{0.0, 1.0};
  });
  return out;
}

std::vector<CoupleInterval> bound_sharing_rule(const MarriageMarket& adjusted, ModelKind model,
                                               const BoundsOptions& options) {
  StabilitySystem sys = build_constraints(adjusted, model, stage_two_options(options));
  MarketIndex index(adjusted);
  const double inv = 1.0 / sys.currency_unit;

  // Her Lindahl share of the own public good and the children attribution
  // enter only the objective.
  struct Extra {
    VarId public_price_w;
    VarId kappa;
  };
  std::vector<Extra> extras;
  for (const CoupleVariables& cv : sys.vars.couples) {
    const Household& h = index.household(cv.household_id);
    const OptionPricing own = index.pricing({*h.male_id, *h.female_id});
    VarId pm = sys.program.add_variable("P_m_own:" + h.id, 0.0, own.public_price);
    VarId pw = sys.program.add_variable("P_w_own:" + h.id, 0.0, own.public_price);
    sys.program.add_constraint("add_P_own:" + h.id, {{pm, 1.0}, {pw, 1.0}}, Sense::Equal, own.public_price);
    VarId kappa = sys.program.add_variable("kappa:" + h.id, 0.0, 1.0);
    extras.push_back({pw, kappa});
  }

  std::vector<CoupleInterval> out(sys.vars.couples.size());
  run_parallel(out.size(), options.jobs, [&](std::size_t c) {
    const CoupleVariables& cv = sys.vars.couples[c];
    const Household& h = index.household(cv.household_id);
    const HouseholdValues v = values_of(index, h, model);
    out[c].household_id = h.id;
    const double denom = v.denominator(options.denominator) * inv;
    if (!(denom > 0.0)) {
      out[c].interval = {0.0, 1.0};
      return;
    }
    const double constant = options.denominator == Denominator::FullIncome ? v.leisure_w * inv : 0.0;
    std::vector<Term> numerator{{cv.private_w, v.private_price},
                                {extras[c].public_price_w, v.public_total * inv},
                                {extras[c].kappa, v.child_noncoop * inv}};
    if (cv.child_price_w) numerator.push_back({*cv.child_price_w, *h.bundle.child_big * inv});
    const double lo = optimize(sys.program, numerator, Direction::Minimize, options, h.id);
    const double hi = optimize(sys.program, numerator, Direction::Maximize, options, h.id);
    out[c].interval = clamp_unit((constant + lo) / denom, (constant + hi) / denom);
  });
  return out;
}

std::vector<NaiveBounds> naive_bounds(const MarriageMarket& market, ModelKind model, Denominator denominator) {
  MarketIndex index(market);
  std::vector<NaiveBounds> out;
  for (const Household* h : index.couples()) {
    const HouseholdValues v = values_of(index, *h, model);
    NaiveBounds nb;
    nb.household_id = h->id;
    const double q = v.private_total;
    if (v.has_assignable && q > 0.0) nb.private_share = clamp_unit(v.assignable_w / q, 1.0 - v.assignable_m / q);
    const double denom = v.denominator(denominator);
    if (denom > 0.0) {
      const double own = (denominator == Denominator::FullIncome ? v.leisure_w : 0.0) + v.private_price * v.assignable_w;
      const double nonassignable = v.private_price * (q - v.assignable_m - v.assignable_w) +
                                   v.public_price * v.public_total + v.child_coop + v.child_noncoop;
      nb.sharing_rule = clamp_unit(own / denom, (own + nonassignable) / denom);
    }
    out.push_back(std::move(nb));
  }
  return out;
}

BoundsReport compute_bounds(const MarriageMarket& market, const StabilityReport& report,
                            const BoundsOptions& options) {
  const MarriageMarket adjusted = adjusted_market(market, report, options.solve);
  BoundsOptions stage_two = options;
  if (options.pin_nonlabor && stage_two.pinned.empty()) stage_two.pinned = recorded_splits(report);

  const auto shares = bound_private_share(adjusted, report.model, stage_two);
  const auto rules = bound_sharing_rule(adjusted, report.model, stage_two);
  const auto naive = naive_bounds(market, report.model, options.denominator);

  MarketIndex index(market);
  BoundsReport out;
  out.region = market.region;
  out.model = report.model;
  out.denominator = options.denominator;
  for (std::size_t c = 0; c < shares.size(); ++c) {
    CoupleBounds cb;
    cb.household_id = shares[c].household_id;
    const Household& h = index.household(cb.household_id);
    const Agent& m = index.agent(*h.male_id);
    const Agent& w = index.agent(*h.female_id);
    cb.wage_ratio = m.wage > 0.0 ? w.wage / m.wage : 0.0;
    cb.private_share = shares[c].interval;
    cb.sharing_rule = rules[c].interval;
    cb.naive_private_share = naive[c].private_share;
    cb.naive_sharing_rule = naive[c].sharing_rule;
    out.couples.push_back(std::move(cb));
  }
  return out;
}

}  // namespace stablehh
