#include <gtest/gtest.h>

#include <random>

#include "market_builder.hpp"
#include "stablehh/errors.hpp"
#include "stablehh/identification.hpp"
#include "stablehh/oracle.hpp"

using namespace stablehh;
using stablehh::testing::jc_bundle;
using stablehh::testing::MarketBuilder;
using stablehh::testing::spc_bundle;

namespace {

constexpr double kTol = 1e-7;

MarriageMarket one_couple(HouseholdBundle bundle) {
  return MarketBuilder().couple("h1", "m1", "w1", bundle).build();
}

std::vector<ModelKind> all_models() {
  return {ModelKind::joint_custody(), ModelKind::sole_custody(), ModelKind::sole_custody(true)};
}

}  // namespace

TEST(PrivateShare, NothingBindsGivesUnitInterval) {
  const auto b = bound_private_share(one_couple(jc_bundle(40, 30, 10, 20)), ModelKind::joint_custody());
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b[0].interval.lower, 0.0, kTol);
  EXPECT_NEAR(b[0].interval.upper, 1.0, kTol);
}

TEST(PrivateShare, FemaleRationalityRaisesTheLowerBound) {
  // 42 <= q_w + Q(30) needs q_w >= 12 of a private total of 40.
  MarriageMarket m = MarketBuilder().couple("h1", "m1", "w1", jc_bundle(40, 30, 0, 0)).income({"", "w1"}, 42).build();
  const auto b = bound_private_share(m, ModelKind::joint_custody());
  EXPECT_NEAR(b[0].interval.lower, 0.3, kTol);
  EXPECT_NEAR(b[0].interval.upper, 1.0, kTol);

  // The same row on the male side caps her share from above.
  m.grid.options[{"m1", ""}].y_labor = 50;
  const auto both = bound_private_share(m, ModelKind::joint_custody());
  EXPECT_NEAR(both[0].interval.upper, 0.5, kTol);
}

TEST(PrivateShare, InfeasibleAdjustedMarketIsAnAdjustmentError) {
  MarriageMarket m = MarketBuilder().couple("h1", "m1", "w1", jc_bundle(40, 30, 0, 0)).income({"", "w1"}, 500).build();
  EXPECT_THROW(bound_private_share(m, ModelKind::joint_custody()), AdjustmentError);
  EXPECT_THROW(bound_sharing_rule(m, ModelKind::joint_custody()), AdjustmentError);
}

TEST(SharingRule, UnconstrainedCollapsesToNaive) {
  MarketBuilder b;
  b.couple("h1", "m1", "w1", jc_bundle(40, 30, 10, 20));
  b.market().agents[0].wage = 20.0;
  b.market().agents[1].wage = 10.0;
  b.market().households[0].bundle.leisure_m = 72.0;
  b.market().households[0].bundle.leisure_w = 72.0;
  const MarriageMarket m = b.build();
  const double full = 100.0 + 72.0 * 20.0 + 72.0 * 10.0;
  const auto stable = bound_sharing_rule(m, ModelKind::joint_custody());
  const auto naive = naive_bounds(m, ModelKind::joint_custody());
  EXPECT_NEAR(naive[0].sharing_rule.lower, 720.0 / full, 1e-12);
  EXPECT_NEAR(naive[0].sharing_rule.upper, 820.0 / full, 1e-12);
  EXPECT_NEAR(stable[0].interval.lower, naive[0].sharing_rule.lower, kTol);
  EXPECT_NEAR(stable[0].interval.upper, naive[0].sharing_rule.upper, kTol);
}

TEST(SharingRule, StabilityLiftsTheLowerBoundAboveNaive) {
  MarriageMarket m = MarketBuilder().couple("h1", "m1", "w1", jc_bundle(40, 30, 10, 20)).income({"", "w1"}, 72).build();
  // 72 <= q_w + 30 + 10 + 20 rho_w, so her private good and her share of K
  // together carry at least 32 of a full income of 100.
  const auto stable = bound_sharing_rule(m, ModelKind::joint_custody());
  const auto naive = naive_bounds(m, ModelKind::joint_custody());
  EXPECT_NEAR(naive[0].sharing_rule.lower, 0.0, 1e-12);
  EXPECT_NEAR(stable[0].interval.lower, 0.32, kTol);
  EXPECT_GT(stable[0].interval.lower, naive[0].sharing_rule.lower);
}

TEST(SharingRule, ExpenditureDenominatorDropsLeisure) {
  MarketBuilder b;
  b.couple("h1", "m1", "w1", spc_bundle(40, 30, 30));
  b.market().households[0].bundle.assignable_w = 10.0;
  b.market().agents[1].wage = 10.0;
  b.market().households[0].bundle.leisure_w = 72.0;
  const MarriageMarket m = b.build();
  EXPECT_NEAR(naive_bounds(m, ModelKind::sole_custody())[0].sharing_rule.lower, 730.0 / 820.0, 1e-12);
  const auto naive = naive_bounds(m, ModelKind::sole_custody(), Denominator::Expenditure);
  EXPECT_NEAR(naive[0].sharing_rule.lower, 0.1, 1e-12);
  EXPECT_NEAR(naive[0].sharing_rule.upper, 1.0, 1e-12);
  BoundsOptions o;
  o.denominator = Denominator::Expenditure;
  const auto stable = bound_sharing_rule(m, ModelKind::sole_custody(), o);
  EXPECT_NEAR(stable[0].interval.lower, 0.1, kTol);
  EXPECT_NEAR(stable[0].interval.upper, 1.0, kTol);
}

TEST(Naive, AssignableArithmetic) {
  HouseholdBundle bundle = jc_bundle(400, 0, 0, 0);
  bundle.assignable_w = 100;
  bundle.assignable_m = 120;
  const auto nb = naive_bounds(one_couple(bundle), ModelKind::joint_custody());
  EXPECT_NEAR(nb[0].private_share.lower, 0.25, 1e-12);
  EXPECT_NEAR(nb[0].private_share.upper, 0.70, 1e-12);
}

TEST(Naive, NoAssignableDataGivesUnitInterval) {
  const auto nb = naive_bounds(one_couple(spc_bundle(400, 50, 20)), ModelKind::sole_custody());
  EXPECT_EQ(nb[0].private_share, (Interval{0.0, 1.0}));
}

TEST(Naive, FullyAssignableIsAPoint) {
  HouseholdBundle bundle = jc_bundle(400, 10, 0, 0);
  bundle.assignable_w = 150;
  bundle.assignable_m = 250;
  const auto nb = naive_bounds(one_couple(bundle), ModelKind::joint_custody());
  EXPECT_NEAR(nb[0].private_share.width(), 0.0, 1e-12);
  EXPECT_NEAR(nb[0].private_share.lower, 0.375, 1e-12);
  const auto stable = bound_private_share(one_couple(bundle), ModelKind::joint_custody());
  EXPECT_NEAR(stable[0].interval.lower, 0.375, kTol);
  EXPECT_NEAR(stable[0].interval.upper, 0.375, kTol);
}

TEST(Bounds, OracleTruthInsideNestedIntervals) {
  for (ModelKind model : all_models()) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto syn = oracle::generate_stable_market(seed, 8, 3, model);
      const auto report = solve_stability_indices(syn.market, model, SplitMode::Fixed);
      const BoundsReport b = compute_bounds(syn.market, report);
      ASSERT_EQ(b.couples.size(), syn.truth.couples.size());
      for (std::size_t c = 0; c < b.couples.size(); ++c) {
        const CoupleBounds& cb = b.couples[c];
        const oracle::HiddenCouple& t = syn.truth.couples[c];
        ASSERT_EQ(cb.household_id, t.household_id);
        EXPECT_TRUE(cb.private_share.contains(t.private_share)) << cb.household_id;
        EXPECT_TRUE(cb.sharing_rule.contains(t.sharing_rule)) << cb.household_id;
        EXPECT_TRUE(cb.private_share.within(cb.naive_private_share, kTol));
        EXPECT_TRUE(cb.sharing_rule.within(cb.naive_sharing_rule, kTol));
        EXPECT_LE(cb.private_share.lower, cb.private_share.upper);
        EXPECT_GE(cb.private_share.lower, 0.0);
        EXPECT_LE(cb.sharing_rule.upper, 1.0);
      }
    }
  }
}

TEST(Bounds, PerturbedMarketsStayNestedAndAdjusted) {
  for (ModelKind model : all_models()) {
    auto syn = oracle::generate_stable_market(30, 6, 2, model);
    MarriageMarket m = syn.market;
    const auto options = exit_options(m);
    for (std::size_t i = 0; i < options.size(); i += 4) m = oracle::perturb_incomes(m, options[i].key, 2.5);
    for (SplitMode split : {SplitMode::Fixed, SplitMode::Endogenous}) {
      const auto report = solve_stability_indices(m, model, split);
      ASSERT_LT(report.objective, static_cast<double>(report.options.size()));
      BoundsOptions freed;
      BoundsOptions pinned;
      pinned.pin_nonlabor = true;
      const BoundsReport a = compute_bounds(m, report, freed);
      const BoundsReport b = compute_bounds(m, report, pinned);
      for (std::size_t c = 0; c < a.couples.size(); ++c) {
        EXPECT_TRUE(a.couples[c].private_share.within(a.couples[c].naive_private_share, kTol));
        EXPECT_TRUE(a.couples[c].sharing_rule.within(a.couples[c].naive_sharing_rule, kTol));
        // Pinning the splits only removes freedom.
        EXPECT_TRUE(b.couples[c].private_share.within(a.couples[c].private_share, kTol));
        EXPECT_TRUE(b.couples[c].sharing_rule.within(a.couples[c].sharing_rule, kTol));
      }
    }
  }
}

TEST(Bounds, EnlargingConsiderationShrinksIntervals) {
  auto syn = oracle::generate_stable_market(9, 6, 2, ModelKind::joint_custody(), {.consider = false});
  MarriageMarket m = syn.market;
  std::vector<std::pair<std::string, std::string>> candidates;
  for (const Agent& a : m.agents)
    for (const Agent& b : m.agents)
      if (a.gender == Gender::Male && b.gender == Gender::Female && a.spouse_id != b.id && (a.married() || b.married()))
        candidates.emplace_back(a.id, b.id);
  std::shuffle(candidates.begin(), candidates.end(), std::mt19937_64(9));

  auto previous = bound_private_share(m, ModelKind::joint_custody());
  auto previous_rule = bound_sharing_rule(m, ModelKind::joint_custody());
  for (std::size_t step = 0; step < 6; ++step) {
    m.consideration[candidates[step].first].push_back(candidates[step].second);
    m.consideration[candidates[step].second].push_back(candidates[step].first);
    const auto now = bound_private_share(m, ModelKind::joint_custody());
    const auto now_rule = bound_sharing_rule(m, ModelKind::joint_custody());
    for (std::size_t c = 0; c < now.size(); ++c) {
      EXPECT_TRUE(now[c].interval.within(previous[c].interval, kTol)) << step;
      EXPECT_TRUE(now_rule[c].interval.within(previous_rule[c].interval, kTol)) << step;
    }
    previous = now;
    previous_rule = now_rule;
  }
}

TEST(Bounds, ParallelMatchesSequential) {
  const auto syn = oracle::generate_stable_market(14, 10, 3, ModelKind::sole_custody());
  BoundsOptions one;
  BoundsOptions many;
  many.jobs = 4;
  EXPECT_EQ(bound_sharing_rule(syn.market, ModelKind::sole_custody(), one),
            bound_sharing_rule(syn.market, ModelKind::sole_custody(), many));
}
