// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stablehh/cli.hpp"
#include "stablehh/identification.hpp"
#include "stablehh/ingest.hpp"
#include "stablehh/oracle.hpp"
#include "stablehh/serialization.hpp"
#include "stablehh/stability.hpp"

using namespace stablehh;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const std::vector<ModelKind>& models() {
  static const std::vector<ModelKind> m{ModelKind::joint_custody(), ModelKind::sole_custody(),
                                        ModelKind::sole_custody(true)};
  return m;
}

double index_of(const StabilityReport& r, const OptionKey& key) {
  for (const OptionIndex& o : r.options)
    if (o.option.key == key) return o.index;
  return -1.0;
}

Outcome oracle_stability() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  int markets = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t couples = 1 + (seed * 7) % 30;
    const std::size_t singles = seed % 11;
    for (ModelKind model : {ModelKind::joint_custody(), ModelKind::sole_custody()}) {
      const auto syn = oracle::generate_stable_market(seed, couples, singles, model);
      for (SplitMode split : {SplitMode::Fixed, SplitMode::Endogenous}) {
        const auto r = solve_stability_indices(syn.market, model, split);
        for (const OptionIndex& o : r.options) worst = std::max(worst, std::abs(1.0 - o.index));
        ++markets;
      }
    }
    // The largest size once per seed range.
    if (seed % 10 == 0) {
      const auto syn = oracle::generate_stable_market(seed, 30, 10, ModelKind::joint_custody());
      for (const OptionIndex& o : solve_stability_indices(syn.market, ModelKind::joint_custody(), SplitMode::Fixed).options)
        worst = std::max(worst, std::abs(1.0 - o.index));
      ++markets;
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-6 && seconds < 60.0,
          format("%d solves, max |1 - s| = %.2e (tol 1e-6), %.2f s (limit 60 s)", markets, worst, seconds)};
}

Outcome analytic_perturbation() {
  int checks = 0, failures = 0;
  double worst = 0.0;
  for (ModelKind model : models()) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto syn = oracle::generate_stable_market(seed, 1, 0, model, {.consider = false});
      const Household& h = syn.market.households.front();
      MarketIndex index(syn.market);
      const OptionKey male{*h.male_id, ""}, female{"", *h.female_id};
      const OptionKey key = index.pricing(male).y_labor >= index.pricing(female).y_labor ? male : female;
      const OptionKey other = key == male ? female : male;
      const double headroom = oracle::singlehood_headroom(syn.market, model, key);
      for (double f : {1.1, 1.25, 2.0}) {
        const auto r = solve_stability_indices(oracle::perturb_incomes(syn.market, key, f * headroom), model,
                                               SplitMode::Fixed);
        const double err = std::max(std::abs(index_of(r, key) - 1.0 / f), std::abs(index_of(r, other) - 1.0));
        worst = std::max(worst, err);
        ++checks;
        if (err > 1e-6) ++failures;
      }
    }
  }
  return {failures == 0, format("%d one-couple markets, max |s - 1/factor| = %.2e (tol 1e-6)", checks, worst)};
}

Outcome brute_force_agreement() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> factor(1.0, 2.5);
  int grid_only = 0, lp_only = 0, both = 0, neither = 0;
  for (int i = 0; i < 200; ++i) {
    const ModelKind model = models()[i % 3];
    const std::size_t couples = 1 + i % 2, singles = (i / 2) % 3;
    MarriageMarket m = oracle::generate_stable_market(1000 + i, couples, singles, model).market;
    if (i % 4 != 0) {
      const auto options = exit_options(m);
      const OptionKey key = options[rng() % options.size()].key;
      m = oracle::perturb_incomes(m, key, factor(rng));
    }
    const bool grid = oracle::brute_force_rationalizable(m, model, couples == 1 ? 21 : 9);
    const bool lp_ok = is_rationalizable(m, model);
    if (grid && !lp_ok) ++grid_only;
    else if (!grid && lp_ok) ++lp_only;
    else if (grid) ++both;
    else ++neither;
  }
  return {grid_only == 0, format("200 instances: grid-feasible/LP-infeasible %d, LP-only %d (grid resolution), "
                                 "both %d, neither %d",
                                 grid_only, lp_only, both, neither)};
}

Outcome degeneracy() {
  double worst = 0.0, loss = 0.0;
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    MarriageMarket jc = oracle::generate_stable_market(seed, 6, 3, ModelKind::joint_custody()).market;
    const auto options = exit_options(jc);
    for (int i = 0; i < 4; ++i)
      jc = oracle::perturb_incomes(jc, options[rng() % options.size()].key, 1.2 + 0.4 * i);
    MarriageMarket spc = jc;
    for (std::size_t h = 0; h < jc.households.size(); ++h) {
      HouseholdBundle& j = jc.households[h].bundle;
      j.child_big = 0.0;
      j.child_total = j.child_daily;
      HouseholdBundle& s = spc.households[h].bundle;
      s.child_total = j.child_daily;
      s.child_daily.reset();
      s.child_big.reset();
    }
    SolveOptions so;
    so.schedule = ChildSupportSchedule::none();
    const double a = solve_stability_indices(jc, ModelKind::joint_custody(), SplitMode::Fixed, so).objective;
    const double b = solve_stability_indices(spc, ModelKind::sole_custody(), SplitMode::Fixed, so).objective;
    worst = std::max(worst, std::abs(a - b));
    loss += static_cast<double>(exit_options(jc).size()) - a;
  }
  return {worst <= 1e-6, format("20 seeds, max |sum s (JC, K=0) - sum s (SPC, T=0, C=k)| = %.2e (tol 1e-6), "
                                "total index loss %.3f",
                                worst, loss)};
}

Outcome nested_truth() {
  int couples = 0, outside = 0, not_nested = 0;
  for (ModelKind model : models()) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto syn = oracle::generate_stable_market(seed, 8, 4, model);
      const auto report = solve_stability_indices(syn.market, model, SplitMode::Fixed);
      const BoundsReport b = compute_bounds(syn.market, report);
      for (std::size_t c = 0; c < b.couples.size(); ++c) {
        const CoupleBounds& cb = b.couples[c];
        const oracle::HiddenCouple& t = syn.truth.couples[c];
        ++couples;
        if (!cb.private_share.contains(t.private_share) || !cb.sharing_rule.contains(t.sharing_rule)) ++outside;
        if (!cb.private_share.within(cb.naive_private_share, 1e-9) || !cb.sharing_rule.within(cb.naive_sharing_rule, 1e-9))
          ++not_nested;
      }
    }
  }
  return {outside == 0 && not_nested == 0,
          format("%d couples: truth outside stable interval %d (no tolerance), stable not within naive %d (tol 1e-9)",
                 couples, outside, not_nested)};
}

Outcome ingest_fidelity() {
  using ingest::HouseholdType;
  const double couple[] = {0.0, 0.17, 0.28, 0.37};
  const double single[] = {0.0, 0.23, 0.37, 0.47};
  int mismatches = 0;
  for (int n = 0; n <= 3; ++n) {
    if (ingest::child_cost_share(HouseholdType::Couple, n) != couple[n]) ++mismatches;
    if (ingest::child_cost_share(HouseholdType::Single, n) != single[n]) ++mismatches;
  }
  for (double wage : {0.0, 7.25, 12.5, 31.0})
    for (double hours : {0.0, 20.0, 38.5, 60.0}) {
      Agent a;
      a.wage = wage;
      a.work_hours = hours;
      if (a.leisure() != 112.0 - hours) ++mismatches;
      if (a.potential_labor_income() != 112.0 * wage) ++mismatches;
    }
  return {mismatches == 0, format("child-cost shares, leisure and potential income: %d exact mismatches", mismatches)};
}

Outcome child_support_tiers() {
  const ChildSupportSchedule schedule;
  const double expected[] = {0.25, 0.33, 0.50, 0.50};
  int mismatches = 0;
  for (int n = 1; n <= 4; ++n) {
    Agent m;
    m.gender = Gender::Male;
    m.wage = 15.0;
    m.work_hours = 40.0;
    m.n_children = n;
    if (schedule.fraction(n) != expected[n - 1]) ++mismatches;
    if (ingest::compute_child_support(m, schedule, ModelKind::sole_custody()) != expected[n - 1] * 112.0 * 15.0)
      ++mismatches;
  }
  return {mismatches == 0, format("children 1..4 -> 25/33/50/50%% of 112 x wage: %d exact mismatches", mismatches)};
}

std::vector<std::pair<std::string, std::string>> candidate_pairs(const MarriageMarket& m, std::uint64_t seed) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Agent& a : m.agents)
    for (const Agent& b : m.agents)
      if (a.gender == Gender::Male && b.gender == Gender::Female && a.spouse_id != b.id && (a.married() || b.married()))
        out.emplace_back(a.id, b.id);
  std::shuffle(out.begin(), out.end(), std::mt19937_64(seed));
  return out;
}

void add_pair(MarriageMarket& m, const std::pair<std::string, std::string>& p) {
  m.consideration[p.first].push_back(p.second);
  m.consideration[p.second].push_back(p.first);
}

Outcome monotonicity() {
  constexpr std::size_t kSteps = 20;
  int sum_violations = 0, widenings = 0;
  double largest_rise = 0.0, loss = 0.0;
  for (ModelKind model : {ModelKind::joint_custody(), ModelKind::sole_custody()}) {
    // Indices: start from a perturbed market so that they bite.
    const auto syn = oracle::generate_stable_market(42, 6, 3, model, {.consider = false});
    MarriageMarket m = syn.market;
    std::mt19937_64 rng(42);
    for (const ExitOption& o : exit_options(m))
      if (rng() % 2) m = oracle::perturb_incomes(m, o.key, 1.0 + (rng() % 150) / 100.0);
    const auto pairs = candidate_pairs(m, 42);
    StabilityReport before = solve_stability_indices(m, model, SplitMode::Fixed);
    for (std::size_t step = 0; step < kSteps; ++step) {
      add_pair(m, pairs[step]);
      const StabilityReport after = solve_stability_indices(m, model, SplitMode::Fixed);
      double old_options = 0.0;
      for (const OptionIndex& o : before.options) old_options += index_of(after, o.option.key);
      largest_rise = std::max(largest_rise, old_options - before.objective);
      if (old_options > before.objective + 1e-7) ++sum_violations;
      before = after;
    }
    loss += static_cast<double>(before.options.size()) - before.objective;

    // Bounds: exactly rationalizable market, so stage 2 sees the raw data.
    MarriageMarket b = syn.market;
    auto share = bound_private_share(b, model);
    auto rule = bound_sharing_rule(b, model);
    for (std::size_t step = 0; step < kSteps; ++step) {
      add_pair(b, pairs[step]);
      const auto share_now = bound_private_share(b, model);
      const auto rule_now = bound_sharing_rule(b, model);
      for (std::size_t c = 0; c < share_now.size(); ++c) {
        if (!share_now[c].interval.within(share[c].interval, 1e-7)) ++widenings;
        if (!rule_now[c].interval.within(rule[c].interval, 1e-7)) ++widenings;
      }
      share = share_now;
      rule = rule_now;
    }
  }
  return {sum_violations == 0 && widenings == 0,
          format("%zu steps x 2 models: sum s over existing options rose %d times (max rise %.2e, tol 1e-7), "
                 "stable intervals widened %d times; final index loss %.3f",
                 kSteps, sum_violations, largest_rise, widenings, loss)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "stablehh_acceptance";
  fs::remove_all(root);
  const std::vector<std::string> artifacts{"ingest.json", "market.json", "truth.json", "stability.json",
                                           "stability.csv", "bounds.csv", "bounds.json", "plot.csv", "report.txt"};
  auto pipeline = [&](const fs::path& dir) {
    fs::create_directories(dir);
    auto p = [&](const std::string& f) { return (dir / f).string(); };
    const std::vector<std::vector<std::string>> steps{
        {"ingest", "--agents", std::string(STABLEHH_FIXTURES) + "/agents.csv", "--households",
         std::string(STABLEHH_FIXTURES) + "/households.csv", "--out", p("ingest.json")},
        {"synth", "--seed", "2024", "--couples", "12", "--singles", "4", "--out", p("market.json"), "--truth",
         p("truth.json")},
        {"stability", "--split", "endogenous", "--market", p("market.json"), "--out", p("stability.json"), "--csv",
         p("stability.csv")},
        {"bounds", "--market", p("market.json"), "--report", p("stability.json"), "--out", p("bounds.csv"), "--json",
         p("bounds.json"), "--emit-plot-data", p("plot.csv"), "--jobs", "2"},
        {"report", "--stability", p("stability.json"), "--bounds", p("bounds.json"), "--out", p("report.txt")}};
    for (const auto& args : steps) {
      std::ostringstream out, err;
      if (cli::run_pipeline(args, out, err) != 0) return false;
    }
    return true;
  };
  const bool ran = pipeline(root / "a") && pipeline(root / "b");
  int differing = 0;
  if (ran)
    for (const std::string& f : artifacts)
      if (io::read_file(root / "a" / f) != io::read_file(root / "b" / f)) ++differing;
  fs::remove_all(root);
  return {ran && differing == 0,
          ran ? format("%zu artifacts from two pipeline runs, %d differ", artifacts.size(), differing)
              : std::string("pipeline step failed")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 oracle stability", oracle_stability},
      {"AC2 analytic perturbation", analytic_perturbation},
      {"AC3 brute-force agreement", brute_force_agreement},
      {"AC4 JC/SPC degeneracy", degeneracy},
      {"AC5 nestedness and truth containment", nested_truth},
      {"AC6 ingest fidelity", ingest_fidelity},
      {"AC7 child-support tiers", child_support_tiers},
      {"AC8 monotonicity", monotonicity},
      {"AC9 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
