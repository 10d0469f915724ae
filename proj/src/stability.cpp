#include "stablehh/stability.hpp"

#include <algorithm>
#include <cmath>

#include "stablehh/errors.hpp"

namespace stablehh {

using lp::Sense;
using lp::Term;
using lp::VarId;

std::string_view to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::Fixed: return "fixed";
    case SplitMode::Endogenous: return "endogenous";
    case SplitMode::Pinned: return "pinned";
  }
  return "fixed";
}

SplitMode parse_split_mode(std::string_view text) {
  if (text == "fixed") return SplitMode::Fixed;
  if (text == "endogenous") return SplitMode::Endogenous;
  if (text == "pinned") return SplitMode::Pinned;
  throw InvalidInput("unknown split mode '" + std::string(text) + "' (expected fixed or endogenous)");
}

double AffineForm::evaluate(std::span<const double> values) const {
  double v = constant;
  for (const Term& t : terms) v += t.coef * values[t.var.index];
  return v;
}

double default_currency_unit(const MarriageMarket& market) {
  MarketIndex index(market);
  double unit = 0.0;
  for (const Household& h : market.households) {
    const HouseholdBundle& b = h.bundle;
    double full = b.private_total + b.public_total;
    if (b.child_total) full += *b.child_total;
    else full += b.child_daily.value_or(0.0) + b.child_big.value_or(0.0);
    if (h.male_id) full += index.agent(*h.male_id).wage * b.leisure_m;
    if (h.female_id) full += index.agent(*h.female_id).wage * b.leisure_w;
    unit = std::max(unit, full);
  }
  return unit > 0.0 ? unit : 1.0;
}

namespace {

class Builder {
 public:
  Builder(const MarriageMarket& market, ModelKind model, const ConstraintOptions& options)
      : market_(market), index_(market), model_(model), options_(options) {
    unit_ = options.currency_unit > 0.0 ? options.currency_unit : default_currency_unit(market);
    inv_ = 1.0 / unit_;
  }

  StabilitySystem build() {
    check_inputs();
    StabilitySystem sys;
    sys.currency_unit = unit_;
    sys.model = model_;
    sys.options = options_;
    for (const Household* h : index_.couples()) add_couple(sys, *h);
    for (const ExitOption& option : exit_options(market_)) add_option(sys, option);
    return sys;
  }

 private:
  struct CoupleState {
    const Household* household;
    std::size_t vars;  // position in AllocationVariables::couples
    double even_nonlabor_m, even_nonlabor_w;
    AffineForm nonlabor_m, nonlabor_w;
  };

  void check_inputs() const {
    for (const Household& h : market_.households) {
      if (model_.is_joint()) {
        if (!h.bundle.has_joint_custody_split())
          throw ModelMismatch("household " + h.id + " lacks the daily/big-decision children split required under joint custody");
      } else if (!h.bundle.child_total) {
        throw ModelMismatch("household " + h.id + " lacks total children's consumption required under sole custody");
      }
    }
    if (!model_.is_joint() && options_.custodian != Gender::Female)
      throw Unsupported("sole custody is implemented for female custodians only");
    if (options_.split == SplitMode::Pinned) {
      for (const Household* h : index_.couples())
        if (!options_.pinned.count(h->id)) throw InvalidInput("no pinned non-labor split for household " + h->id);
    }
  }

  void add_couple(StabilitySystem& sys, const Household& h) {
    lp::LinearProgram& prog = sys.program;
    const HouseholdBundle& b = h.bundle;
    const double q = b.private_total * inv_;
    const double assign_m = b.assignable_m.value_or(0.0) * inv_;
    const double assign_w = b.assignable_w.value_or(0.0) * inv_;
    if (assign_m + assign_w > q * (1.0 + 1e-12) + 1e-15)
      throw InvalidInput("household " + h.id + ": assignable private consumption exceeds the private total");

    CoupleVariables cv;
    cv.household_id = h.id;
    cv.private_m = prog.add_variable("q_m:" + h.id, assign_m, std::max(assign_m, q - assign_w));
    cv.private_w = prog.add_variable("q_w:" + h.id, assign_w, std::max(assign_w, q - assign_m));
    prog.add_constraint("add_q:" + h.id, {{cv.private_m, 1.0}, {cv.private_w, 1.0}}, Sense::Equal, q);
    if (model_.is_joint()) {
      const double rho = market_.grid.child_price_of(h.id);
      cv.child_price_m = prog.add_variable("rho_m:" + h.id, 0.0, rho);
      cv.child_price_w = prog.add_variable("rho_w:" + h.id, 0.0, rho);
      prog.add_constraint("add_rho:" + h.id, {{*cv.child_price_m, 1.0}, {*cv.child_price_w, 1.0}}, Sense::Equal, rho);
    }

    CoupleState st{&h, sys.vars.couples.size(), 0, 0, {}, {}};
    const double nonlabor = market_.grid.nonlabor_of(h.id) * inv_;
    st.even_nonlabor_m = st.even_nonlabor_w = nonlabor / 2.0;
    switch (options_.split) {
      case SplitMode::Fixed:
        st.nonlabor_m.constant = st.nonlabor_w.constant = nonlabor / 2.0;
        break;
      case SplitMode::Pinned: {
        const NonlaborSplit& pin = options_.pinned.at(h.id);
        st.nonlabor_m.constant = pin.male * inv_;
        st.nonlabor_w.constant = pin.female * inv_;
        break;
      }
      case SplitMode::Endogenous: {
        const NonlaborBand& band = market_.nonlabor_band;
        const double lo = std::min(band.lower * nonlabor, band.upper * nonlabor);
        const double hi = std::max(band.lower * nonlabor, band.upper * nonlabor);
        cv.nonlabor_m = prog.add_variable("ynl_m:" + h.id, lo, hi);
        cv.nonlabor_w = prog.add_variable("ynl_w:" + h.id, lo, hi);
        prog.add_constraint("add_ynl:" + h.id, {{*cv.nonlabor_m, 1.0}, {*cv.nonlabor_w, 1.0}}, Sense::Equal, nonlabor);
        st.nonlabor_m.terms = {{*cv.nonlabor_m, 1.0}};
        st.nonlabor_w.terms = {{*cv.nonlabor_w, 1.0}};
        break;
      }
    }
    sys.vars.couples.push_back(std::move(cv));
    couples_.emplace(h.id, std::move(st));
  }

  const CoupleState* couple_of(const std::string& agent_id) const {
    const Household* h = index_.household_of(agent_id);
    if (!h || !h->is_couple()) return nullptr;
    return &couples_.at(h->id);
  }

  // Non-labor income an agent brings into an exit option.
  void add_nonlabor(AffineForm& form, double& even, const std::string& agent_id, Gender g, double scale) const {
    if (agent_id.empty()) return;
    if (const CoupleState* c = couple_of(agent_id)) {
      const AffineForm& part = g == Gender::Male ? c->nonlabor_m : c->nonlabor_w;
      form.constant += scale * part.constant;
      for (const Term& t : part.terms) form.terms.push_back({t.var, scale * t.coef});
      even += scale * (g == Gender::Male ? c->even_nonlabor_m : c->even_nonlabor_w);
    } else {
      const Household* h = index_.household_of(agent_id);
      const double v = scale * market_.grid.nonlabor_of(h->id) * inv_;
      form.constant += v;
      even += v;
    }
  }

  // Minimum child support owed by the current husband of `female_id`.
  double transfer_to(const std::string& female_id) const {
    if (model_.is_joint() || female_id.empty()) return 0.0;
    const Agent& w = index_.agent(female_id);
    if (!w.spouse_id) return 0.0;
    return transfer_from(*w.spouse_id);
  }

  double transfer_from(const std::string& male_id) const {
    if (model_.is_joint() || male_id.empty()) return 0.0;
    const Agent& m = index_.agent(male_id);
    if (!m.spouse_id) return 0.0;
    return options_.schedule.amount(m.n_children, m.potential_labor_income()) * inv_;
  }

  // Value of the agent's current private bundle at the option's private price:
  // own leisure at the own wage plus the Hicksian private good.
  void add_private(AffineForm& rhs, const std::string& agent_id, Gender g, double private_price) const {
    const Agent& a = index_.agent(agent_id);
    const Household& h = *index_.household_of(agent_id);
    const double leisure = g == Gender::Male ? h.bundle.leisure_m : h.bundle.leisure_w;
    rhs.constant += a.wage * leisure * inv_;
    if (const CoupleState* c = couple_of(agent_id)) {
      const CoupleVariables& cv = sys_couples_->at(c->vars);
      rhs.terms.push_back({g == Gender::Male ? cv.private_m : cv.private_w, private_price});
    } else {
      rhs.constant += private_price * h.bundle.private_total * inv_;
    }
  }

  // Children's consumption valued from the agent's side of the current match.
  void add_children(AffineForm& rhs, const std::string& agent_id, Gender g) const {
    const Household& h = *index_.household_of(agent_id);
    const HouseholdBundle& b = h.bundle;
    if (!model_.is_joint()) {
      rhs.constant += *b.child_total * inv_;
      return;
    }
    rhs.constant += *b.child_daily * inv_;
    if (const CoupleState* c = couple_of(agent_id)) {
      const CoupleVariables& cv = sys_couples_->at(c->vars);
      rhs.terms.push_back({g == Gender::Male ? *cv.child_price_m : *cv.child_price_w, *b.child_big * inv_});
    } else {
      rhs.constant += market_.grid.child_price_of(h.id) * *b.child_big * inv_;
    }
  }

  void add_option(StabilitySystem& sys, const ExitOption& option) {
    sys_couples_ = &sys.vars.couples;
    lp::LinearProgram& prog = sys.program;
    const OptionKey& key = option.key;
    const OptionPricing pricing = index_.pricing(key);

    OptionRow row;
    row.option = option;
    row.income.constant = pricing.income_scale * pricing.y_labor * inv_;
    row.even_split_income = row.income.constant;
    add_nonlabor(row.income, row.even_split_income, key.male, Gender::Male, pricing.income_scale);
    add_nonlabor(row.income, row.even_split_income, key.female, Gender::Female, pricing.income_scale);

    AffineForm rhs;
    std::string name;
    switch (option.kind) {
      case OptionKind::MaleAlone: {
        name = "IR_m:" + key.male;
        add_private(rhs, key.male, Gender::Male, pricing.private_price);
        rhs.constant += pricing.public_price * index_.household_of(key.male)->bundle.public_total * inv_;
        add_children(rhs, key.male, Gender::Male);
        if (model_.binding()) row.transfer -= transfer_from(key.male);
        break;
      }
      case OptionKind::FemaleAlone: {
        name = "IR_w:" + key.female;
        add_private(rhs, key.female, Gender::Female, pricing.private_price);
        rhs.constant += pricing.public_price * index_.household_of(key.female)->bundle.public_total * inv_;
        add_children(rhs, key.female, Gender::Female);
        row.transfer += transfer_to(key.female);
        break;
      }
      case OptionKind::Pair: {
        name = "NBP:" + key.male + "," + key.female;
        PairVariables pv;
        pv.key = key;
        const std::string tag = key.male + "," + key.female;
        pv.public_price_m = prog.add_variable("P_m:" + tag, 0.0, pricing.public_price);
        pv.public_price_w = prog.add_variable("P_w:" + tag, 0.0, pricing.public_price);
        prog.add_constraint("add_P:" + tag, {{pv.public_price_m, 1.0}, {pv.public_price_w, 1.0}}, Sense::Equal,
                            pricing.public_price);
        add_private(rhs, key.male, Gender::Male, pricing.private_price);
        add_private(rhs, key.female, Gender::Female, pricing.private_price);
        rhs.terms.push_back({pv.public_price_m, index_.household_of(key.male)->bundle.public_total * inv_});
        rhs.terms.push_back({pv.public_price_w, index_.household_of(key.female)->bundle.public_total * inv_});
        add_children(rhs, key.male, Gender::Male);
        add_children(rhs, key.female, Gender::Female);
        row.transfer += transfer_to(key.female);
        if (model_.binding()) row.transfer -= transfer_from(key.male);
        sys.vars.pairs.push_back(pv);
        break;
      }
    }

    // income (* s) + transfer <= rhs, moved into  terms <= constant  form.
    std::vector<Term> terms;
    for (const Term& t : rhs.terms) terms.push_back({t.var, -t.coef});
    double bound = rhs.constant - row.transfer;
    if (options_.with_indices && options_.split != SplitMode::Endogenous) {
      VarId s = prog.add_variable("s:" + tag_of(key), 0.0, 1.0);
      terms.push_back({s, row.income.constant});
      sys.vars.option_vars.push_back(s);
    } else {
      for (const Term& t : row.income.terms) terms.push_back(t);
      bound -= row.income.constant;
      if (options_.with_indices) {
        // Loss never exceeds the income it is taken from. The row form is
        // only used when the income is nonnegative over the whole band;
        // otherwise it would restrict the non-labor split itself.
        double lowest = row.income.constant, highest = row.income.constant;
        for (const Term& t : row.income.terms) {
          const lp::Variable& v = prog.variable(t.var);
          lowest += t.coef * (t.coef > 0.0 ? v.lower : v.upper);
          highest += t.coef * (t.coef > 0.0 ? v.upper : v.lower);
        }
        const bool cap_row = !row.income.is_constant() && lowest >= 0.0;
        VarId loss = prog.add_variable("L:" + tag_of(key), 0.0, cap_row ? lp::kInf : std::max(0.0, highest));
        terms.push_back({loss, -1.0});
        sys.vars.option_vars.push_back(loss);
        if (cap_row) {
          std::vector<Term> cap_terms{{loss, 1.0}};
          for (const Term& t : row.income.terms) cap_terms.push_back({t.var, -t.coef});
          prog.add_constraint("cap_L:" + tag_of(key), cap_terms, Sense::LessEqual, row.income.constant);
        }
      }
    }
    row.row = prog.add_constraint(name, std::move(terms), Sense::LessEqual, bound);
    sys.rows.push_back(std::move(row));
  }

  static std::string tag_of(const OptionKey& key) { return key.male + "," + key.female; }

  const MarriageMarket& market_;
  MarketIndex index_;
  ModelKind model_;
  const ConstraintOptions& options_;
  double unit_ = 1.0;
  double inv_ = 1.0;
  std::map<std::string, CoupleState> couples_;
  const std::vector<CoupleVariables>* sys_couples_ = nullptr;
};

}  // namespace

StabilitySystem build_jc_constraints(const MarriageMarket& market, const ConstraintOptions& options) {
  return Builder(market, ModelKind::joint_custody(), options).build();
}

StabilitySystem build_spc_constraints(const MarriageMarket& market, const ConstraintOptions& options, bool binding) {
  return Builder(market, ModelKind::sole_custody(binding), options).build();
}

StabilitySystem build_constraints(const MarriageMarket& market, ModelKind model, const ConstraintOptions& options) {
  return model.is_joint() ? build_jc_constraints(market, options)
                          : build_spc_constraints(market, options, model.binding());
}

Allocation extract_allocation(const StabilitySystem& sys, std::span<const double> values) {
  Allocation out;
  const double unit = sys.currency_unit;
  std::map<std::string, std::pair<std::string, std::string>> members;
  for (const CoupleVariables& cv : sys.vars.couples) {
    CoupleAllocation ca;
    ca.household_id = cv.household_id;
    ca.private_m = values[cv.private_m.index] * unit;
    ca.private_w = values[cv.private_w.index] * unit;
    if (cv.child_price_m) ca.child_price_m = values[cv.child_price_m->index];
    if (cv.child_price_w) ca.child_price_w = values[cv.child_price_w->index];
    out.couples.push_back(std::move(ca));
  }
  for (const PairVariables& pv : sys.vars.pairs)
    out.pairs.push_back({pv.key, values[pv.public_price_m.index], values[pv.public_price_w.index]});
  return out;
}

std::vector<double> allocation_point(const StabilitySystem& sys, const Allocation& allocation) {
  std::vector<double> x(sys.program.num_variables(), 0.0);
  const double inv = 1.0 / sys.currency_unit;
  std::map<std::string, const CoupleAllocation*> by_id;
  for (const CoupleAllocation& ca : allocation.couples) by_id[ca.household_id] = &ca;
  for (const CoupleVariables& cv : sys.vars.couples) {
    auto it = by_id.find(cv.household_id);
    if (it == by_id.end()) throw InvalidInput("allocation has no entry for household " + cv.household_id);
    const CoupleAllocation& ca = *it->second;
    x[cv.private_m.index] = ca.private_m * inv;
    x[cv.private_w.index] = ca.private_w * inv;
    if (cv.child_price_m) x[cv.child_price_m->index] = ca.child_price_m.value_or(0.0);
    if (cv.child_price_w) x[cv.child_price_w->index] = ca.child_price_w.value_or(0.0);
    if (cv.nonlabor_m) x[cv.nonlabor_m->index] = ca.nonlabor_m * inv;
    if (cv.nonlabor_w) x[cv.nonlabor_w->index] = ca.nonlabor_w * inv;
  }
  std::map<OptionKey, const PairAllocation*> pairs;
  for (const PairAllocation& pa : allocation.pairs) pairs[pa.key] = &pa;
  for (const PairVariables& pv : sys.vars.pairs) {
    auto it = pairs.find(pv.key);
    if (it == pairs.end()) throw InvalidInput("allocation has no public prices for pair " + to_string(pv.key));
    x[pv.public_price_m.index] = it->second->public_price_m;
    x[pv.public_price_w.index] = it->second->public_price_w;
  }
  const bool losses = sys.options.split == SplitMode::Endogenous;
  for (VarId v : sys.vars.option_vars) x[v.index] = losses ? 0.0 : 1.0;
  return x;
}

namespace {

void fill_nonlabor(const StabilitySystem& sys, const MarriageMarket& market, std::span<const double> values,
                   Allocation& allocation) {
  MarketIndex index(market);
  for (std::size_t c = 0; c < sys.vars.couples.size(); ++c) {
    const CoupleVariables& cv = sys.vars.couples[c];
    CoupleAllocation& ca = allocation.couples[c];
    const Household& h = index.household(cv.household_id);
    ca.male_id = *h.male_id;
    ca.female_id = *h.female_id;
    const double nonlabor = market.grid.nonlabor_of(h.id);
    switch (sys.options.split) {
      case SplitMode::Fixed:
        ca.nonlabor_m = ca.nonlabor_w = nonlabor / 2.0;
        break;
      case SplitMode::Pinned:
        ca.nonlabor_m = sys.options.pinned.at(h.id).male;
        ca.nonlabor_w = sys.options.pinned.at(h.id).female;
        break;
      case SplitMode::Endogenous:
        ca.nonlabor_m = values[cv.nonlabor_m->index] * sys.currency_unit;
        ca.nonlabor_w = nonlabor - ca.nonlabor_m;
        break;
    }
  }
}

}  // namespace

StabilityReport solve_stability_indices(const MarriageMarket& market, ModelKind model, SplitMode split,
                                        const SolveOptions& options) {
  ConstraintOptions co;
  co.with_indices = true;
  co.split = split;
  co.schedule = options.schedule;
  co.currency_unit = options.currency_unit;
  if (split == SplitMode::Pinned) throw InvalidInput("index computation needs a fixed or endogenous split");
  StabilitySystem sys = build_constraints(market, model, co);

  std::vector<Term> objective;
  const bool losses = split == SplitMode::Endogenous;
  for (std::size_t i = 0; i < sys.rows.size(); ++i) {
    double weight = 1.0;
    if (losses) weight = 1.0 / std::max(sys.rows[i].even_split_income, 0.01);
    objective.push_back({sys.vars.option_vars[i], weight});
  }
  sys.program.set_objective(std::move(objective), losses ? lp::Direction::Minimize : lp::Direction::Maximize);

  const lp::Solution sol = options.backend ? options.backend->solve(sys.program) : lp::solve(sys.program);
  if (sol.status != lp::Status::Optimal)
    throw ModelError("stability program for region " + market.region + " is " +
                     std::string(lp::to_string(sol.status)) +
                     " even with free indices; transfers exceed the custodian's household resources");

  StabilityReport report;
  report.region = market.region;
  report.model = model;
  report.split = split;
  report.max_residual = sol.max_residual;
  report.allocation = extract_allocation(sys, sol.values);
  fill_nonlabor(sys, market, sol.values, report.allocation);

  for (std::size_t i = 0; i < sys.rows.size(); ++i) {
    const OptionRow& row = sys.rows[i];
    const double income = row.income.evaluate(sol.values);
    const double v = sol.values[sys.vars.option_vars[i].index];
    OptionIndex oi;
    oi.option = row.option;
    oi.income = income * sys.currency_unit;
    if (losses) {
      oi.index = income > 0.0 ? std::clamp(1.0 - v / income, 0.0, 1.0) : 1.0;
    } else {
      oi.index = std::clamp(v, 0.0, 1.0);
    }
    oi.loss = (1.0 - oi.index) * oi.income;
    report.objective += oi.index;
    report.options.push_back(std::move(oi));
  }
  // Only the all-ones vector is certainly the unique optimum.
  report.indices_unique = std::all_of(report.options.begin(), report.options.end(),
                                      [](const OptionIndex& o) { return o.index >= 1.0 - 1e-9; });
  report.couples = summarize(report);
  return report;
}

std::vector<CoupleSummary> summarize(const StabilityReport& report) {
  std::vector<CoupleSummary> out;
  for (const CoupleAllocation& ca : report.allocation.couples) {
    Household h;
    h.id = ca.household_id;
    h.male_id = ca.male_id;
    h.female_id = ca.female_id;
    CoupleSummary cs;
    cs.household_id = ca.household_id;
    double sum = 0.0;
    for (const OptionIndex& oi : report.options) {
      if (!option_belongs_to(oi.option, h)) continue;
      sum += oi.index;
      cs.minimum_index = std::min(cs.minimum_index, oi.index);
      ++cs.options;
    }
    cs.average_index = cs.options ? sum / static_cast<double>(cs.options) : 1.0;
    out.push_back(std::move(cs));
  }
  return out;
}

std::map<std::string, NonlaborSplit> recorded_splits(const StabilityReport& report) {
  std::map<std::string, NonlaborSplit> out;
  for (const CoupleAllocation& ca : report.allocation.couples) out[ca.household_id] = {ca.nonlabor_m, ca.nonlabor_w};
  return out;
}

PriceIncomeGrid adjust_incomes(const MarriageMarket& market, const StabilityReport& report,
                               const SolveOptions& options) {
  MarketIndex index(market);
  PriceIncomeGrid grid = market.grid;
  for (const OptionIndex& oi : report.options) {
    OptionPricing p = index.pricing(oi.option.key);
    p.income_scale *= oi.index;
    grid.options[oi.option.key] = p;
  }

  MarriageMarket adjusted = market;
  adjusted.grid = grid;
  ConstraintOptions co;
  co.with_indices = false;
  co.split = SplitMode::Pinned;
  co.pinned = recorded_splits(report);
  co.schedule = options.schedule;
  co.currency_unit = options.currency_unit;
  StabilitySystem sys = build_constraints(adjusted, report.model, co);
  const std::vector<double> point = allocation_point(sys, report.allocation);
  const double residual = lp::scaled_residual(sys.program, point);
  if (residual > 1e-7)
    throw AdjustmentError("adjusted incomes of region " + market.region +
                          " are not rationalized by the recorded allocation (residual " + std::to_string(residual) + ")");
  return grid;
}

MarriageMarket adjusted_market(const MarriageMarket& market, const StabilityReport& report,
                               const SolveOptions& options) {
  MarriageMarket out = market;
  out.grid = adjust_incomes(market, report, options);
  return out;
}

bool is_rationalizable(const MarriageMarket& market, ModelKind model, const SolveOptions& options) {
  ConstraintOptions co;
  co.with_indices = false;
  co.split = SplitMode::Endogenous;
  co.schedule = options.schedule;
  co.currency_unit = options.currency_unit;
  StabilitySystem sys = build_constraints(market, model, co);
  const lp::Solution sol = options.backend ? options.backend->solve(sys.program) : lp::solve(sys.program);
  return sol.optimal();
}

}  // namespace stablehh
