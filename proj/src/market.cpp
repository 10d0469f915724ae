#include "stablehh/market.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stablehh/errors.hpp"

namespace stablehh {

std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

Gender parse_gender(std::string_view text) {
  if (text == "male" || text == "m" || text == "M") return Gender::Male;
  if (text == "female" || text == "f" || text == "F") return Gender::Female;
  throw InvalidInput("unknown gender '" + std::string(text) + "'");
}

std::string to_string(const OptionKey& key) {
  return "(" + (key.male.empty() ? std::string("-") : key.male) + "," +
         (key.female.empty() ? std::string("-") : key.female) + ")";
}

double PriceIncomeGrid::nonlabor_of(const std::string& household_id) const {
  auto it = nonlabor.find(household_id);
  return it == nonlabor.end() ? 0.0 : it->second;
}

double PriceIncomeGrid::child_price_of(const std::string& household_id) const {
  auto it = child_price.find(household_id);
  return it == child_price.end() ? 1.0 : it->second;
}

double ChildSupportSchedule::fraction(int n_children) const {
  if (n_children <= 0 || tiers.empty()) return 0.0;
  // Highest tier not above n_children; the last tier covers larger families.
  auto it = tiers.upper_bound(n_children);
  if (it == tiers.begin()) return 0.0;
  return std::prev(it)->second;
}

std::string_view to_string(Regime r) { return r == Regime::JointCustody ? "jc" : "spc"; }

Regime parse_regime(std::string_view text) {
  if (text == "jc") return Regime::JointCustody;
  if (text == "spc") return Regime::SoleCustody;
  throw InvalidInput("unknown model '" + std::string(text) + "' (expected jc or spc)");
}

ModelKind ModelKind::make(Regime regime, bool binding) {
  if (binding && regime != Regime::SoleCustody)
    throw ModelMismatch("binding minimal transfers are only defined under sole custody");
  return ModelKind(regime, binding);
}

MarketIndex::MarketIndex(const MarriageMarket& market) : market_(&market) {
  for (std::size_t i = 0; i < market.agents.size(); ++i) agent_pos_.emplace(market.agents[i].id, i);
  for (std::size_t i = 0; i < market.households.size(); ++i) {
    const Household& h = market.households[i];
    household_pos_.emplace(h.id, i);
    if (h.male_id) household_of_agent_.emplace(*h.male_id, i);
    if (h.female_id) household_of_agent_.emplace(*h.female_id, i);
  }
  for (const auto& [id, pos] : household_pos_) {
    if (market.households[pos].is_couple()) couples_.push_back(&market.households[pos]);
  }
}

const Agent* MarketIndex::find_agent(const std::string& id) const {
  auto it = agent_pos_.find(id);
  return it == agent_pos_.end() ? nullptr : &market_->agents[it->second];
}

const Agent& MarketIndex::agent(const std::string& id) const {
  const Agent* a = find_agent(id);
  if (!a) throw InvalidInput("unknown agent '" + id + "'");
  return *a;
}

const Household* MarketIndex::household_of(const std::string& agent_id) const {
  auto it = household_of_agent_.find(agent_id);
  return it == household_of_agent_.end() ? nullptr : &market_->households[it->second];
}

const Household& MarketIndex::household(const std::string& household_id) const {
  auto it = household_pos_.find(household_id);
  if (it == household_pos_.end()) throw InvalidInput("unknown household '" + household_id + "'");
  return market_->households[it->second];
}

OptionPricing MarketIndex::pricing(const OptionKey& key) const {
  auto it = market_->grid.options.find(key);
  if (it != market_->grid.options.end()) return it->second;
  OptionPricing p;
  if (!key.male.empty()) p.y_labor += agent(key.male).potential_labor_income();
  if (!key.female.empty()) p.y_labor += agent(key.female).potential_labor_income();
  return p;
}

std::vector<ExitOption> exit_options(const MarriageMarket& market) {
  MarketIndex index(market);
  std::vector<std::string> ids;
  ids.reserve(market.agents.size());
  for (const Agent& a : market.agents) ids.push_back(a.id);
  std::sort(ids.begin(), ids.end());

  std::vector<ExitOption> out;
  for (const std::string& id : ids) {
    const Agent& a = index.agent(id);
    if (a.married() && a.gender == Gender::Male) out.push_back({{a.id, ""}, OptionKind::MaleAlone});
  }
  for (const std::string& id : ids) {
    const Agent& a = index.agent(id);
    if (a.married() && a.gender == Gender::Female) out.push_back({{"", a.id}, OptionKind::FemaleAlone});
  }

  std::set<OptionKey> pairs;
  for (const auto& [owner, considered] : market.consideration) {
    const Agent* a = index.find_agent(owner);
    if (!a) continue;
    for (const std::string& other_id : considered) {
      const Agent* b = index.find_agent(other_id);
      if (!b || b->gender == a->gender) continue;
      const Agent& m = a->gender == Gender::Male ? *a : *b;
      const Agent& w = a->gender == Gender::Male ? *b : *a;
      if (!m.married() && !w.married()) continue;
      if (m.spouse_id && *m.spouse_id == w.id) continue;
      pairs.insert({m.id, w.id});
    }
  }
  for (const OptionKey& key : pairs) out.push_back({key, OptionKind::Pair});
  return out;
}

bool option_belongs_to(const ExitOption& option, const Household& couple) {
  return (couple.male_id && option.key.male == *couple.male_id) ||
         (couple.female_id && option.key.female == *couple.female_id);
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::UnknownSpouse: return "UnknownSpouse";
    case ViolationKind::MatchingAsymmetry: return "MatchingAsymmetry";
    case ViolationKind::SameGenderCouple: return "SameGenderCouple";
    case ViolationKind::HouseholdMembership: return "HouseholdMembership";
    case ViolationKind::ChildCountMismatch: return "ChildCountMismatch";
    case ViolationKind::ChildSplitMismatch: return "ChildSplitMismatch";
    case ViolationKind::NegativeValue: return "NegativeValue";
    case ViolationKind::AssignableExceedsPrivate: return "AssignableExceedsPrivate";
    case ViolationKind::WorkHoursOutOfRange: return "WorkHoursOutOfRange";
    case ViolationKind::AgeOutOfRange: return "AgeOutOfRange";
    case ViolationKind::SpouseConsidered: return "SpouseConsidered";
    case ViolationKind::ConsiderationGender: return "ConsiderationGender";
    case ViolationKind::UnknownConsideredAgent: return "UnknownConsideredAgent";
    case ViolationKind::NonPositivePrice: return "NonPositivePrice";
    case ViolationKind::RegionMismatch: return "RegionMismatch";
    case ViolationKind::InvalidNonlaborBand: return "InvalidNonlaborBand";
  }
  return "Unknown";
}

std::string to_string(const Violation& v) {
  std::string out(to_string(v.kind));
  out += "(" + v.subject;
  if (!v.other.empty()) out += "," + v.other;
  out += ")";
  if (!v.detail.empty()) out += ": " + v.detail;
  return out;
}

namespace {

class Validator {
 public:
  explicit Validator(const MarriageMarket& market) : market_(market), index_(market) {}

  std::vector<Violation> run() {
    check_ids();
    check_agents();
    check_matching();
    check_households();
    check_consideration();
    check_grid();
    return std::move(out_);
  }

 private:
  void add(ViolationKind kind, std::string subject, std::string other = {}, std::string detail = {}) {
    out_.push_back({kind, std::move(subject), std::move(other), std::move(detail)});
  }

  void check_ids() {
    std::set<std::string> seen;
    for (const Agent& a : market_.agents)
      if (!seen.insert(a.id).second) add(ViolationKind::DuplicateId, a.id, {}, "agent");
    seen.clear();
    for (const Household& h : market_.households)
      if (!seen.insert(h.id).second) add(ViolationKind::DuplicateId, h.id, {}, "household");
  }

  void check_agents() {
    for (const Agent& a : market_.agents) {
      if (a.work_hours < 10.0 || a.work_hours > kWeeklyHours)
        add(ViolationKind::WorkHoursOutOfRange, a.id, {}, std::to_string(a.work_hours));
      if (a.age < 25.0 || a.age > 65.0) add(ViolationKind::AgeOutOfRange, a.id, {}, std::to_string(a.age));
      if (a.wage < 0.0) add(ViolationKind::NegativeValue, a.id, {}, "wage");
      if (a.n_children < 0) add(ViolationKind::NegativeValue, a.id, {}, "n_children");
      if (!market_.region.empty() && a.region != market_.region)
        add(ViolationKind::RegionMismatch, a.id, {}, a.region + " vs " + market_.region);
    }
  }

  void check_matching() {
    for (const Agent& a : market_.agents) {
      if (!a.spouse_id) continue;
      const Agent* s = index_.find_agent(*a.spouse_id);
      if (!s) {
        add(ViolationKind::UnknownSpouse, a.id, *a.spouse_id);
        continue;
      }
      const std::string& m = a.gender == Gender::Male ? a.id : s->id;
      const std::string& w = a.gender == Gender::Male ? s->id : a.id;
      if (s->gender == a.gender) {
        if (a.id < s->id) add(ViolationKind::SameGenderCouple, a.id, s->id);
        continue;
      }
      if (!s->spouse_id || *s->spouse_id != a.id) add(ViolationKind::MatchingAsymmetry, m, w);
      if (s->spouse_id && *s->spouse_id == a.id && a.gender == Gender::Male && s->n_children != a.n_children)
        add(ViolationKind::ChildCountMismatch, m, w);
    }
  }

  void check_households() {
    std::map<std::string, int> membership;
    for (const Household& h : market_.households) {
      const Agent* m = h.male_id ? index_.find_agent(*h.male_id) : nullptr;
      const Agent* w = h.female_id ? index_.find_agent(*h.female_id) : nullptr;
      if ((h.male_id && !m) || (h.female_id && !w) || (!h.male_id && !h.female_id)) {
        add(ViolationKind::HouseholdMembership, h.id, {}, "unknown or missing member");
      }
      if (m && m->gender != Gender::Male) add(ViolationKind::HouseholdMembership, h.id, m->id, "male slot");
      if (w && w->gender != Gender::Female) add(ViolationKind::HouseholdMembership, h.id, w->id, "female slot");
      if (m && w && m->spouse_id != w->id && w->spouse_id != m->id) {
        add(ViolationKind::HouseholdMembership, h.id, {}, "members are not spouses");
      }
      if (!h.is_couple()) {
        const Agent* single = m ? m : w;
        if (single && single->married()) add(ViolationKind::HouseholdMembership, h.id, single->id, "married agent alone");
      }
      if (h.male_id) ++membership[*h.male_id];
      if (h.female_id) ++membership[*h.female_id];
      check_bundle(h);
    }
    for (const Agent& a : market_.agents) {
      int count = membership.count(a.id) ? membership[a.id] : 0;
      if (count != 1) add(ViolationKind::HouseholdMembership, a.id, {}, "agent in " + std::to_string(count) + " households");
    }
  }

  void check_bundle(const Household& h) {
    const HouseholdBundle& b = h.bundle;
    auto nonneg = [&](double v, const char* field) {
      if (v < 0.0 || std::isnan(v)) add(ViolationKind::NegativeValue, h.id, {}, field);
    };
    nonneg(h.total_expenditure, "total_expenditure");
    nonneg(b.leisure_m, "leisure_m");
    nonneg(b.leisure_w, "leisure_w");
    nonneg(b.private_total, "q_priv");
    nonneg(b.public_total, "Q_pub");
    if (b.assignable_m) nonneg(*b.assignable_m, "q_priv_assign_m");
    if (b.assignable_w) nonneg(*b.assignable_w, "q_priv_assign_w");
    if (b.child_daily) nonneg(*b.child_daily, "child_daily_k");
    if (b.child_big) nonneg(*b.child_big, "child_big_K");
    if (b.child_total) nonneg(*b.child_total, "child_total_C");
    if (b.child_daily && b.child_big && b.child_total) {
      double sum = *b.child_daily + *b.child_big;
      if (std::abs(sum - *b.child_total) > 1e-9 * std::max(1.0, std::abs(*b.child_total)))
        add(ViolationKind::ChildSplitMismatch, h.id);
    }
    double assigned = b.assignable_m.value_or(0.0) + b.assignable_w.value_or(0.0);
    if (assigned > b.private_total * (1.0 + 1e-12) + 1e-12) add(ViolationKind::AssignableExceedsPrivate, h.id);
  }

  void check_consideration() {
    for (const auto& [owner, considered] : market_.consideration) {
      const Agent* a = index_.find_agent(owner);
      if (!a) {
        add(ViolationKind::UnknownConsideredAgent, owner);
        continue;
      }
      for (const std::string& other : considered) {
        const Agent* b = index_.find_agent(other);
        if (!b) {
          add(ViolationKind::UnknownConsideredAgent, owner, other);
        } else if (b->gender == a->gender) {
          add(ViolationKind::ConsiderationGender, owner, other);
        } else if (a->spouse_id && *a->spouse_id == other) {
          add(ViolationKind::SpouseConsidered, owner, other);
        }
      }
    }
  }

  void check_grid() {
    const PriceIncomeGrid& g = market_.grid;
    for (const auto& [key, p] : g.options) {
      if (!(p.private_price > 0.0) || !(p.public_price > 0.0))
        add(ViolationKind::NonPositivePrice, to_string(key));
      if (p.income_scale < 0.0) add(ViolationKind::NegativeValue, to_string(key), {}, "income_scale");
    }
    for (const auto& [id, rho] : g.child_price)
      if (!(rho > 0.0)) add(ViolationKind::NonPositivePrice, id, {}, "child price");
    const NonlaborBand& band = market_.nonlabor_band;
    if (!(band.lower >= 0.0 && band.lower <= 0.5 && band.upper >= 0.5 && band.upper <= 1.0))
      add(ViolationKind::InvalidNonlaborBand, market_.region);
  }

  const MarriageMarket& market_;
  MarketIndex index_;
  std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> validate_market(const MarriageMarket& market) { return Validator(market).run(); }

}  // namespace stablehh
