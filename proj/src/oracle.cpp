#include "stablehh/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "stablehh/errors.hpp"
#include "stablehh/ingest.hpp"

namespace stablehh::oracle {

namespace {

// Unknowns of one couple. His private good is q - x_w, her child price is
// rho - rho_m and her non-labor income is N - ynl_m.
struct CouplePoint {
  double x_w = 0.0;
  double rho_m = 0.0;
  double ynl_m = 0.0;
};

// One restriction written as
//   slack = constant + sum_c (a_c x_w + b_c rho_m + d_c ynl_m) + p_coef P_m,
// with P_m in [0, p_max]. It holds iff slack >= 0. Only singlehood of the
// custodial parent and pairs carry transfers; they are folded into the
// constant.
struct RowForm {
  OptionKey key;
  struct CoupleTerm {
    std::size_t couple;
    double a, b, d;
  };
  double constant = 0.0;
  std::vector<CoupleTerm> terms;
  double p_coef = 0.0;
  double p_max = 0.0;
  // Pieces kept apart for the generator.
  double rhs_constant = 0.0;  // right-hand side without the couple terms
  double income_labor = 0.0;  // scale * y_labor
  double transfer = 0.0;      // added to the income on the left
  double scale = 1.0;

  double slack(std::span<const CouplePoint> points, double p_m) const {
    double v = constant + p_coef * p_m;
    for (const CoupleTerm& t : terms) {
      const CouplePoint& c = points[t.couple];
      v += t.a * c.x_w + t.b * c.rho_m + t.d * c.ynl_m;
    }
    return v;
  }
};

struct CoupleData {
  const Household* household;
  double q, a_m, a_w;
  double rho;      // child price (joint custody)
  double nonlabor;
};

class Evaluator {
 public:
  Evaluator(const MarriageMarket& market, ModelKind model, const ChildSupportSchedule& schedule)
      : market_(market), index_(market), model_(model), schedule_(schedule) {
    for (const Household* h : index_.couples()) {
      const HouseholdBundle& b = h->bundle;
      couple_pos_[h->id] = couples_.size();
      couples_.push_back({h, b.private_total, b.assignable_m.value_or(0.0), b.assignable_w.value_or(0.0),
                          market.grid.child_price_of(h->id), market.grid.nonlabor_of(h->id)});
    }
  }

  const std::vector<CoupleData>& couples() const { return couples_; }
  const MarketIndex& index() const { return index_; }

  RowForm row(const OptionKey& key) const {
    const OptionPricing pricing = index_.pricing(key);
    RowForm r;
    r.key = key;
    r.scale = pricing.income_scale;
    r.income_labor = pricing.income_scale * pricing.y_labor;
    double lhs = r.income_labor;
    const bool pair = !key.male.empty() && !key.female.empty();
    for (const auto& [id, gender] : {std::pair{key.male, Gender::Male}, std::pair{key.female, Gender::Female}}) {
      if (id.empty()) continue;
      member(r, id, gender, pricing, pair, lhs);
    }
    const Agent* w = key.female.empty() ? nullptr : &index_.agent(key.female);
    if (!model_.is_joint() && w && w->spouse_id) r.transfer += support(*w->spouse_id);
    if (model_.binding() && !key.male.empty() && index_.agent(key.male).spouse_id) r.transfer -= support(key.male);
    if (pair) {
      // P_m Q_m + (P - P_m) Q_w
      const double q_m = index_.household_of(key.male)->bundle.public_total;
      const double q_w = index_.household_of(key.female)->bundle.public_total;
      r.rhs_constant += pricing.public_price * q_w;
      r.p_coef = q_m - q_w;
      r.p_max = pricing.public_price;
    }
    r.constant += r.rhs_constant - lhs - r.transfer;
    return r;
  }

 private:
  double support(const std::string& male_id) const {
    const Agent& m = index_.agent(male_id);
    return schedule_.amount(m.n_children, m.potential_labor_income());
  }

  void member(RowForm& r, const std::string& id, Gender g, const OptionPricing& pricing, bool pair,
              double& lhs) const {
    const Agent& a = index_.agent(id);
    const Household& h = *index_.household_of(id);
    const HouseholdBundle& b = h.bundle;
    const bool male = g == Gender::Male;
    const double p = pricing.private_price;
    r.rhs_constant += a.wage * (male ? b.leisure_m : b.leisure_w);
    if (!pair) r.rhs_constant += pricing.public_price * b.public_total;

    const auto pos = couple_pos_.find(h.id);
    if (pos == couple_pos_.end()) {
      // A single's whole bundle and non-labor income are theirs.
      r.rhs_constant += p * b.private_total;
      r.rhs_constant += model_.is_joint() ? *b.child_daily + market_.grid.child_price_of(h.id) * *b.child_big
                                          : *b.child_total;
      lhs += r.scale * market_.grid.nonlabor_of(h.id);
      return;
    }
    const CoupleData& c = couples_[pos->second];
    RowForm::CoupleTerm t{pos->second, 0.0, 0.0, 0.0};
    if (male) {
      r.rhs_constant += p * c.q;
      t.a = -p;
      t.d = -r.scale;
    } else {
      t.a = p;
      t.d = r.scale;
      lhs += r.scale * c.nonlabor;
    }
    if (model_.is_joint()) {
      r.rhs_constant += *b.child_daily;
      if (male) {
        t.b = *b.child_big;
      } else {
        r.rhs_constant += c.rho * *b.child_big;
        t.b = -*b.child_big;
      }
    } else {
      r.rhs_constant += *b.child_total;
    }
    r.terms.push_back(t);
  }

  const MarriageMarket& market_;
  MarketIndex index_;
  ModelKind model_;
  ChildSupportSchedule schedule_;
  std::vector<CoupleData> couples_;
  std::map<std::string, std::size_t> couple_pos_;
};

// Right-hand side of a row at a couple point, without the income side.
double rhs_at(const RowForm& r, std::span<const CouplePoint> points, double p_m) {
  double v = r.rhs_constant + r.p_coef * p_m;
  for (const RowForm::CoupleTerm& t : r.terms) {
    const CouplePoint& c = points[t.couple];
    // Income terms (d) belong to the left side; a and b to the right.
    v += t.a * c.x_w + t.b * c.rho_m;
  }
  return v;
}

std::vector<ExitOption> all_exit_options(const MarriageMarket& market) {
  MarriageMarket full = market;
  full.consideration.clear();
  for (const Agent& a : market.agents) {
    auto& set = full.consideration[a.id];
    for (const Agent& b : market.agents)
      if (b.gender != a.gender && a.spouse_id != b.id) set.push_back(b.id);
  }
  return exit_options(full);
}

double cents(double v) { return std::round(v * 100.0) / 100.0; }

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i + 1);
  return buf;
}

}  // namespace

Allocation HiddenTruth::allocation(const MarriageMarket& market) const {
  MarketIndex index(market);
  Allocation out;
  for (const HiddenCouple& c : couples) {
    const Household& h = index.household(c.household_id);
    out.couples.push_back({c.household_id, *h.male_id, *h.female_id, c.private_m, c.private_w, c.child_price_m,
                           c.child_price_w, c.nonlabor_m, c.nonlabor_w});
  }
  out.pairs = pairs;
  return out;
}

SyntheticMarket generate_stable_market(std::uint64_t seed, std::size_t n_couples, std::size_t n_singles,
                                       ModelKind model, const GeneratorOptions& options) {
  if (n_couples == 0) throw InvalidInput("generate_stable_market needs at least one couple");
  if (!(options.margin_lower > 0.0 && options.margin_lower <= options.margin_upper && options.margin_upper < 1.0))
    throw InvalidInput("margin range must satisfy 0 < lower <= upper < 1");

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  SyntheticMarket out;
  MarriageMarket& market = out.market;
  market.region = "synthetic";
  const Regime regime = model.regime();
  const bool assignable = options.assignable && model.is_joint();

  std::vector<ingest::HouseholdRow> rows;
  auto draw_agent = [&](std::string id, Gender g, double age, int children) {
    Agent a;
    a.id = std::move(id);
    a.gender = g;
    a.wage = cents(uniform(8.0, 30.0));
    a.work_hours = std::round(uniform(20.0, 50.0));
    a.age = age;
    a.region = market.region;
    a.n_children = children;
    return a;
  };
  for (std::size_t i = 0; i < n_couples; ++i) {
    const double age_m = std::round(uniform(27.0, 60.0));
    const double age_w = std::clamp(age_m - std::round(uniform(-3.0, 8.0)), 25.0, 65.0);
    const int children = integer(0, 3);
    Agent m = draw_agent(numbered("m", i), Gender::Male, age_m, children);
    Agent w = draw_agent(numbered("f", i), Gender::Female, age_w, children);
    m.spouse_id = w.id;
    w.spouse_id = m.id;
    ingest::HouseholdRow row;
    row.household_id = numbered("h", i);
    row.member_ids = {m.id, w.id};
    row.total_expenditure = cents((m.wage * m.work_hours + w.wage * w.work_hours) * uniform(0.9, 1.3));
    row.big_decision_share = cents(uniform(0.3, 0.7));
    if (assignable) {
      // Private good is half of adult expenditure; assign at most 30% to each.
      const double share = ingest::child_cost_share(ingest::HouseholdType::Couple, children);
      const double q = row.total_expenditure * (1.0 - share) / 2.0;
      row.assignable_private_m = cents(q * uniform(0.05, 0.3));
      row.assignable_private_w = cents(q * uniform(0.05, 0.3));
    }
    market.agents.push_back(std::move(m));
    market.agents.push_back(std::move(w));
    rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < n_singles; ++i) {
    const Gender g = i % 2 == 0 ? Gender::Male : Gender::Female;
    Agent a = draw_agent(numbered(g == Gender::Male ? "sm" : "sf", i), g, std::round(uniform(25.0, 65.0)),
                         integer(0, 2));
    ingest::HouseholdRow row;
    row.household_id = numbered("hs", i);
    row.member_ids = {a.id};
    row.total_expenditure = cents(a.wage * a.work_hours * uniform(0.9, 1.3));
    row.big_decision_share = cents(uniform(0.3, 0.7));
    market.agents.push_back(std::move(a));
    rows.push_back(std::move(row));
  }

  std::map<std::string, const Agent*> by_id;
  for (const Agent& a : market.agents) by_id[a.id] = &a;
  for (const ingest::HouseholdRow& row : rows) {
    const Agent* m = nullptr;
    const Agent* w = nullptr;
    for (const std::string& id : row.member_ids) (by_id.at(id)->gender == Gender::Male ? m : w) = by_id.at(id);
    Household h;
    h.id = row.household_id;
    if (m) h.male_id = m->id;
    if (w) h.female_id = w->id;
    h.total_expenditure = row.total_expenditure;
    h.big_decision_share = row.big_decision_share;
    h.bundle = ingest::build_bundle(row, m, w, {regime, 0.5});
    market.households.push_back(std::move(h));
  }
  market.grid = ingest::compute_incomes(market.agents, market.households);
  market.consideration = options.consider ? ingest::build_consideration_sets(market, options.percentile_band)
                                          : ConsiderationSets{};

  // Hidden allocation.
  HiddenTruth& truth = out.truth;
  truth.seed = seed;
  truth.model = model;
  Evaluator eval(market, model, {});
  std::vector<CouplePoint> points;
  for (const CoupleData& c : eval.couples()) {
    const HouseholdBundle& b = c.household->bundle;
    const Agent& m = eval.index().agent(*c.household->male_id);
    const Agent& w = eval.index().agent(*c.household->female_id);
    CouplePoint pt;
    pt.x_w = c.a_w + uniform(0.2, 0.8) * (c.q - c.a_m - c.a_w);
    pt.rho_m = model.is_joint() ? uniform(0.2, 0.8) * c.rho : 0.0;
    pt.ynl_m = uniform(0.42, 0.58) * c.nonlabor;
    points.push_back(pt);

    HiddenCouple hc;
    hc.household_id = c.household->id;
    hc.private_w = pt.x_w;
    hc.private_m = c.q - pt.x_w;
    if (model.is_joint()) {
      hc.child_price_m = pt.rho_m;
      hc.child_price_w = c.rho - pt.rho_m;
    }
    hc.nonlabor_m = pt.ynl_m;
    hc.nonlabor_w = c.nonlabor - pt.ynl_m;
    hc.kappa = uniform(0.0, 1.0);
    const OptionPricing own = eval.index().pricing({m.id, w.id});
    hc.public_price_w_own = uniform(0.2, 0.8) * own.public_price;
    hc.private_share = c.q > 0.0 ? pt.x_w / c.q : 0.0;
    const double noncoop = model.is_joint() ? *b.child_daily : *b.child_total;
    const double coop = model.is_joint() ? c.rho * *b.child_big : 0.0;
    const double her = w.wage * b.leisure_w + own.private_price * pt.x_w + hc.public_price_w_own * b.public_total +
                       hc.kappa * noncoop + (model.is_joint() ? *hc.child_price_w * *b.child_big : 0.0);
    const double full = m.wage * b.leisure_m + w.wage * b.leisure_w + own.private_price * c.q +
                        own.public_price * b.public_total + noncoop + coop;
    hc.sharing_rule = her / full;
    truth.couples.push_back(std::move(hc));
  }

  // Incomes: margin * rhs(truth) = y_labor + transfer + largest non-labor
  // income the members can bring anywhere in the band.
  const NonlaborBand& band = market.nonlabor_band;
  MarketIndex index(market);
  std::map<std::string, std::size_t> couple_pos;
  for (std::size_t c = 0; c < eval.couples().size(); ++c) couple_pos[eval.couples()[c].household->id] = c;
  auto max_nonlabor = [&](const std::string& id) {
    if (id.empty()) return 0.0;
    const Household& h = *index.household_of(id);
    const double n = market.grid.nonlabor_of(h.id);
    if (!h.is_couple()) return n;
    return std::max(band.lower * n, band.upper * n);
  };
  for (const ExitOption& option : all_exit_options(market)) {
    double p_m = 0.0;
    if (option.kind == OptionKind::Pair) {
      p_m = uniform(0.2, 0.8) * index.pricing(option.key).public_price;
      truth.pairs.push_back({option.key, p_m, index.pricing(option.key).public_price - p_m});
    }
    const RowForm r = eval.row(option.key);
    const double margin = uniform(options.margin_lower, options.margin_upper);
    const double target = margin * rhs_at(r, points, p_m);
    OptionPricing pricing;
    pricing.y_labor = target - r.transfer - max_nonlabor(option.key.male) - max_nonlabor(option.key.female);
    market.grid.options[option.key] = pricing;
    truth.margins[option.key] = margin;
  }
  return out;
}

MarriageMarket perturb_incomes(const MarriageMarket& market, const OptionKey& key, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidInput("perturbation factor must be positive");
  const auto options = exit_options(market);
  if (std::none_of(options.begin(), options.end(), [&](const ExitOption& o) { return o.key == key; }))
    throw InvalidInput("market has no exit option " + to_string(key));
  MarriageMarket out = market;
  OptionPricing pricing = MarketIndex(market).pricing(key);
  pricing.income_scale *= factor;
  out.grid.options[key] = pricing;
  return out;
}

double singlehood_headroom(const MarriageMarket& market, ModelKind model, const OptionKey& key,
                           const ChildSupportSchedule& schedule) {
  MarketIndex index(market);
  if (index.couples().size() != 1) throw InvalidInput("singlehood_headroom needs a one-couple market");
  for (const ExitOption& o : exit_options(market))
    if (o.kind == OptionKind::Pair) throw InvalidInput("singlehood_headroom needs a market without pair options");
  const Household& h = *index.couples().front();
  if (key.male_alone() == key.female_alone() || (key.male_alone() ? key.male != *h.male_id : key.female != *h.female_id))
    throw InvalidInput("no singlehood option " + to_string(key) + " in the couple");

  const Agent& m = index.agent(*h.male_id);
  const Agent& w = index.agent(*h.female_id);
  const HouseholdBundle& b = h.bundle;
  const double n = market.grid.nonlabor_of(h.id);
  const double rho = market.grid.child_price_of(h.id);
  const double q = b.private_total;
  const double pool = q + (model.is_joint() ? rho * *b.child_big : 0.0);
  const double own_children = model.is_joint() ? *b.child_daily : *b.child_total;
  const double support = model.is_joint() ? 0.0 : schedule.amount(m.n_children, m.potential_labor_income());

  struct Side {
    double fixed;     // leisure + public good + own children's good
    double income;    // income at the even non-labor split
    double transfer;  // added to the income on the left
    double assignable;
  };
  auto side = [&](const Agent& a, double leisure, double assignable, double transfer) {
    const OptionPricing p = index.pricing(a.gender == Gender::Male ? OptionKey{a.id, ""} : OptionKey{"", a.id});
    if (p.private_price != 1.0) throw Unsupported("singlehood_headroom assumes unit private prices");
    return Side{a.wage * leisure + p.public_price * b.public_total + own_children,
                p.income_scale * (p.y_labor + n / 2.0), transfer, assignable};
  };
  const Side his = side(m, b.leisure_m, b.assignable_m.value_or(0.0), model.binding() ? -support : 0.0);
  const Side hers = side(w, b.leisure_w, b.assignable_w.value_or(0.0), support);
  const Side& self = key.male_alone() ? his : hers;
  const Side& spouse = key.male_alone() ? hers : his;

  // The spouse must keep enough of the shared pool to afford singlehood and at
  // least their assignable consumption; the rest can go to `self`.
  const double need = spouse.income + spouse.transfer - spouse.fixed;
  const double keep = std::max(spouse.assignable, need);
  if (keep > pool - self.assignable + 1e-12)
    throw InvalidInput("spouse's singlehood option is not rationalizable at index 1");
  if (!(self.income > 0.0)) throw InvalidInput("option income must be positive");
  return (self.fixed + pool - keep - self.transfer) / self.income;
}

bool brute_force_rationalizable(const MarriageMarket& market, ModelKind model, std::size_t grid_steps,
                                const ChildSupportSchedule& schedule) {
  if (grid_steps < 2) throw InvalidInput("grid_steps must be at least 2");
  if (grid_steps > 21) throw Unsupported("brute force is limited to 21 grid steps per unknown");
  const Evaluator eval(market, model, schedule);
  std::size_t singles = 0;
  for (const Household& h : market.households) singles += h.is_couple() ? 0 : 1;
  if (eval.couples().size() > 2 || singles > 2) throw Unsupported("brute force is limited to 2 couples and 2 singles");

  auto grid = [grid_steps](double lo, double hi) {
    std::vector<double> v(grid_steps);
    for (std::size_t i = 0; i < grid_steps; ++i)
      v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_steps - 1);
    return v;
  };

  double magnitude = 1.0;
  for (const Household& h : market.households) magnitude = std::max(magnitude, h.total_expenditure);
  const double tol = 1e-9 * magnitude;

  // Best public-price split per row, enumerated on its own grid.
  struct Row {
    RowForm form;
    double best_p = 0.0;
  };
  std::vector<Row> rows;
  for (const ExitOption& option : exit_options(market)) {
    Row r{eval.row(option.key), 0.0};
    double best = -std::numeric_limits<double>::infinity();
    for (double p : grid(0.0, r.form.p_max)) best = std::max(best, r.form.p_coef * p);
    r.best_p = best;
    rows.push_back(std::move(r));
  }

  const NonlaborBand& band = market.nonlabor_band;
  const std::size_t n_couples = eval.couples().size();
  std::vector<std::vector<CouplePoint>> candidates(n_couples);
  std::vector<CouplePoint> point(n_couples);
  for (std::size_t c = 0; c < n_couples; ++c) {
    const CoupleData& d = eval.couples()[c];
    const double n = d.nonlabor;
    const auto xs = grid(d.a_w, std::max(d.a_w, d.q - d.a_m));
    const auto rhos = model.is_joint() ? grid(0.0, d.rho) : std::vector<double>{0.0};
    const auto ynls = grid(std::min(band.lower * n, band.upper * n), std::max(band.lower * n, band.upper * n));
    for (double x : xs)
      for (double r : rhos)
        for (double y : ynls) {
          point[c] = {x, r, y};
          bool ok = true;
          for (const Row& row : rows) {
            if (row.form.terms.size() != 1 || row.form.terms.front().couple != c) continue;
            if (row.form.slack(point, 0.0) + row.best_p < -tol) {
              ok = false;
              break;
            }
          }
          if (ok) candidates[c].push_back(point[c]);
        }
    if (candidates[c].empty()) return false;
  }
  if (n_couples < 2) return true;

  std::vector<const Row*> joint;
  for (const Row& row : rows)
    if (row.form.terms.size() == 2) joint.push_back(&row);
  for (const CouplePoint& a : candidates[0]) {
    point[0] = a;
    for (const CouplePoint& b : candidates[1]) {
      point[1] = b;
      bool ok = true;
      for (const Row* row : joint) {
        if (row->form.slack(point, 0.0) + row->best_p < -tol) {
          ok = false;
          break;
        }
      }
      if (ok) return true;
    }
  }
  return false;
}

double truth_violation(const MarriageMarket& market, const HiddenTruth& truth, const ChildSupportSchedule& schedule) {
  const Evaluator eval(market, truth.model, schedule);
  std::vector<CouplePoint> points;
  for (const CoupleData& c : eval.couples()) {
    const auto it = std::find_if(truth.couples.begin(), truth.couples.end(),
                                 [&](const HiddenCouple& hc) { return hc.household_id == c.household->id; });
    if (it == truth.couples.end()) throw InvalidInput("truth has no allocation for household " + c.household->id);
    points.push_back({it->private_w, it->child_price_m.value_or(0.0), it->nonlabor_m});
  }
  std::map<OptionKey, double> p_m;
  for (const PairAllocation& p : truth.pairs) p_m[p.key] = p.public_price_m;
  double worst = -std::numeric_limits<double>::infinity();
  for (const ExitOption& option : exit_options(market)) {
    const RowForm r = eval.row(option.key);
    const auto it = p_m.find(option.key);
    if (r.p_max > 0.0 && it == p_m.end()) throw InvalidInput("truth has no Lindahl prices for " + to_string(option.key));
    worst = std::max(worst, -r.slack(points, it == p_m.end() ? 0.0 : it->second));
  }
  return worst;
}

}  // namespace stablehh::oracle
