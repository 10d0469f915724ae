#pragma once

// Domain model of a marriage market: agents, observed household bundles,
// the matching, consideration sets and the price/income grid over all
// potential pairs. All currency amounts are per week; all times in hours per
// week.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stablehh {

/// Weekly time endowment used for potential labor income and leisure.
inline constexpr double kWeeklyHours = 112.0;

enum class Gender : std::uint8_t { Male, Female };

std::string_view to_string(Gender g);
Gender parse_gender(std::string_view text);

struct Agent {
  std::string id;
  Gender gender = Gender::Male;
  double wage = 0.0;
  double work_hours = 0.0;
  double age = 0.0;
  std::string region;
  int n_children = 0;
  std::optional<std::string> spouse_id;

  bool married() const { return spouse_id.has_value(); }
  double leisure() const { return kWeeklyHours - work_hours; }
  double potential_labor_income() const { return kWeeklyHours * wage; }

  bool operator==(const Agent&) const = default;
};

/// Observed consumption of one household. Leisure is valued at own wage; every
/// other good is a Hicksian aggregate with unit price except the big-decision
/// children good, whose price is the household's child price (default 1).
struct HouseholdBundle {
  double leisure_m = 0.0;
  double leisure_w = 0.0;
  double private_total = 0.0;
  std::optional<double> assignable_m;
  std::optional<double> assignable_w;
  double public_total = 0.0;
  std::optional<double> child_daily;  // k: non-cooperative, joint custody
  std::optional<double> child_big;    // K: cooperative, joint custody
  std::optional<double> child_total;  // C: sole custody

  bool has_joint_custody_split() const { return child_daily && child_big; }

  bool operator==(const HouseholdBundle&) const = default;
};

struct Household {
  std::string id;
  std::optional<std::string> male_id;
  std::optional<std::string> female_id;
  double total_expenditure = 0.0;
  std::optional<double> big_decision_share;
  HouseholdBundle bundle;

  bool is_couple() const { return male_id.has_value() && female_id.has_value(); }

  bool operator==(const Household&) const = default;
};

/// Identifies an exit option (m, w); an empty id stands for singlehood.
struct OptionKey {
  std::string male;
  std::string female;

  bool male_alone() const { return female.empty(); }
  bool female_alone() const { return male.empty(); }

  auto operator<=>(const OptionKey&) const = default;
};

std::string to_string(const OptionKey& key);

/// Prices and labor income faced by one potential pair. The realized income is
/// income_scale * (y_labor + non-labor income of the members).
struct OptionPricing {
  double y_labor = 0.0;
  double private_price = 1.0;
  double public_price = 1.0;
  double income_scale = 1.0;

  bool operator==(const OptionPricing&) const = default;
};

struct PriceIncomeGrid {
  /// Explicit entries. Pairs without an entry use default_pricing().
  std::map<OptionKey, OptionPricing> options;
  /// Household non-labor income by household id.
  std::map<std::string, double> nonlabor;
  /// Price of the big-decision children good by household id (default 1).
  std::map<std::string, double> child_price;

  double nonlabor_of(const std::string& household_id) const;
  double child_price_of(const std::string& household_id) const;

  bool operator==(const PriceIncomeGrid&) const = default;
};

/// Admissible range of each spouse's share of household non-labor income.
struct NonlaborBand {
  double lower = 0.4;
  double upper = 0.6;

  bool operator==(const NonlaborBand&) const = default;
};

/// Statutory minimum child support: a fraction of the non-custodian's
/// potential labor income, tiered by number of children (3 means 3 or more).
struct ChildSupportSchedule {
  std::map<int, double> tiers{{1, 0.25}, {2, 0.33}, {3, 0.50}};

  double fraction(int n_children) const;
  double amount(int n_children, double base_income) const { return fraction(n_children) * base_income; }

  static ChildSupportSchedule none() { return ChildSupportSchedule{{}}; }

  bool operator==(const ChildSupportSchedule&) const = default;
};

enum class Regime : std::uint8_t { JointCustody, SoleCustody };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view text);

/// Custody model. The binding-minimal-transfer variant exists only under sole
/// custody.
class ModelKind {
 public:
  static ModelKind joint_custody() { return ModelKind(Regime::JointCustody, false); }
  static ModelKind sole_custody(bool binding = false) { return ModelKind(Regime::SoleCustody, binding); }
  static ModelKind make(Regime regime, bool binding);

  Regime regime() const { return regime_; }
  bool binding() const { return binding_; }
  bool is_joint() const { return regime_ == Regime::JointCustody; }

  bool operator==(const ModelKind&) const = default;

 private:
  ModelKind(Regime regime, bool binding) : regime_(regime), binding_(binding) {}
  Regime regime_;
  bool binding_;
};

using ConsiderationSets = std::map<std::string, std::vector<std::string>>;

struct MarriageMarket {
  std::string region;
  std::vector<Agent> agents;
  std::vector<Household> households;
  /// Opposite-gender agents each agent weighs as outside partners. Singlehood
  /// is always an option and is not listed.
  ConsiderationSets consideration;
  PriceIncomeGrid grid;
  NonlaborBand nonlabor_band;

  bool operator==(const MarriageMarket&) const = default;
};

/// Read-only lookup tables over a market. Holds a reference; the market must
/// outlive the index.
class MarketIndex {
 public:
  explicit MarketIndex(const MarriageMarket& market);

  const MarriageMarket& market() const { return *market_; }
  const Agent* find_agent(const std::string& id) const;
  const Agent& agent(const std::string& id) const;
  const Household* household_of(const std::string& agent_id) const;
  const Household& household(const std::string& household_id) const;

  /// Couple households, ordered by household id.
  const std::vector<const Household*>& couples() const { return couples_; }
  /// Potential labor income of the pair when the grid has no explicit entry.
  OptionPricing pricing(const OptionKey& key) const;

 private:
  const MarriageMarket* market_;
  std::map<std::string, std::size_t> agent_pos_;
  std::map<std::string, std::size_t> household_pos_;
  std::map<std::string, std::size_t> household_of_agent_;
  std::vector<const Household*> couples_;
};

enum class OptionKind : std::uint8_t { MaleAlone, FemaleAlone, Pair };

struct ExitOption {
  OptionKey key;
  OptionKind kind = OptionKind::Pair;

  bool operator==(const ExitOption&) const = default;
};

/// Every exit option that generates a stability restriction: singlehood of
/// each married agent, then every considered opposite-gender pair that
/// involves at least one married agent and is not a current couple. Order is
/// deterministic (by kind, then by ids).
std::vector<ExitOption> exit_options(const MarriageMarket& market);

/// Exit options belonging to a couple: both spouses' singlehood and every pair
/// that involves either spouse.
bool option_belongs_to(const ExitOption& option, const Household& couple);

enum class ViolationKind : std::uint8_t {
  DuplicateId,
  UnknownSpouse,
  MatchingAsymmetry,
  SameGenderCouple,
  HouseholdMembership,
  ChildCountMismatch,
  ChildSplitMismatch,
  NegativeValue,
  AssignableExceedsPrivate,
  WorkHoursOutOfRange,
  AgeOutOfRange,
  SpouseConsidered,
  ConsiderationGender,
  UnknownConsideredAgent,
  NonPositivePrice,
  RegionMismatch,
  InvalidNonlaborBand,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string subject;
  std::string other;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

std::string to_string(const Violation& v);

/// Checks matching symmetry, household and bundle invariants, consideration
/// set rules and price positivity. Violations are returned, never thrown.
std::vector<Violation> validate_market(const MarriageMarket& market);

}  // namespace stablehh
