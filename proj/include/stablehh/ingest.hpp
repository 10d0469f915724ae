#pragma once

// Survey extracts -> canonical marriage markets.
//
// agents.csv:     id,gender,wage,work_hours,age,region,n_children,spouse_id
// households.csv: household_id,member_ids,total_expenditure
//                 [,assignable_private_m,assignable_private_w][,big_decision_share]
//
// member_ids lists one or two agent ids separated by ';'. Optional columns may
// be missing entirely or left empty per row.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stablehh/market.hpp"

namespace stablehh::ingest {

enum class HouseholdType : std::uint8_t { Couple, Single };

/// Children's cost as a share of total expenditure (OECD-modified scale).
/// Families with more than three children use the three-child share.
double child_cost_share(HouseholdType type, int n_children);

/// Throws InvalidInput on negative expenditure or a negative child count.
double impute_children_expenditure(HouseholdType type, int n_children, double total_expenditure);

struct HouseholdRow {
  std::string household_id;
  std::vector<std::string> member_ids;
  double total_expenditure = 0.0;
  std::optional<double> assignable_private_m;
  std::optional<double> assignable_private_w;
  std::optional<double> big_decision_share;
};

std::vector<Agent> read_agents_csv(std::istream& in);
std::vector<Agent> read_agents_csv(const std::filesystem::path& path);
std::vector<HouseholdRow> read_households_csv(std::istream& in);
std::vector<HouseholdRow> read_households_csv(const std::filesystem::path& path);

struct BundleOptions {
  Regime model = Regime::JointCustody;
  double big_decision_share = 0.5;
};

/// Bundle of the household described by `row`, whose members are `male`
/// and/or `female` (nullptr when absent). Children's expenditure is imputed
/// from the male's child count when present. Throws InvalidInput when a member
/// works more than 112 hours.
HouseholdBundle build_bundle(const HouseholdRow& row, const Agent* male, const Agent* female,
                             const BundleOptions& options = {});

/// Market expenditure plus wage-valued leisure of all members.
double full_expenditure(const Household& household, std::span<const Agent* const> members);

/// Full consumption expenditure minus the members' potential labor incomes.
/// May be negative.
double household_nonlabor_income(double full_expenditure, std::span<const double> potential_labor_incomes);

/// Non-labor income per household; options are left to the default rule
/// (potential labor income of the pair, unit prices).
PriceIncomeGrid compute_incomes(std::span<const Agent> agents, std::span<const Household> households,
                                bool truncate_negative_nonlabor = false);

/// Statutory transfer owed by non-custodian father `male`. ModelMismatch
/// under joint custody, Unsupported for a female non-custodian.
double compute_child_support(const Agent& male, const ChildSupportSchedule& schedule, ModelKind model);

/// Groups agents and their households by region. Markets come out sorted by
/// region; agents and households keep their input order. Throws
/// InconsistentRegion when two members of a household disagree.
std::vector<MarriageMarket> partition_markets(std::span<const Agent> agents, std::span<const Household> households);

/// Sample quantile with linear interpolation between order statistics
/// (type 7). `probability` in [0,1]; `values` must be non-empty.
double quantile(std::vector<double> values, double probability);

struct AgeWindow {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double age_gap) const;
};

/// Window of male-minus-female age gaps spanned by the matched couples.
/// Throws EmptyMarket when there are no couples.
AgeWindow age_window(const MarriageMarket& market, std::pair<double, double> band = {0.01, 0.99});

/// Opposite-gender agents within the window, own spouse excluded, ids sorted.
ConsiderationSets build_consideration_sets(const MarriageMarket& market, const AgeWindow& window);
ConsiderationSets build_consideration_sets(const MarriageMarket& market, std::pair<double, double> band = {0.01, 0.99});

struct Config {
  Regime model = Regime::JointCustody;
  double big_decision_share = 0.5;
  NonlaborBand nonlabor_band;
  std::pair<double, double> percentile_band{0.01, 0.99};
  bool truncate_negative_nonlabor = false;
  /// Drop households outside the 1st-99th percentile of wages or non-labor
  /// income. Off by default.
  bool trim_outliers = false;
};

Config load_config(const std::filesystem::path& path);
Config parse_config(std::string_view json_text);

struct Result {
  std::vector<MarriageMarket> markets;
  /// Household ids removed by sample selection or trimming, with the reason.
  std::vector<std::pair<std::string, std::string>> dropped;
  /// Non-fatal observations (negative non-labor income and similar).
  std::vector<std::string> notes;
};

/// Full pipeline: sample selection, bundles, incomes, markets and
/// consideration sets. Markets without couples are dropped with a note.
Result run(std::span<const Agent> agents, std::span<const HouseholdRow> households, const Config& config = {});

}  // namespace stablehh::ingest
