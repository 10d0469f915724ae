#include <gtest/gtest.h>

#include <sstream>

#include "stablehh/errors.hpp"
#include "stablehh/ingest.hpp"
#include "stablehh/serialization.hpp"

using namespace stablehh;
using namespace stablehh::ingest;

namespace {

const std::string kFixtures = STABLEHH_FIXTURES;

Agent person(std::string id, Gender g, double wage, double hours, double age, std::string region = "A") {
  Agent a;
  a.id = std::move(id);
  a.gender = g;
  a.wage = wage;
  a.work_hours = hours;
  a.age = age;
  a.region = std::move(region);
  return a;
}

void marry(Agent& m, Agent& w) {
  m.spouse_id = w.id;
  w.spouse_id = m.id;
}

}  // namespace

TEST(ChildCost, CoupleAndSingleScales) {
  EXPECT_DOUBLE_EQ(impute_children_expenditure(HouseholdType::Couple, 2, 1000.0), 280.0);
  EXPECT_DOUBLE_EQ(impute_children_expenditure(HouseholdType::Couple, 0, 1000.0), 0.0);
  EXPECT_DOUBLE_EQ(impute_children_expenditure(HouseholdType::Single, 3, 1000.0), 470.0);
  EXPECT_DOUBLE_EQ(impute_children_expenditure(HouseholdType::Single, 5, 1000.0), 470.0);
  EXPECT_THROW(impute_children_expenditure(HouseholdType::Couple, 1, -1.0), InvalidInput);
}

TEST(ChildCost, HomogeneousOfDegreeOne) {
  for (int n = 0; n <= 4; ++n)
    for (double t : {0.0, 1.0, 733.25, 1e6})
      EXPECT_DOUBLE_EQ(impute_children_expenditure(HouseholdType::Couple, n, 3.0 * t),
                       3.0 * impute_children_expenditure(HouseholdType::Couple, n, t));
}

TEST(Bundle, HalfPrivateHalfPublic) {
  Agent m = person("m", Gender::Male, 10, 40, 40);
  Agent w = person("w", Gender::Female, 8, 30, 38);
  m.n_children = w.n_children = 2;
  HouseholdRow row{"h", {"m", "w"}, 2000.0, std::nullopt, std::nullopt, 0.5};
  const HouseholdBundle b = build_bundle(row, &m, &w);
  EXPECT_DOUBLE_EQ(*b.child_total, 560.0);
  EXPECT_DOUBLE_EQ(b.private_total, 720.0);
  EXPECT_DOUBLE_EQ(b.public_total, 720.0);
  EXPECT_DOUBLE_EQ(*b.child_daily, 280.0);
  EXPECT_DOUBLE_EQ(*b.child_big, 280.0);
  EXPECT_DOUBLE_EQ(b.leisure_m, 72.0);
  EXPECT_DOUBLE_EQ(b.leisure_w, 82.0);
}

TEST(Bundle, SoleCustodyKeepsOnlyTheAggregate) {
  Agent w = person("w", Gender::Female, 8, 30, 38);
  w.n_children = 1;
  HouseholdRow row{"h", {"w"}, 1000.0, std::nullopt, std::nullopt, std::nullopt};
  const HouseholdBundle b = build_bundle(row, nullptr, &w, {Regime::SoleCustody, 0.5});
  EXPECT_DOUBLE_EQ(*b.child_total, 230.0);
  EXPECT_FALSE(b.child_daily.has_value());
  EXPECT_FALSE(b.child_big.has_value());
  EXPECT_DOUBLE_EQ(b.private_total, 385.0);
}

TEST(Bundle, ZeroExpenditureAndHoursLimit) {
  Agent m = person("m", Gender::Male, 10, 40, 40);
  HouseholdRow row{"h", {"m"}, 0.0, std::nullopt, std::nullopt, std::nullopt};
  const HouseholdBundle b = build_bundle(row, &m, nullptr);
  EXPECT_DOUBLE_EQ(b.private_total, 0.0);
  EXPECT_DOUBLE_EQ(b.public_total, 0.0);
  EXPECT_DOUBLE_EQ(*b.child_total, 0.0);
  m.work_hours = 113;
  EXPECT_THROW(build_bundle(row, &m, nullptr), InvalidInput);
}

TEST(Incomes, NonlaborFromFullExpenditure) {
  Agent m = person("m", Gender::Male, 10, 40, 40);
  Agent w = person("w", Gender::Female, 8, 40, 38);
  marry(m, w);
  // Full expenditure 2500 = 1204 market + 720 + 576 leisure.
  Household h;
  h.id = "h";
  h.male_id = "m";
  h.female_id = "w";
  h.total_expenditure = 1204.0;
  std::vector<Agent> agents{m, w};
  std::vector<Household> households{h};
  const PriceIncomeGrid grid = compute_incomes(agents, households);
  EXPECT_NEAR(grid.nonlabor_of("h"), 484.0, 1e-9);
  EXPECT_DOUBLE_EQ(m.potential_labor_income(), 1120.0);
}

TEST(Incomes, SingleOptionIncome) {
  Agent s = person("s", Gender::Male, 10, 40, 40);
  Household h;
  h.id = "hs";
  h.male_id = "s";
  // 50 of non-labor income on top of 1120 potential labor income.
  h.total_expenditure = 1120.0 - 720.0 + 50.0;
  MarriageMarket market;
  market.agents = {s};
  market.households = {h};
  market.grid = compute_incomes(market.agents, market.households);
  MarketIndex index(market);
  EXPECT_NEAR(index.pricing({"s", ""}).y_labor + market.grid.nonlabor_of("hs"), 1170.0, 1e-9);
}

TEST(Incomes, NegativeNonlaborKeptUnlessTruncated) {
  Agent s = person("s", Gender::Male, 10, 40, 40);
  Household h;
  h.id = "hs";
  h.male_id = "s";
  h.total_expenditure = 100.0;
  std::vector<Agent> agents{s};
  std::vector<Household> households{h};
  EXPECT_LT(compute_incomes(agents, households).nonlabor_of("hs"), 0.0);
  EXPECT_DOUBLE_EQ(compute_incomes(agents, households, true).nonlabor_of("hs"), 0.0);
}

TEST(ChildSupport, TransferFromTheFather) {
  Agent m = person("m", Gender::Male, 100, 40, 40);
  m.n_children = 2;
  EXPECT_DOUBLE_EQ(compute_child_support(m, {}, ModelKind::sole_custody()), 3696.0);
  m.n_children = 0;
  EXPECT_DOUBLE_EQ(compute_child_support(m, {}, ModelKind::sole_custody()), 0.0);
  m.wage = 50;
  m.n_children = 1;
  EXPECT_DOUBLE_EQ(compute_child_support(m, {}, ModelKind::sole_custody(true)), 1400.0);
  EXPECT_THROW(compute_child_support(m, {}, ModelKind::joint_custody()), ModelMismatch);
  Agent w = person("w", Gender::Female, 50, 40, 40);
  EXPECT_THROW(compute_child_support(w, {}, ModelKind::sole_custody()), Unsupported);
}

TEST(Partition, ByRegion) {
  std::vector<Agent> agents;
  for (int i = 0; i < 4; ++i) agents.push_back(person("a" + std::to_string(i), Gender::Male, 10, 40, 40, "A"));
  for (int i = 0; i < 2; ++i) agents.push_back(person("b" + std::to_string(i), Gender::Male, 10, 40, 40, "B"));
  const auto markets = partition_markets(agents, {});
  ASSERT_EQ(markets.size(), 2u);
  EXPECT_EQ(markets[0].region, "A");
  EXPECT_EQ(markets[0].agents.size(), 4u);
  EXPECT_EQ(markets[1].agents.size(), 2u);

  std::vector<Agent> one(agents.begin(), agents.begin() + 4);
  EXPECT_EQ(partition_markets(one, {}).size(), 1u);
}

TEST(Partition, SpousesInDifferentRegions) {
  Agent m = person("m", Gender::Male, 10, 40, 40, "A");
  Agent w = person("w", Gender::Female, 10, 40, 40, "B");
  marry(m, w);
  std::vector<Agent> agents{m, w};
  EXPECT_THROW(partition_markets(agents, {}), InconsistentRegion);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> gaps{10, -2, 3, 0, 1};
  EXPECT_NEAR(quantile(gaps, 0.01), -1.92, 1e-12);
  EXPECT_NEAR(quantile(gaps, 0.99), 9.72, 1e-12);
  EXPECT_DOUBLE_EQ(quantile(gaps, 0.0), -2.0);
  EXPECT_DOUBLE_EQ(quantile(gaps, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(quantile(gaps, 0.5), 1.0);
  EXPECT_THROW(quantile({}, 0.5), InvalidInput);
}

TEST(Consideration, DegenerateWindowFromOneCouple) {
  MarriageMarket market;
  Agent m = person("m", Gender::Male, 10, 40, 40);
  Agent w = person("w", Gender::Female, 10, 40, 38);
  marry(m, w);
  Agent f2 = person("f2", Gender::Female, 10, 40, 38);
  Agent f3 = person("f3", Gender::Female, 10, 40, 37);
  market.agents = {m, w, f2, f3};
  Household h;
  h.id = "h";
  h.male_id = "m";
  h.female_id = "w";
  market.households = {h};
  const AgeWindow window = age_window(market);
  EXPECT_DOUBLE_EQ(window.lower, 2.0);
  EXPECT_DOUBLE_EQ(window.upper, 2.0);
  const auto sets = build_consideration_sets(market);
  EXPECT_EQ(sets.at("m"), std::vector<std::string>{"f2"});
  EXPECT_EQ(sets.at("f2"), std::vector<std::string>{"m"});
  EXPECT_TRUE(sets.at("f3").empty());
  EXPECT_TRUE(sets.at("w").empty());
}

TEST(Consideration, ClosedWindowAndSymmetry) {
  MarriageMarket market;
  Agent m = person("m", Gender::Male, 10, 40, 40);
  Agent s = person("s", Gender::Female, 10, 40, 30);
  market.agents = {m, s};
  const auto sets = build_consideration_sets(market, AgeWindow{-2.0, 10.0});
  EXPECT_EQ(sets.at("m"), std::vector<std::string>{"s"});
  EXPECT_EQ(sets.at("s"), std::vector<std::string>{"m"});
  const auto narrow = build_consideration_sets(market, AgeWindow{-2.0, 9.5});
  EXPECT_TRUE(narrow.at("m").empty());
}

TEST(Consideration, NoCouples) {
  MarriageMarket market;
  market.agents = {person("m", Gender::Male, 10, 40, 40)};
  EXPECT_THROW(age_window(market), EmptyMarket);
}

TEST(Csv, AgentsHeaderMustMatch) {
  std::istringstream bad("id,sex,wage,work_hours,age,region,n_children,spouse_id\n");
  EXPECT_THROW(read_agents_csv(bad), InvalidInput);
  std::istringstream ok("id,gender,wage,work_hours,age,region,n_children,spouse_id\r\nx,F,9.5,20,30,r,0,\r\n");
  const auto agents = read_agents_csv(ok);
  ASSERT_EQ(agents.size(), 1u);
  EXPECT_EQ(agents[0].gender, Gender::Female);
  EXPECT_DOUBLE_EQ(agents[0].wage, 9.5);
  EXPECT_FALSE(agents[0].spouse_id.has_value());
  std::istringstream not_number("id,gender,wage,work_hours,age,region,n_children,spouse_id\nx,F,9;5,20,30,r,0,\n");
  EXPECT_THROW(read_agents_csv(not_number), InvalidInput);
}

TEST(Csv, HouseholdsOptionalColumns) {
  std::istringstream in("household_id,member_ids,total_expenditure\nh1,a;b,100\nh2,c,50\n");
  const auto rows = read_households_csv(in);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].member_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_FALSE(rows[0].assignable_private_m.has_value());
  std::istringstream unknown("household_id,member_ids,total_expenditure,colour\nh1,a,1,red\n");
  EXPECT_THROW(read_households_csv(unknown), InvalidInput);
  EXPECT_THROW(read_households_csv(std::filesystem::path(kFixtures + "/no_such.csv")), MissingFile);
}

TEST(Config, KeysAndValidation) {
  const Config c = parse_config(R"({"model": "spc", "big_decision_share": 0.3, "nonlabor_band": [0.45, 0.55]})");
  EXPECT_EQ(c.model, Regime::SoleCustody);
  EXPECT_DOUBLE_EQ(c.big_decision_share, 0.3);
  EXPECT_DOUBLE_EQ(c.nonlabor_band.lower, 0.45);
  EXPECT_THROW(parse_config(R"({"modle": "jc"})"), InvalidInput);
  EXPECT_THROW(parse_config(R"({"nonlabor_band": [0.6, 0.7]})"), InvalidInput);
  EXPECT_THROW(parse_config("[1]"), InvalidInput);
}

TEST(Pipeline, FixturesMatchGoldenMarket) {
  const auto agents = read_agents_csv(std::filesystem::path(kFixtures + "/agents.csv"));
  const auto rows = read_households_csv(std::filesystem::path(kFixtures + "/households.csv"));
  const Result result = run(agents, rows);
  ASSERT_EQ(result.markets.size(), 2u);
  ASSERT_EQ(result.dropped.size(), 1u);
  EXPECT_EQ(result.dropped[0].first, "h07");
  for (const MarriageMarket& m : result.markets) EXPECT_TRUE(validate_market(m).empty()) << m.region;
  const auto golden = io::markets_from_json(io::read_file(kFixtures + "/golden_market.json"));
  EXPECT_EQ(result.markets, golden);
}

TEST(Pipeline, FullIncomeAccountingIdentity) {
  const auto agents = read_agents_csv(std::filesystem::path(kFixtures + "/agents.csv"));
  const auto rows = read_households_csv(std::filesystem::path(kFixtures + "/households.csv"));
  for (const MarriageMarket& m : run(agents, rows).markets) {
    MarketIndex index(m);
    for (const Household& h : m.households) {
      const HouseholdBundle& b = h.bundle;
      double value = b.private_total + b.public_total + *b.child_total;
      double labor = 0.0;
      if (h.male_id) {
        value += index.agent(*h.male_id).wage * b.leisure_m;
        labor += index.agent(*h.male_id).potential_labor_income();
      }
      if (h.female_id) {
        value += index.agent(*h.female_id).wage * b.leisure_w;
        labor += index.agent(*h.female_id).potential_labor_income();
      }
      EXPECT_NEAR(value, labor + m.grid.nonlabor_of(h.id), 1e-9) << h.id;
    }
  }
}

TEST(Pipeline, SoleCustodyConfig) {
  const auto agents = read_agents_csv(std::filesystem::path(kFixtures + "/agents.csv"));
  const auto rows = read_households_csv(std::filesystem::path(kFixtures + "/households.csv"));
  const Result result = run(agents, rows, load_config(kFixtures + "/config_spc.json"));
  for (const MarriageMarket& m : result.markets)
    for (const Household& h : m.households) EXPECT_FALSE(h.bundle.child_big.has_value());
}

TEST(Pipeline, AgentWithoutHousehold) {
  std::vector<Agent> agents{person("m", Gender::Male, 10, 40, 40)};
  EXPECT_THROW(run(agents, {}), InvalidInput);
}
