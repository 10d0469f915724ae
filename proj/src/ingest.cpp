#include "stablehh/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>

#include "json.hpp"

#include "stablehh/errors.hpp"

namespace stablehh::ingest {

namespace {

constexpr double kCoupleShares[] = {0.0, 0.17, 0.28, 0.37};
constexpr double kSingleShares[] = {0.0, 0.23, 0.37, 0.47};

constexpr double kMinWorkHours = 10.0;
constexpr double kMinAge = 25.0;
constexpr double kMaxAge = 65.0;

// Splits one CSV record. Double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // line number, fields
};

CsvTable read_table(std::istream& in, std::string_view what) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_record(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw InvalidInput(std::string(what) + " line " + std::to_string(line_no) + ": expected " +
                         std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    table.rows.emplace_back(line_no, std::move(fields));
  }
  if (table.header.empty()) throw InvalidInput(std::string(what) + ": missing header");
  return table;
}

double parse_number(const std::string& text, std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw InvalidInput("line " + std::to_string(line_no) + ": " + std::string(field) + " '" + text +
                       "' is not a number");
  return value;
}

int parse_int(const std::string& text, std::string_view field, std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidInput("line " + std::to_string(line_no) + ": " + std::string(field) + " '" + text +
                       "' is not an integer");
  return value;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path.string());
  return in;
}

}  // namespace

double child_cost_share(HouseholdType type, int n_children) {
  if (n_children < 0) throw InvalidInput("negative number of children");
  const int tier = std::min(n_children, 3);
  return type == HouseholdType::Couple ? kCoupleShares[tier] : kSingleShares[tier];
}

double impute_children_expenditure(HouseholdType type, int n_children, double total_expenditure) {
  if (total_expenditure < 0.0) throw InvalidInput("negative total expenditure");
  return child_cost_share(type, n_children) * total_expenditure;
}

std::vector<Agent> read_agents_csv(std::istream& in) {
  static const std::vector<std::string> kHeader = {"id",     "gender",     "wage",     "work_hours",
                                                   "age",    "region",     "n_children", "spouse_id"};
  CsvTable table = read_table(in, "agents.csv");
  if (table.header != kHeader)
    throw InvalidInput("agents.csv: header must be id,gender,wage,work_hours,age,region,n_children,spouse_id");
  std::vector<Agent> agents;
  agents.reserve(table.rows.size());
  for (const auto& [line_no, f] : table.rows) {
    Agent a;
    a.id = f[0];
    if (a.id.empty()) throw InvalidInput("agents.csv line " + std::to_string(line_no) + ": empty id");
    a.gender = parse_gender(f[1]);
    a.wage = parse_number(f[2], "wage", line_no);
    a.work_hours = parse_number(f[3], "work_hours", line_no);
    a.age = parse_number(f[4], "age", line_no);
    a.region = f[5];
    a.n_children = parse_int(f[6], "n_children", line_no);
    if (!f[7].empty()) a.spouse_id = f[7];
    agents.push_back(std::move(a));
  }
  return agents;
}

std::vector<Agent> read_agents_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_agents_csv(in);
}

std::vector<HouseholdRow> read_households_csv(std::istream& in) {
  CsvTable table = read_table(in, "households.csv");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < table.header.size(); ++i) col[table.header[i]] = i;
  for (const char* required : {"household_id", "member_ids", "total_expenditure"})
    if (!col.count(required)) throw InvalidInput(std::string("households.csv: missing column ") + required);
  for (const auto& [name, pos] : col) {
    static const std::set<std::string> kKnown = {"household_id",         "member_ids",
                                                 "total_expenditure",    "assignable_private_m",
                                                 "assignable_private_w", "big_decision_share"};
    if (!kKnown.count(name)) throw InvalidInput("households.csv: unknown column " + name);
  }
  auto optional = [&](const std::vector<std::string>& f, const char* name,
                      std::size_t line_no) -> std::optional<double> {
    auto it = col.find(name);
    if (it == col.end() || f[it->second].empty()) return std::nullopt;
    return parse_number(f[it->second], name, line_no);
  };

  std::vector<HouseholdRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& [line_no, f] : table.rows) {
    HouseholdRow r;
    r.household_id = f[col["household_id"]];
    std::string members = f[col["member_ids"]];
    std::size_t start = 0;
    while (start <= members.size()) {
      std::size_t end = members.find(';', start);
      if (end == std::string::npos) end = members.size();
      if (end > start) r.member_ids.push_back(members.substr(start, end - start));
      start = end + 1;
    }
    if (r.member_ids.empty() || r.member_ids.size() > 2)
      throw InvalidInput("households.csv line " + std::to_string(line_no) + ": a household has one or two members");
    r.total_expenditure = parse_number(f[col["total_expenditure"]], "total_expenditure", line_no);
    if (r.total_expenditure < 0.0)
      throw InvalidInput("households.csv line " + std::to_string(line_no) + ": negative total_expenditure");
    r.assignable_private_m = optional(f, "assignable_private_m", line_no);
    r.assignable_private_w = optional(f, "assignable_private_w", line_no);
    r.big_decision_share = optional(f, "big_decision_share", line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<HouseholdRow> read_households_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_households_csv(in);
}

HouseholdBundle build_bundle(const HouseholdRow& row, const Agent* male, const Agent* female,
                             const BundleOptions& options) {
  if (!male && !female) throw InvalidInput("household " + row.household_id + " has no members");
  for (const Agent* a : {male, female}) {
    if (a && (a->work_hours > kWeeklyHours || a->work_hours < 0.0))
      throw InvalidInput("agent " + a->id + ": work_hours outside [0, 112]");
  }
  const HouseholdType type = male && female ? HouseholdType::Couple : HouseholdType::Single;
  const int n_children = male ? male->n_children : female->n_children;
  const double children = impute_children_expenditure(type, n_children, row.total_expenditure);
  const double adult = row.total_expenditure - children;
  const double big_share = row.big_decision_share.value_or(options.big_decision_share);
  if (big_share < 0.0 || big_share > 1.0)
    throw InvalidInput("household " + row.household_id + ": big_decision_share outside [0, 1]");

  HouseholdBundle b;
  b.leisure_m = male ? male->leisure() : 0.0;
  b.leisure_w = female ? female->leisure() : 0.0;
  b.private_total = adult / 2.0;
  b.public_total = adult / 2.0;
  b.assignable_m = row.assignable_private_m;
  b.assignable_w = row.assignable_private_w;
  b.child_total = children;
  if (options.model == Regime::JointCustody) {
    b.child_big = big_share * children;
    b.child_daily = children - *b.child_big;
  }
  return b;
}

double full_expenditure(const Household& household, std::span<const Agent* const> members) {
  double value = household.total_expenditure;
  for (const Agent* a : members) value += a->wage * a->leisure();
  return value;
}

double household_nonlabor_income(double full_expenditure, std::span<const double> potential_labor_incomes) {
  double value = full_expenditure;
  for (double y : potential_labor_incomes) value -= y;
  return value;
}

PriceIncomeGrid compute_incomes(std::span<const Agent> agents, std::span<const Household> households,
                                bool truncate_negative_nonlabor) {
  std::map<std::string, const Agent*> by_id;
  for (const Agent& a : agents) by_id[a.id] = &a;
  PriceIncomeGrid grid;
  for (const Household& h : households) {
    std::vector<const Agent*> members;
    std::vector<double> labor;
    for (const auto& id : {h.male_id, h.female_id}) {
      if (!id) continue;
      auto it = by_id.find(*id);
      if (it == by_id.end()) throw InvalidInput("household " + h.id + " references unknown agent " + *id);
      members.push_back(it->second);
      labor.push_back(it->second->potential_labor_income());
    }
    double nonlabor = household_nonlabor_income(full_expenditure(h, members), labor);
    if (truncate_negative_nonlabor) nonlabor = std::max(0.0, nonlabor);
    grid.nonlabor[h.id] = nonlabor;
  }
  return grid;
}

double compute_child_support(const Agent& male, const ChildSupportSchedule& schedule, ModelKind model) {
  if (model.is_joint()) throw ModelMismatch("child support transfers exist only under sole custody");
  if (male.gender != Gender::Male) throw Unsupported("only fathers are modelled as non-custodians");
  return schedule.amount(male.n_children, male.potential_labor_income());
}

std::vector<MarriageMarket> partition_markets(std::span<const Agent> agents, std::span<const Household> households) {
  std::map<std::string, const Agent*> by_id;
  std::map<std::string, MarriageMarket> markets;
  for (const Agent& a : agents) {
    by_id[a.id] = &a;
    MarriageMarket& m = markets[a.region];
    m.region = a.region;
    m.agents.push_back(a);
  }
  for (const Agent& a : agents) {
    if (!a.spouse_id) continue;
    auto it = by_id.find(*a.spouse_id);
    if (it != by_id.end() && it->second->region != a.region)
      throw InconsistentRegion("spouses " + a.id + " and " + it->first + " live in different regions");
  }
  for (const Household& h : households) {
    std::optional<std::string> region;
    for (const auto& id : {h.male_id, h.female_id}) {
      if (!id) continue;
      auto it = by_id.find(*id);
      if (it == by_id.end()) throw InvalidInput("household " + h.id + " references unknown agent " + *id);
      if (region && *region != it->second->region)
        throw InconsistentRegion("household " + h.id + " spans regions " + *region + " and " + it->second->region);
      region = it->second->region;
    }
    if (!region) throw InvalidInput("household " + h.id + " has no members");
    markets[*region].households.push_back(h);
  }
  std::vector<MarriageMarket> out;
  out.reserve(markets.size());
  for (auto& [region, m] : markets) out.push_back(std::move(m));
  return out;
}

double quantile(std::vector<double> values, double probability) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  if (probability < 0.0 || probability > 1.0) throw InvalidInput("quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = probability * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

bool AgeWindow::contains(double age_gap) const {
  // Closed interval; the slack absorbs rounding in interpolated endpoints.
  constexpr double kSlack = 1e-9;
  return age_gap >= lower - kSlack && age_gap <= upper + kSlack;
}

AgeWindow age_window(const MarriageMarket& market, std::pair<double, double> band) {
  MarketIndex index(market);
  std::vector<double> gaps;
  for (const Household* h : index.couples())
    gaps.push_back(index.agent(*h->male_id).age - index.agent(*h->female_id).age);
  if (gaps.empty()) throw EmptyMarket("market " + market.region + " has no matched couples");
  return {quantile(gaps, band.first), quantile(gaps, band.second)};
}

ConsiderationSets build_consideration_sets(const MarriageMarket& market, const AgeWindow& window) {
  ConsiderationSets sets;
  std::vector<const Agent*> men, women;
  for (const Agent& a : market.agents) (a.gender == Gender::Male ? men : women).push_back(&a);
  for (const Agent& a : market.agents) sets[a.id];
  for (const Agent* m : men) {
    for (const Agent* w : women) {
      if (m->spouse_id == w->id || w->spouse_id == m->id) continue;
      if (!window.contains(m->age - w->age)) continue;
      sets[m->id].push_back(w->id);
      sets[w->id].push_back(m->id);
    }
  }
  for (auto& [id, list] : sets) std::sort(list.begin(), list.end());
  return sets;
}

ConsiderationSets build_consideration_sets(const MarriageMarket& market, std::pair<double, double> band) {
  return build_consideration_sets(market, age_window(market, band));
}

Config parse_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInput("config: expected a JSON object");
  Config c;
  auto pair_of = [](const nlohmann::json& v, const char* key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw InvalidInput(std::string("config: ") + key + " must be a two-element numeric array");
    return std::pair<double, double>{v[0].get<double>(), v[1].get<double>()};
  };
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "model") {
        c.model = parse_regime(value.get<std::string>());
      } else if (key == "big_decision_share") {
        c.big_decision_share = value.get<double>();
      } else if (key == "nonlabor_band") {
        auto [lo, hi] = pair_of(value, "nonlabor_band");
        c.nonlabor_band = {lo, hi};
      } else if (key == "percentile_band") {
        c.percentile_band = pair_of(value, "percentile_band");
      } else if (key == "truncate_nonlabor") {
        c.truncate_negative_nonlabor = value.get<bool>();
      } else if (key == "trim_outliers") {
        c.trim_outliers = value.get<bool>();
      } else {
        throw InvalidInput("config: unknown key " + key);
      }
    }
  } catch (const nlohmann::json::type_error& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  if (c.big_decision_share < 0.0 || c.big_decision_share > 1.0)
    throw InvalidInput("config: big_decision_share outside [0, 1]");
  const auto [plo, phi] = c.percentile_band;
  if (!(0.0 <= plo && plo <= phi && phi <= 1.0)) throw InvalidInput("config: percentile_band must be ordered in [0, 1]");
  const auto& nb = c.nonlabor_band;
  if (!(0.0 <= nb.lower && nb.lower <= 0.5 && 0.5 <= nb.upper && nb.upper <= 1.0))
    throw InvalidInput("config: nonlabor_band must satisfy 0 <= lower <= 0.5 <= upper <= 1");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  auto in = open(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

Result run(std::span<const Agent> agents, std::span<const HouseholdRow> rows, const Config& config) {
  Result result;
  std::map<std::string, const Agent*> by_id;
  for (const Agent& a : agents)
    if (!by_id.emplace(a.id, &a).second) throw InvalidInput("duplicate agent id " + a.id);

  std::set<std::string> placed;
  std::vector<Household> households;
  std::set<std::string> household_ids;
  for (const HouseholdRow& row : rows) {
    if (!household_ids.insert(row.household_id).second)
      throw InvalidInput("duplicate household id " + row.household_id);
    const Agent* male = nullptr;
    const Agent* female = nullptr;
    for (const std::string& id : row.member_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw InvalidInput("household " + row.household_id + " references unknown agent " + id);
      if (!placed.insert(id).second) throw InvalidInput("agent " + id + " belongs to two households");
      const Agent*& slot = it->second->gender == Gender::Male ? male : female;
      if (slot) throw InvalidInput("household " + row.household_id + " has two members of the same gender");
      slot = it->second;
    }

    std::string reason;
    for (const Agent* a : {male, female}) {
      if (!a) continue;
      if (a->work_hours < kMinWorkHours || a->work_hours > kWeeklyHours)
        reason = "agent " + a->id + " works outside [10, 112] hours";
      else if (a->age < kMinAge || a->age > kMaxAge)
        reason = "agent " + a->id + " is outside the age range [25, 65]";
      if (!reason.empty()) break;
    }
    if (!reason.empty()) {
      result.dropped.emplace_back(row.household_id, reason);
      continue;
    }

    Household h;
    h.id = row.household_id;
    if (male) h.male_id = male->id;
    if (female) h.female_id = female->id;
    h.total_expenditure = row.total_expenditure;
    h.big_decision_share = row.big_decision_share;
    h.bundle = build_bundle(row, male, female, {config.model, config.big_decision_share});
    households.push_back(std::move(h));
  }
  for (const Agent& a : agents)
    if (!placed.count(a.id)) throw InvalidInput("agent " + a.id + " belongs to no household");

  if (config.trim_outliers) {
    PriceIncomeGrid incomes = compute_incomes(agents, households);
    std::vector<double> wages, nonlabor;
    for (const Household& h : households) {
      for (const auto& id : {h.male_id, h.female_id})
        if (id) wages.push_back(by_id.at(*id)->wage);
      nonlabor.push_back(incomes.nonlabor_of(h.id));
    }
    if (!households.empty()) {
      const auto [plo, phi] = config.percentile_band;
      const double wage_lo = quantile(wages, plo), wage_hi = quantile(wages, phi);
      const double nl_lo = quantile(nonlabor, plo), nl_hi = quantile(nonlabor, phi);
      std::vector<Household> kept;
      for (Household& h : households) {
        bool out = false;
        for (const auto& id : {h.male_id, h.female_id}) {
          if (!id) continue;
          double w = by_id.at(*id)->wage;
          out = out || w < wage_lo || w > wage_hi;
        }
        double nl = incomes.nonlabor_of(h.id);
        if (nl < nl_lo || nl > nl_hi) out = true;
        if (out) result.dropped.emplace_back(h.id, "wage or non-labor income outside trimming percentiles");
        else kept.push_back(std::move(h));
      }
      households = std::move(kept);
    }
  }

  std::vector<Agent> kept_agents;
  std::set<std::string> members;
  for (const Household& h : households)
    for (const auto& id : {h.male_id, h.female_id})
      if (id) members.insert(*id);
  for (const Agent& a : agents)
    if (members.count(a.id)) kept_agents.push_back(a);

  for (MarriageMarket& market : partition_markets(kept_agents, households)) {
    market.grid = compute_incomes(market.agents, market.households, config.truncate_negative_nonlabor);
    market.nonlabor_band = config.nonlabor_band;
    for (const auto& [id, value] : market.grid.nonlabor)
      if (value < 0.0) result.notes.push_back("household " + id + " has negative non-labor income " + std::to_string(value));
    bool has_couple = std::any_of(market.households.begin(), market.households.end(),
                                  [](const Household& h) { return h.is_couple(); });
    if (!has_couple) {
      result.notes.push_back("region " + market.region + " has no matched couples and was skipped");
      continue;
    }
    market.consideration = build_consideration_sets(market, config.percentile_band);
    result.markets.push_back(std::move(market));
  }
  return result;
}

}  // namespace stablehh::ingest
