#include <fstream>
#include <sstream>

#include "json.hpp"
#include "json_support.hpp"
#include "stablehh/errors.hpp"
#include "stablehh/serialization.hpp"

namespace stablehh::io {

namespace detail {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<std::string> read_optional_string(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

Json parse_document(std::string_view text, const char* collection) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.contains(collection))
    throw InvalidInput(std::string("expected an object with schema_version and ") + collection);
  if (doc.at("schema_version") != kSchemaVersion)
    throw InvalidInput("unsupported schema_version " + doc.at("schema_version").dump());
  return doc;
}

std::string dump_document(const char* collection, Json items) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc[collection] = std::move(items);
  return doc.dump(2) + "\n";
}

Json key_json(const OptionKey& key) {
  Json j;
  j["male"] = key.male;
  j["female"] = key.female;
  return j;
}

OptionKey key_from(const Json& j) { return {j.at("male").get<std::string>(), j.at("female").get<std::string>()}; }

Json model_json(ModelKind model) {
  Json j;
  j["regime"] = std::string(to_string(model.regime()));
  j["binding"] = model.binding();
  return j;
}

ModelKind model_from(const Json& j) {
  return ModelKind::make(parse_regime(j.at("regime").get<std::string>()), j.at("binding").get<bool>());
}

}  // namespace detail

using namespace detail;

namespace {

Json agent_json(const Agent& a) {
  Json j;
  j["id"] = a.id;
  j["gender"] = std::string(to_string(a.gender));
  j["wage"] = a.wage;
  j["work_hours"] = a.work_hours;
  j["age"] = a.age;
  j["region"] = a.region;
  j["n_children"] = a.n_children;
  j["spouse_id"] = a.spouse_id ? Json(*a.spouse_id) : Json(nullptr);
  return j;
}

Agent agent_from(const Json& j) {
  Agent a;
  a.id = j.at("id").get<std::string>();
  a.gender = parse_gender(j.at("gender").get<std::string>());
  a.wage = j.at("wage").get<double>();
  a.work_hours = j.at("work_hours").get<double>();
  a.age = j.at("age").get<double>();
  a.region = j.at("region").get<std::string>();
  a.n_children = j.at("n_children").get<int>();
  a.spouse_id = read_optional_string(j, "spouse_id");
  return a;
}

Json household_json(const Household& h) {
  const HouseholdBundle& b = h.bundle;
  Json bundle;
  bundle["leisure_m"] = b.leisure_m;
  bundle["leisure_w"] = b.leisure_w;
  bundle["private_total"] = b.private_total;
  bundle["assignable_m"] = optional_number(b.assignable_m);
  bundle["assignable_w"] = optional_number(b.assignable_w);
  bundle["public_total"] = b.public_total;
  bundle["child_daily"] = optional_number(b.child_daily);
  bundle["child_big"] = optional_number(b.child_big);
  bundle["child_total"] = optional_number(b.child_total);
  Json j;
  j["id"] = h.id;
  j["male_id"] = h.male_id ? Json(*h.male_id) : Json(nullptr);
  j["female_id"] = h.female_id ? Json(*h.female_id) : Json(nullptr);
  j["total_expenditure"] = h.total_expenditure;
  j["big_decision_share"] = optional_number(h.big_decision_share);
  j["bundle"] = std::move(bundle);
  return j;
}

Household household_from(const Json& j) {
  Household h;
  h.id = j.at("id").get<std::string>();
  h.male_id = read_optional_string(j, "male_id");
  h.female_id = read_optional_string(j, "female_id");
  h.total_expenditure = j.at("total_expenditure").get<double>();
  h.big_decision_share = read_optional(j, "big_decision_share");
  const Json& b = j.at("bundle");
  h.bundle.leisure_m = b.at("leisure_m").get<double>();
  h.bundle.leisure_w = b.at("leisure_w").get<double>();
  h.bundle.private_total = b.at("private_total").get<double>();
  h.bundle.assignable_m = read_optional(b, "assignable_m");
  h.bundle.assignable_w = read_optional(b, "assignable_w");
  h.bundle.public_total = b.at("public_total").get<double>();
  h.bundle.child_daily = read_optional(b, "child_daily");
  h.bundle.child_big = read_optional(b, "child_big");
  h.bundle.child_total = read_optional(b, "child_total");
  return h;
}

Json market_json(const MarriageMarket& m) {
  Json j;
  j["region"] = m.region;
  j["nonlabor_band"] = {{"lower", m.nonlabor_band.lower}, {"upper", m.nonlabor_band.upper}};
  Json agents = Json::array();
  for (const Agent& a : m.agents) agents.push_back(agent_json(a));
  j["agents"] = std::move(agents);
  Json households = Json::array();
  for (const Household& h : m.households) households.push_back(household_json(h));
  j["households"] = std::move(households);
  Json consideration = Json::object();
  for (const auto& [id, set] : m.consideration) consideration[id] = set;
  j["consideration"] = std::move(consideration);

  Json options = Json::array();
  for (const auto& [key, p] : m.grid.options) {
    Json o = key_json(key);
    o["y_labor"] = p.y_labor;
    o["private_price"] = p.private_price;
    o["public_price"] = p.public_price;
    o["income_scale"] = p.income_scale;
    options.push_back(std::move(o));
  }
  Json nonlabor = Json::object();
  for (const auto& [id, v] : m.grid.nonlabor) nonlabor[id] = v;
  Json child_price = Json::object();
  for (const auto& [id, v] : m.grid.child_price) child_price[id] = v;
  j["grid"] = {{"options", std::move(options)}, {"nonlabor", std::move(nonlabor)}, {"child_price", std::move(child_price)}};
  return j;
}

MarriageMarket market_from(const Json& j) {
  MarriageMarket m;
  m.region = j.at("region").get<std::string>();
  if (j.contains("nonlabor_band")) {
    m.nonlabor_band.lower = j.at("nonlabor_band").at("lower").get<double>();
    m.nonlabor_band.upper = j.at("nonlabor_band").at("upper").get<double>();
  }
  for (const Json& a : j.at("agents")) m.agents.push_back(agent_from(a));
  for (const Json& h : j.at("households")) m.households.push_back(household_from(h));
  if (j.contains("consideration"))
    for (const auto& [id, set] : j.at("consideration").items()) m.consideration[id] = set.get<std::vector<std::string>>();
  if (j.contains("grid")) {
    const Json& g = j.at("grid");
    for (const Json& o : g.at("options")) {
      OptionPricing p;
      p.y_labor = o.at("y_labor").get<double>();
      p.private_price = o.value("private_price", 1.0);
      p.public_price = o.value("public_price", 1.0);
      p.income_scale = o.value("income_scale", 1.0);
      m.grid.options[key_from(o)] = p;
    }
    for (const auto& [id, v] : g.at("nonlabor").items()) m.grid.nonlabor[id] = v.get<double>();
    if (g.contains("child_price"))
      for (const auto& [id, v] : g.at("child_price").items()) m.grid.child_price[id] = v.get<double>();
  }
  return m;
}

}  // namespace

std::string markets_to_json(std::span<const MarriageMarket> markets) {
  Json items = Json::array();
  for (const MarriageMarket& m : markets) items.push_back(market_json(m));
  return dump_document("markets", std::move(items));
}

std::vector<MarriageMarket> markets_from_json(std::string_view text) {
  const Json doc = parse_document(text, "markets");
  std::vector<MarriageMarket> out;
  try {
    for (const Json& m : doc.at("markets")) out.push_back(market_from(m));
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("bad market JSON: ") + e.what());
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace stablehh::io
