#include <cmath>
#include <cstdio>
#include <ostream>

#include "json_support.hpp"
#include "stablehh/errors.hpp"
#include "stablehh/serialization.hpp"

namespace stablehh::io {

using namespace detail;

namespace {

const char* kind_name(OptionKind k) {
  switch (k) {
    case OptionKind::MaleAlone: return "male_alone";
    case OptionKind::FemaleAlone: return "female_alone";
    case OptionKind::Pair: return "pair";
  }
  return "pair";
}

OptionKind kind_from(const std::string& s) {
  if (s == "male_alone") return OptionKind::MaleAlone;
  if (s == "female_alone") return OptionKind::FemaleAlone;
  if (s == "pair") return OptionKind::Pair;
  throw InvalidInput("unknown option kind '" + s + "'");
}

Json couple_allocation_json(const CoupleAllocation& c) {
  Json j;
  j["household_id"] = c.household_id;
  j["male_id"] = c.male_id;
  j["female_id"] = c.female_id;
  j["private_m"] = c.private_m;
  j["private_w"] = c.private_w;
  j["child_price_m"] = optional_number(c.child_price_m);
  j["child_price_w"] = optional_number(c.child_price_w);
  j["nonlabor_m"] = c.nonlabor_m;
  j["nonlabor_w"] = c.nonlabor_w;
  return j;
}

CoupleAllocation couple_allocation_from(const Json& j) {
  CoupleAllocation c;
  c.household_id = j.at("household_id").get<std::string>();
  c.male_id = j.at("male_id").get<std::string>();
  c.female_id = j.at("female_id").get<std::string>();
  c.private_m = j.at("private_m").get<double>();
  c.private_w = j.at("private_w").get<double>();
  c.child_price_m = read_optional(j, "child_price_m");
  c.child_price_w = read_optional(j, "child_price_w");
  c.nonlabor_m = j.at("nonlabor_m").get<double>();
  c.nonlabor_w = j.at("nonlabor_w").get<double>();
  return c;
}

Json pair_json(const PairAllocation& p) {
  Json j = key_json(p.key);
  j["public_price_m"] = p.public_price_m;
  j["public_price_w"] = p.public_price_w;
  return j;
}

PairAllocation pair_from(const Json& j) {
  return {key_from(j), j.at("public_price_m").get<double>(), j.at("public_price_w").get<double>()};
}

Json report_json(const StabilityReport& r) {
  Json j;
  j["region"] = r.region;
  j["model"] = model_json(r.model);
  j["split"] = std::string(to_string(r.split));
  j["objective"] = r.objective;
  j["max_residual"] = r.max_residual;
  j["indices_unique"] = r.indices_unique;
  Json options = Json::array();
  for (const OptionIndex& o : r.options) {
    Json e = key_json(o.option.key);
    e["kind"] = kind_name(o.option.kind);
    e["index"] = o.index;
    e["income"] = o.income;
    e["loss"] = o.loss;
    options.push_back(std::move(e));
  }
  j["options"] = std::move(options);
  Json couples = Json::array();
  for (const CoupleSummary& c : r.couples) {
    Json e;
    e["household_id"] = c.household_id;
    e["average_index"] = c.average_index;
    e["minimum_index"] = c.minimum_index;
    e["options"] = c.options;
    couples.push_back(std::move(e));
  }
  j["couples"] = std::move(couples);
  Json alloc_couples = Json::array();
  for (const CoupleAllocation& c : r.allocation.couples) alloc_couples.push_back(couple_allocation_json(c));
  Json alloc_pairs = Json::array();
  for (const PairAllocation& p : r.allocation.pairs) alloc_pairs.push_back(pair_json(p));
  j["allocation"] = {{"couples", std::move(alloc_couples)}, {"pairs", std::move(alloc_pairs)}};
  return j;
}

StabilityReport report_from(const Json& j) {
  StabilityReport r;
  r.region = j.at("region").get<std::string>();
  r.model = model_from(j.at("model"));
  r.split = parse_split_mode(j.at("split").get<std::string>());
  r.objective = j.at("objective").get<double>();
  r.max_residual = j.at("max_residual").get<double>();
  r.indices_unique = j.at("indices_unique").get<bool>();
  for (const Json& e : j.at("options")) {
    OptionIndex o;
    o.option = {key_from(e), kind_from(e.at("kind").get<std::string>())};
    o.index = e.at("index").get<double>();
    o.income = e.at("income").get<double>();
    o.loss = e.at("loss").get<double>();
    r.options.push_back(std::move(o));
  }
  for (const Json& e : j.at("couples")) {
    r.couples.push_back({e.at("household_id").get<std::string>(), e.at("average_index").get<double>(),
                         e.at("minimum_index").get<double>(), e.at("options").get<std::size_t>()});
  }
  const Json& alloc = j.at("allocation");
  for (const Json& c : alloc.at("couples")) r.allocation.couples.push_back(couple_allocation_from(c));
  for (const Json& p : alloc.at("pairs")) r.allocation.pairs.push_back(pair_from(p));
  return r;
}

Json interval_json(const Interval& i) { return Json::array({i.lower, i.upper}); }

Interval interval_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("interval must be a [lower, upper] pair");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

Json bounds_json(const BoundsReport& b) {
  Json j;
  j["region"] = b.region;
  j["model"] = model_json(b.model);
  j["denominator"] = std::string(to_string(b.denominator));
  Json couples = Json::array();
  for (const CoupleBounds& c : b.couples) {
    Json e;
    e["household_id"] = c.household_id;
    e["wage_ratio"] = c.wage_ratio;
    e["private_share"] = interval_json(c.private_share);
    e["sharing_rule"] = interval_json(c.sharing_rule);
    e["naive_private_share"] = interval_json(c.naive_private_share);
    e["naive_sharing_rule"] = interval_json(c.naive_sharing_rule);
    couples.push_back(std::move(e));
  }
  j["couples"] = std::move(couples);
  return j;
}

BoundsReport bounds_from(const Json& j) {
  BoundsReport b;
  b.region = j.at("region").get<std::string>();
  b.model = model_from(j.at("model"));
  const std::string denom = j.at("denominator").get<std::string>();
  if (denom == "full_income") b.denominator = Denominator::FullIncome;
  else if (denom == "expenditure") b.denominator = Denominator::Expenditure;
  else throw InvalidInput("unknown denominator '" + denom + "'");
  for (const Json& e : j.at("couples")) {
    CoupleBounds c;
    c.household_id = e.at("household_id").get<std::string>();
    c.wage_ratio = e.at("wage_ratio").get<double>();
    c.private_share = interval_from(e.at("private_share"));
    c.sharing_rule = interval_from(e.at("sharing_rule"));
    c.naive_private_share = interval_from(e.at("naive_private_share"));
    c.naive_sharing_rule = interval_from(e.at("naive_sharing_rule"));
    b.couples.push_back(std::move(c));
  }
  return b;
}

template <class T, class F>
std::vector<T> read_collection(std::string_view text, const char* collection, F&& from) {
  const Json doc = parse_document(text, collection);
  std::vector<T> out;
  try {
    for (const Json& item : doc.at(collection)) out.push_back(from(item));
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("bad ") + collection + " JSON: " + e.what());
  }
  return out;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  // Avoid "-0.0000" so equal results print identically.
  if (std::string_view(buf) == "-0.0000") return "0.0000";
  return buf;
}

}  // namespace

std::string reports_to_json(std::span<const StabilityReport> reports) {
  Json items = Json::array();
  for (const StabilityReport& r : reports) items.push_back(report_json(r));
  return dump_document("reports", std::move(items));
}

std::vector<StabilityReport> reports_from_json(std::string_view text) {
  return read_collection<StabilityReport>(text, "reports", report_from);
}

std::string bounds_to_json(std::span<const BoundsReport> bounds) {
  Json items = Json::array();
  for (const BoundsReport& b : bounds) items.push_back(bounds_json(b));
  return dump_document("bounds", std::move(items));
}

std::vector<BoundsReport> bounds_from_json(std::string_view text) {
  return read_collection<BoundsReport>(text, "bounds", bounds_from);
}

std::string truth_to_json(const oracle::HiddenTruth& truth) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = truth.seed;
  j["model"] = model_json(truth.model);
  Json couples = Json::array();
  for (const oracle::HiddenCouple& c : truth.couples) {
    Json e;
    e["household_id"] = c.household_id;
    e["private_m"] = c.private_m;
    e["private_w"] = c.private_w;
    e["child_price_m"] = optional_number(c.child_price_m);
    e["child_price_w"] = optional_number(c.child_price_w);
    e["nonlabor_m"] = c.nonlabor_m;
    e["nonlabor_w"] = c.nonlabor_w;
    e["kappa"] = c.kappa;
    e["public_price_w_own"] = c.public_price_w_own;
    e["private_share"] = c.private_share;
    e["sharing_rule"] = c.sharing_rule;
    couples.push_back(std::move(e));
  }
  j["couples"] = std::move(couples);
  Json pairs = Json::array();
  for (const PairAllocation& p : truth.pairs) pairs.push_back(pair_json(p));
  j["pairs"] = std::move(pairs);
  Json margins = Json::array();
  for (const auto& [key, m] : truth.margins) {
    Json e = key_json(key);
    e["margin"] = m;
    margins.push_back(std::move(e));
  }
  j["margins"] = std::move(margins);
  return j.dump(2) + "\n";
}

oracle::HiddenTruth truth_from_json(std::string_view text) {
  const Json j = parse_document(text, "couples");
  oracle::HiddenTruth t;
  try {
    t.seed = j.at("seed").get<std::uint64_t>();
    t.model = model_from(j.at("model"));
    for (const Json& e : j.at("couples")) {
      oracle::HiddenCouple c;
      c.household_id = e.at("household_id").get<std::string>();
      c.private_m = e.at("private_m").get<double>();
      c.private_w = e.at("private_w").get<double>();
      c.child_price_m = read_optional(e, "child_price_m");
      c.child_price_w = read_optional(e, "child_price_w");
      c.nonlabor_m = e.at("nonlabor_m").get<double>();
      c.nonlabor_w = e.at("nonlabor_w").get<double>();
      c.kappa = e.at("kappa").get<double>();
      c.public_price_w_own = e.at("public_price_w_own").get<double>();
      c.private_share = e.at("private_share").get<double>();
      c.sharing_rule = e.at("sharing_rule").get<double>();
      t.couples.push_back(std::move(c));
    }
    for (const Json& p : j.at("pairs")) t.pairs.push_back(pair_from(p));
    for (const Json& m : j.at("margins")) t.margins[key_from(m)] = m.at("margin").get<double>();
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("bad truth JSON: ") + e.what());
  }
  return t;
}

void write_stability_csv(std::ostream& out, std::span<const StabilityReport> reports) {
  out << "region,male,female,kind,index,income,loss\n";
  for (const StabilityReport& r : reports)
    for (const OptionIndex& o : r.options)
      out << r.region << ',' << o.option.key.male << ',' << o.option.key.female << ',' << kind_name(o.option.kind) << ','
          << fixed4(o.index) << ',' << fixed4(o.income) << ',' << fixed4(o.loss) << '\n';
}

void write_bounds_csv(std::ostream& out, std::span<const BoundsReport> bounds) {
  out << "couple_id,target,lower,upper,naive_lower,naive_upper\n";
  auto row = [&out](const std::string& id, const char* target, const Interval& stable, const Interval& naive) {
    out << id << ',' << target << ',' << fixed4(stable.lower) << ',' << fixed4(stable.upper) << ','
        << fixed4(naive.lower) << ',' << fixed4(naive.upper) << '\n';
  };
  for (const BoundsReport& b : bounds)
    for (const CoupleBounds& c : b.couples) {
      row(c.household_id, "private_share", c.private_share, c.naive_private_share);
      row(c.household_id, "sharing_rule", c.sharing_rule, c.naive_sharing_rule);
    }
}

void write_plot_data(std::ostream& out, std::span<const BoundsReport> bounds) {
  out << "couple_id,wage_ratio,log_wage_ratio,lower,upper\n";
  for (const BoundsReport& b : bounds)
    for (const CoupleBounds& c : b.couples) {
      if (!(c.wage_ratio > 0.0)) continue;
      out << c.household_id << ',' << fixed4(c.wage_ratio) << ',' << fixed4(std::log(c.wage_ratio)) << ','
          << fixed4(c.sharing_rule.lower) << ',' << fixed4(c.sharing_rule.upper) << '\n';
    }
}

}  // namespace stablehh::io
