#include "stablehh/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "stablehh/errors.hpp"
#include "stablehh/simplex.hpp"

namespace stablehh::lp {

namespace {

std::vector<Term> merge_terms(std::vector<Term> terms) {
  std::map<VarId, double> merged;
  for (const Term& t : terms) merged[t.var] += t.coef;
  std::vector<Term> out;
  out.reserve(merged.size());
  for (const auto& [var, coef] : merged)
    if (coef != 0.0) out.push_back({var, coef});
  return out;
}

}  // namespace

VarId LinearProgram::add_variable(std::string name, double lower, double upper) {
  variables_.push_back({std::move(name), lower, upper});
  return VarId{static_cast<std::uint32_t>(variables_.size() - 1)};
}

std::size_t LinearProgram::add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
  constraints_.push_back({std::move(name), merge_terms(std::move(terms)), sense, rhs});
  return constraints_.size() - 1;
}

void LinearProgram::set_objective(std::vector<Term> terms, Direction direction) {
  objective_ = {merge_terms(std::move(terms)), direction};
}

void LinearProgram::set_bounds(VarId var, double lower, double upper) {
  Variable& v = variables_.at(var.index);
  v.lower = lower;
  v.upper = upper;
}

void LinearProgram::validate() const {
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const Variable& v = variables_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper || v.lower == kInf || v.upper == -kInf)
      throw InvalidInput("variable '" + v.name + "' has invalid bounds");
  }
  auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
    for (const Term& t : terms) {
      if (t.var.index >= variables_.size()) throw InvalidInput(where + " references an undeclared variable");
      if (!std::isfinite(t.coef)) throw InvalidInput(where + " has a non-finite coefficient");
    }
  };
  for (const Constraint& c : constraints_) {
    check_terms(c.terms, "constraint '" + c.name + "'");
    if (!std::isfinite(c.rhs)) throw InvalidInput("constraint '" + c.name + "' has a non-finite right-hand side");
  }
  check_terms(objective_.terms, "objective");
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

double activity(const Constraint& row, std::span<const double> values) {
  double sum = 0.0;
  for (const Term& t : row.terms) sum += t.coef * values[t.var.index];
  return sum;
}

namespace {

double row_violation(const Constraint& c, double act) {
  switch (c.sense) {
    case Sense::LessEqual: return act - c.rhs;
    case Sense::GreaterEqual: return c.rhs - act;
    case Sense::Equal: return std::abs(act - c.rhs);
  }
  return 0.0;
}

double residual(const LinearProgram& lp, std::span<const double> values, bool scaled) {
  if (values.size() != lp.num_variables())
    throw InvalidInput("candidate has " + std::to_string(values.size()) + " values, program has " +
                       std::to_string(lp.num_variables()) + " variables");
  bool any = false;
  double worst = 0.0;
  auto take = [&](double v) {
    worst = any ? std::max(worst, v) : v;
    any = true;
  };
  for (const Constraint& c : lp.constraints()) {
    double v = row_violation(c, activity(c, values));
    if (scaled) {
      double big = 0.0;
      for (const Term& t : c.terms) big = std::max(big, std::abs(t.coef));
      if (big > 0.0) v /= big;
    }
    take(v);
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const Variable& var = lp.variables()[j];
    if (var.lower > -kInf) take(var.lower - values[j]);
    if (var.upper < kInf) take(values[j] - var.upper);
  }
  return worst;
}

}  // namespace

double check_feasibility(const LinearProgram& lp, std::span<const double> values) {
  return residual(lp, values, false);
}

double scaled_residual(const LinearProgram& lp, std::span<const double> values) {
  return residual(lp, values, true);
}

const Backend& default_backend() {
  static const SimplexBackend backend = [] {
    SimplexOptions options;
    if (const char* env = std::getenv("STABLEHH_TOL")) {
      char* end = nullptr;
      double tol = std::strtod(env, &end);
      if (end != env && tol > 0.0 && std::isfinite(tol)) options.feasibility_tol = tol;
    }
    return SimplexBackend(options);
  }();
  return backend;
}

Solution solve(const LinearProgram& lp) { return default_backend().solve(lp); }

Solution solve(const LinearProgram& lp, const Backend& backend) { return backend.solve(lp); }

}  // namespace stablehh::lp
