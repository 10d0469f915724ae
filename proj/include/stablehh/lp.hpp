#pragma once

// Linear-program carrier and solver contract.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stablehh::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarId {
  std::uint32_t index = 0;
  auto operator<=>(const VarId&) const = default;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

enum class Sense : std::uint8_t { LessEqual, Equal, GreaterEqual };
enum class Direction : std::uint8_t { Minimize, Maximize };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;  // one term per variable, no exact zeros
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

struct Objective {
  std::vector<Term> terms;
  Direction direction = Direction::Minimize;
};

class LinearProgram {
 public:
  VarId add_variable(std::string name, double lower, double upper);
  /// Duplicate variables in `terms` are merged; exact zeros dropped.
  std::size_t add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs);
  void set_objective(std::vector<Term> terms, Direction direction);
  void set_bounds(VarId var, double lower, double upper);

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Variable& variable(VarId v) const { return variables_.at(v.index); }
  const Objective& objective() const { return objective_; }

  /// Throws InvalidInput when a bound pair is crossed, a term references an
  /// undeclared variable, or a coefficient/right-hand side is not finite.
  void validate() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Objective objective_;
};

enum class Status : std::uint8_t { Optimal, Infeasible, Unbounded };

std::string_view to_string(Status s);

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> values;
  double objective_value = 0.0;
  /// Largest constraint or bound violation, each row divided by its largest
  /// absolute coefficient.
  double max_residual = 0.0;
  std::size_t iterations = 0;

  double value(VarId v) const { return values.at(v.index); }
  bool optimal() const { return status == Status::Optimal; }
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Solution solve(const LinearProgram& lp) const = 0;
};

/// Activity a.x of a constraint at `values`.
double activity(const Constraint& row, std::span<const double> values);

/// Largest signed violation over all constraints and bounds (<= 0 means
/// feasible; an empty program gives 0). Throws InvalidInput on a dimension
/// mismatch.
double check_feasibility(const LinearProgram& lp, std::span<const double> values);

/// Same as check_feasibility but each row's violation is divided by the row's
/// largest absolute coefficient; bound violations are taken as is.
double scaled_residual(const LinearProgram& lp, std::span<const double> values);

/// Solves with the default backend (bounded primal simplex; feasibility
/// tolerance overridable through STABLEHH_TOL).
Solution solve(const LinearProgram& lp);
Solution solve(const LinearProgram& lp, const Backend& backend);

const Backend& default_backend();

}  // namespace stablehh::lp
