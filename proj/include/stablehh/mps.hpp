#pragma once

// Fixed-format MPS export for cross-checking programs with external solvers.

#include <iosfwd>
#include <string>
#include <string_view>

#include "stablehh/lp.hpp"

namespace stablehh::lp {

/// Writes `lp` in fixed MPS. Rows are named R0000001.., columns C0000001..,
/// the objective row OBJ. Fixed MPS has no sense marker, so a maximization is
/// written as the minimization of the negated objective and flagged by a
/// comment line. Numbers are rendered in at most 12 characters.
void write_mps(const LinearProgram& lp, std::ostream& out, std::string_view name = "STABLEHH");
std::string to_mps(const LinearProgram& lp, std::string_view name = "STABLEHH");

/// Shortest rendering of `value` that fits an MPS numeric field (12 chars).
std::string format_mps_number(double value);

}  // namespace stablehh::lp
