#include "stablehh/errors.hpp"

namespace stablehh {

namespace {

std::string with_location(const std::string& what, std::optional<std::size_t> row,
                          std::optional<std::size_t> column) {
  std::string out = what;
  if (row) out += " [row " + std::to_string(*row) + "]";
  if (column) out += " [column " + std::to_string(*column) + "]";
  return out;
}

}  // namespace

SolverFailure::SolverFailure(const std::string& what, std::optional<std::size_t> row,
                             std::optional<std::size_t> column)
    : Error(with_location(what, row, column)), row_(row), column_(column) {}

}  // namespace stablehh
