#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace stablehh {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain input data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An input file could not be opened.
class MissingFile : public Error {
 public:
  using Error::Error;
};

/// An operation was requested under a custody model that does not support it.
class ModelMismatch : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Spouses were recorded in different regions.
class InconsistentRegion : public Error {
 public:
  using Error::Error;
};

class EmptyMarket : public Error {
 public:
  using Error::Error;
};

/// The stability program has no solution even with every index at zero.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Income adjustment did not produce a dataset that is feasible at s = 1.
class AdjustmentError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown inside an LP backend. Carries the offending row and/or
/// column of the original program when one can be identified.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, std::optional<std::size_t> row = std::nullopt,
                std::optional<std::size_t> column = std::nullopt);

  std::optional<std::size_t> row() const { return row_; }
  std::optional<std::size_t> column() const { return column_; }

 private:
  std::optional<std::size_t> row_;
  std::optional<std::size_t> column_;
};

}  // namespace stablehh
