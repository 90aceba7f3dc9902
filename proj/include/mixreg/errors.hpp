#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input data. Carries the offending row when known.
class IngestionError : public Error
{
public:
  static constexpr std::size_t no_row = static_cast<std::size_t>(-1);

  explicit IngestionError(const std::string& what, std::size_t row = no_row)
    : Error(what)
    , row_(row)
  {
  }

  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

/// Overflow or other loss of finiteness during a computation.
class NumericError : public Error
{
public:
  using Error::Error;
};

/// A least-squares design matrix is singular or too badly conditioned.
class DegenerateDesign : public Error
{
public:
  explicit DegenerateDesign(const std::string& what, double condition = 0.0)
    : Error(what)
    , condition_(condition)
  {
  }

  double condition_number() const noexcept { return condition_; }

private:
  double condition_;
};

/// The estimated parameter vector lies outside the domain where the
/// parameter maps exist (a guarded denominator vanished, or pi_n == 0).
class OutsideDomain : public Error
{
public:
  using Error::Error;
};

/// Invalid user configuration: unknown scenario, malformed known-component descriptor...
class ConfigError : public Error
{
public:
  using Error::Error;
};

} // namespace mixreg
