#pragma once

#include <stdexcept>
#include <string>

namespace haptosim {

// Base of every error thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, mesh specification or configuration text.
class ConfigError : public Error
{
public:
  using Error::Error;
};

// A pointwise function produced a non-finite value at a mesh node.
class InterpolationError : public Error
{
public:
  InterpolationError(const std::string &what, std::size_t node)
    : Error(what)
    , node_(node)
  {}

  std::size_t
  node() const noexcept
  {
    return node_;
  }

private:
  std::size_t node_;
};

// Degenerate element, non-finite coefficients or mesh/field mismatch.
class AssemblyError : public Error
{
public:
  using Error::Error;
};

// Malformed linear-algebra input (dimension mismatch, non-finite entries).
class InputError : public Error
{
public:
  using Error::Error;
};

// The linear solver could not meet the residual contract.
class SolverError : public Error
{
public:
  SolverError(const std::string &what, double residual)
    : Error(what)
    , residual_(residual)
  {}

  double
  residual() const noexcept
  {
    return residual_;
  }

private:
  double residual_;
};

class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace haptosim
