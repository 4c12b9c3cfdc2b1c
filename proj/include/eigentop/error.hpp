#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eigentop {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (bad key, out-of-range parameter).
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Invalid domain description or mesh.
class GeometryError : public Error
{
public:
  using Error::Error;
};

class MeshParseError : public GeometryError
{
public:
  MeshParseError(std::size_t line, const std::string& message)
      : GeometryError("line " + std::to_string(line) + ": " + message), m_line(line)
  {
  }

  std::size_t line() const noexcept { return m_line; }

private:
  std::size_t m_line = 0;
};

/// Solver failure: non-convergence, bracket failure, divergence.
class NumericalError : public Error
{
public:
  using Error::Error;
};

} // namespace eigentop
