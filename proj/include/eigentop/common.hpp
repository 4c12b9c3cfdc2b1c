#pragma once

#include <string_view>

namespace eigentop {

enum class Objective
{
  Minimize,
  Maximize
};

/// Conductivity: -div(rho grad u) = lambda u. Density: -lap u = mu sigma u.
enum class Problem
{
  Conductivity,
  Density
};

constexpr std::string_view to_string(Objective o)
{
  return o == Objective::Minimize ? "min" : "max";
}

constexpr std::string_view to_string(Problem p)
{
  return p == Problem::Conductivity ? "conductivity" : "density";
}

} // namespace eigentop
