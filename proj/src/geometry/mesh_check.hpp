#pragma once

#include "eigentop/geometry.hpp"

#include <optional>
#include <string>

namespace eigentop::geometry::detail {

struct MeshDefect
{
  enum class Where { Vertex, Triangle, BoundaryEdge, Global };
  Where where = Where::Global;
  std::size_t index = 0;
  std::string message;
};

std::optional<MeshDefect> find_mesh_defect(const std::vector<Point>& vertices, const std::vector<Triangle>& triangles,
                                           const std::vector<BoundaryEdge>& boundary);

} // namespace eigentop::geometry::detail
