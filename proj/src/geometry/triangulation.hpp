#pragma once

#include "eigentop/geometry.hpp"

#include <array>
#include <cstdint>
#include <unordered_set>
#include <vector>

namespace eigentop::geometry::detail {

// Incremental Bowyer-Watson triangulation with constrained edges acting as
// cavity barriers. Vertices 0..2 belong to an enclosing super triangle.
class Triangulation
{
public:
  struct Tri
  {
    std::array<int, 3> v{};
    std::array<int, 3> n{-1, -1, -1}; // n[i] lies across the edge opposite v[i]
    bool alive = false;
  };

  Triangulation(Point lo, Point hi);

  const std::vector<Point>& points() const { return m_points; }
  const std::vector<Tri>& tris() const { return m_tris; }

  /// Inserts p and returns its vertex index; returns an existing index when p
  /// coincides with a vertex. `hint` is a triangle to start the walk from.
  int insert(Point p, int hint = -1, std::vector<int>* created = nullptr);

  /// Triangle containing p, walking from `start`. When `crossed` is non-null the
  /// walk records the first constrained edge it crosses and stops there.
  int locate(Point p, int start, std::array<int, 2>* crossed = nullptr) const;

  /// Triangles that would be replaced if p were inserted into triangle `start`.
  std::vector<int> cavity(Point p, int start) const;

  void constrain(int a, int b) { m_constrained.insert(key(a, b)); }
  void unconstrain(int a, int b) { m_constrained.erase(key(a, b)); }
  bool is_constrained(int a, int b) const { return m_constrained.count(key(a, b)) != 0; }

  bool has_edge(int a, int b) const;
  int last_triangle() const { return m_last; }
  bool is_super_vertex(int v) const { return v < 3; }

  static std::uint64_t key(int a, int b)
  {
    if (a > b)
      std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }

private:
  int new_tri();

  std::vector<Point> m_points;
  std::vector<Tri> m_tris;
  std::vector<int> m_free;
  std::vector<int> m_vertex_tri; // one incident live triangle per vertex
  std::unordered_set<std::uint64_t> m_constrained;
  int m_last = 0;
};

} // namespace eigentop::geometry::detail
