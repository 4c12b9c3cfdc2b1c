#include "triangulation.hpp"

#include "eigentop/error.hpp"
#include "predicates.hpp"

#include <algorithm>

namespace eigentop::geometry::detail {

using predicates::incircle;
using predicates::orient2d;

Triangulation::Triangulation(Point lo, Point hi)
{
  const Point c = 0.5 * (lo + hi);
  const double s = std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
  m_points = {{c.x - 40.0 * s, c.y - 30.0 * s}, {c.x + 40.0 * s, c.y - 30.0 * s}, {c.x, c.y + 40.0 * s}};
  m_vertex_tri = {0, 0, 0};
  Tri t;
  t.v = {0, 1, 2};
  t.alive = true;
  m_tris.push_back(t);
}

int Triangulation::new_tri()
{
  if (!m_free.empty()) {
    const int t = m_free.back();
    m_free.pop_back();
    m_tris[t] = Tri{};
    m_tris[t].alive = true;
    return t;
  }
  m_tris.push_back(Tri{});
  m_tris.back().alive = true;
  return static_cast<int>(m_tris.size()) - 1;
}

int Triangulation::locate(Point p, int start, std::array<int, 2>* crossed) const
{
  int t = (start >= 0 && start < static_cast<int>(m_tris.size()) && m_tris[start].alive) ? start : m_last;
  if (!m_tris[t].alive) {
    t = -1;
    for (std::size_t i = 0; i < m_tris.size(); ++i)
      if (m_tris[i].alive) {
        t = static_cast<int>(i);
        break;
      }
  }
  const std::size_t budget = 4 * m_tris.size() + 64;
  int rotate = 0;
  for (std::size_t step = 0; step < budget; ++step) {
    const Tri& tri = m_tris[t];
    int next = -2;
    for (int k = 0; k < 3; ++k) {
      const int i = (k + rotate) % 3;
      const int a = tri.v[(i + 1) % 3];
      const int b = tri.v[(i + 2) % 3];
      if (orient2d(m_points[a], m_points[b], p) < 0) {
        if (crossed && is_constrained(a, b)) {
          *crossed = {a, b};
          return t;
        }
        next = tri.n[i];
        break;
      }
    }
    if (next == -2)
      return t;
    if (next < 0)
      return -1;
    t = next;
    rotate = (rotate + 1) % 3;
  }
  // The walk cycled; fall back to an exhaustive search.
  for (std::size_t i = 0; i < m_tris.size(); ++i) {
    const Tri& tri = m_tris[i];
    if (!tri.alive)
      continue;
    if (orient2d(m_points[tri.v[0]], m_points[tri.v[1]], p) >= 0 &&
        orient2d(m_points[tri.v[1]], m_points[tri.v[2]], p) >= 0 &&
        orient2d(m_points[tri.v[2]], m_points[tri.v[0]], p) >= 0)
      return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> Triangulation::cavity(Point p, int start) const
{
  std::vector<int> cav{start};
  std::unordered_set<int> in{start};
  for (std::size_t q = 0; q < cav.size(); ++q) {
    const Tri& tri = m_tris[cav[q]];
    for (int i = 0; i < 3; ++i) {
      const int u = tri.n[i];
      if (u < 0 || in.count(u))
        continue;
      if (is_constrained(tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]))
        continue;
      const Tri& nb = m_tris[u];
      if (incircle(m_points[nb.v[0]], m_points[nb.v[1]], m_points[nb.v[2]], p) > 0) {
        in.insert(u);
        cav.push_back(u);
      }
    }
  }

  // Shrink until every cavity boundary edge is visible from p so the fan of
  // new triangles is valid even if the constrained triangulation is not Delaunay.
  for (;;) {
    int offender = -1;
    for (int c : cav) {
      const Tri& tri = m_tris[c];
      for (int i = 0; i < 3; ++i) {
        const int u = tri.n[i];
        if (u >= 0 && in.count(u))
          continue;
        if (orient2d(m_points[tri.v[(i + 1) % 3]], m_points[tri.v[(i + 2) % 3]], p) <= 0) {
          offender = c;
          break;
        }
      }
      if (offender >= 0)
        break;
    }
    if (offender < 0)
      break;
    if (offender == start)
      throw GeometryError("point lies on a constrained edge; split the segment instead");
    in.erase(offender);
    // Keep only the part still connected to the start triangle.
    std::vector<int> kept{start};
    std::unordered_set<int> seen{start};
    for (std::size_t q = 0; q < kept.size(); ++q) {
      const Tri& tri = m_tris[kept[q]];
      for (int i = 0; i < 3; ++i) {
        const int u = tri.n[i];
        if (u >= 0 && in.count(u) && !seen.count(u) && !is_constrained(tri.v[(i + 1) % 3], tri.v[(i + 2) % 3])) {
          seen.insert(u);
          kept.push_back(u);
        }
      }
    }
    cav = std::move(kept);
    in = std::move(seen);
  }
  return cav;
}

int Triangulation::insert(Point p, int hint, std::vector<int>* created_out)
{
  const int t = locate(p, hint);
  if (t < 0)
    throw GeometryError("point outside the triangulation bounding region");
  for (int v : m_tris[t].v)
    if (m_points[v] == p)
      return v;

  const std::vector<int> cav = cavity(p, t);
  std::unordered_set<int> in(cav.begin(), cav.end());

  struct Edge
  {
    int a, b, outside;
  };
  std::vector<Edge> boundary;
  for (int c : cav) {
    const Tri& tri = m_tris[c];
    for (int i = 0; i < 3; ++i) {
      const int u = tri.n[i];
      if (u >= 0 && in.count(u))
        continue;
      boundary.push_back({tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], u});
    }
  }
  for (int c : cav) {
    m_tris[c].alive = false;
    m_free.push_back(c);
  }

  const int pi = static_cast<int>(m_points.size());
  m_points.push_back(p);
  m_vertex_tri.push_back(-1);

  std::vector<std::pair<int, int>> by_first;  // a -> new triangle (a, b, p)
  std::vector<std::pair<int, int>> by_second; // b -> new triangle (a, b, p)
  std::vector<int> created;
  for (const Edge& e : boundary) {
    const int nt = new_tri();
    Tri& tri = m_tris[nt];
    tri.v = {e.a, e.b, pi};
    tri.n[2] = e.outside;
    if (e.outside >= 0) {
      Tri& out = m_tris[e.outside];
      for (int k = 0; k < 3; ++k) {
        if (out.v[k] != e.a && out.v[k] != e.b) {
          out.n[k] = nt;
          break;
        }
      }
    }
    by_first.emplace_back(e.a, nt);
    by_second.emplace_back(e.b, nt);
    created.push_back(nt);
    m_vertex_tri[e.a] = nt;
    m_vertex_tri[e.b] = nt;
  }
  auto find = [](const std::vector<std::pair<int, int>>& list, int v) {
    for (const auto& [key, tri] : list)
      if (key == v)
        return tri;
    throw GeometryError("inconsistent cavity boundary");
  };
  for (int nt : created) {
    Tri& tri = m_tris[nt];
    tri.n[0] = find(by_first, tri.v[1]);  // across (b, p)
    tri.n[1] = find(by_second, tri.v[0]); // across (p, a)
  }
  m_vertex_tri[pi] = created.front();
  m_last = created.front();
  if (created_out)
    *created_out = std::move(created);
  return pi;
}

bool Triangulation::has_edge(int a, int b) const
{
  const int t0 = m_vertex_tri[a];
  if (t0 < 0)
    return false;
  // Rotate around a in both directions.
  for (int dir = 0; dir < 2; ++dir) {
    int t = t0;
    do {
      const Tri& tri = m_tris[t];
      int j = 0;
      while (tri.v[j] != a)
        ++j;
      if (tri.v[(j + 1) % 3] == b || tri.v[(j + 2) % 3] == b)
        return true;
      t = dir == 0 ? tri.n[(j + 2) % 3] : tri.n[(j + 1) % 3];
    } while (t >= 0 && t != t0);
    if (t == t0)
      return false;
  }
  return false;
}

} // namespace eigentop::geometry::detail
