#include "eigentop/error.hpp"
#include "eigentop/geometry.hpp"
#include "mesh_check.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace eigentop::geometry {

namespace detail {

namespace {

std::uint64_t edge_key(int a, int b)
{
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

std::string edge_name(int a, int b) { return "(" + std::to_string(a) + "," + std::to_string(b) + ")"; }

} // namespace

std::optional<MeshDefect> find_mesh_defect(const std::vector<Point>& vertices, const std::vector<Triangle>& triangles,
                                           const std::vector<BoundaryEdge>& boundary)
{
  using W = MeshDefect::Where;
  const int nv = static_cast<int>(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (!std::isfinite(vertices[i].x) || !std::isfinite(vertices[i].y))
      return MeshDefect{W::Vertex, i, "non-finite vertex coordinate"};
  if (triangles.empty())
    return MeshDefect{W::Global, 0, "mesh has no triangles"};

  // Directed edge -> owning triangle; each directed edge may appear once.
  struct EdgeUse
  {
    int count = 0;
    std::size_t first_triangle = 0;
    int forward = 0; // uses with a < b orientation
  };
  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(triangles.size() * 2);
  std::vector<char> used(vertices.size(), 0);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Triangle& tri = triangles[t];
    for (int v : tri)
      if (v < 0 || v >= nv)
        return MeshDefect{W::Triangle, t, "vertex index " + std::to_string(v) + " out of range"};
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      return MeshDefect{W::Triangle, t, "triangle repeats a vertex"};
    const Point a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
    const double area2 = cross(b - a, c - a);
    if (!(area2 > 0.0))
      return MeshDefect{W::Triangle, t, area2 == 0.0 ? "zero-area triangle" : "triangle is clockwise"};
    for (int k = 0; k < 3; ++k) {
      const int p = tri[k], q = tri[(k + 1) % 3];
      EdgeUse& e = edges[edge_key(p, q)];
      if (e.count == 0)
        e.first_triangle = t;
      ++e.count;
      e.forward += p < q ? 1 : 0;
      if (e.count > 2 || (e.count == 2 && e.forward != 1))
        return MeshDefect{W::Triangle, t, "non-conforming edge " + edge_name(p, q)};
    }
    for (int v : tri)
      used[v] = 1;
  }
  for (std::size_t i = 0; i < used.size(); ++i)
    if (!used[i])
      return MeshDefect{W::Vertex, i, "vertex " + std::to_string(i) + " belongs to no triangle"};

  std::unordered_map<std::uint64_t, std::size_t> tagged;
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const auto& be = boundary[i];
    const int a = be.v[0], b = be.v[1];
    if (a < 0 || a >= nv || b < 0 || b >= nv)
      return MeshDefect{W::BoundaryEdge, i, "boundary edge vertex out of range"};
    if (be.tag.empty())
      return MeshDefect{W::BoundaryEdge, i, "boundary edge without tag"};
    const auto it = edges.find(edge_key(a, b));
    if (it == edges.end() || it->second.count != 1)
      return MeshDefect{W::BoundaryEdge, i, "tagged edge " + edge_name(a, b) + " is not on the mesh boundary"};
    if (!tagged.emplace(edge_key(a, b), i).second)
      return MeshDefect{W::BoundaryEdge, i, "boundary edge " + edge_name(a, b) + " tagged twice"};
  }
  for (const auto& [key, use] : edges) {
    if (use.count == 1 && !tagged.count(key)) {
      const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
      return MeshDefect{W::Global, 0, "boundary edge " + edge_name(a, b) + " has no tag (non-conforming boundary)"};
    }
  }
  return std::nullopt;
}

} // namespace detail

void validate_mesh(const std::vector<Point>& vertices, const std::vector<Triangle>& triangles,
                   const std::vector<BoundaryEdge>& boundary)
{
  if (const auto defect = detail::find_mesh_defect(vertices, triangles, boundary))
    throw GeometryError(defect->message);
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::vector<BoundaryEdge> boundary)
    : m_vertices(std::move(vertices)), m_triangles(std::move(triangles)), m_boundary(std::move(boundary))
{
  validate_mesh(m_vertices, m_triangles, m_boundary);
  m_areas.reserve(m_triangles.size());
  for (const Triangle& t : m_triangles) {
    const Point a = m_vertices[t[0]], b = m_vertices[t[1]], c = m_vertices[t[2]];
    m_areas.push_back(0.5 * cross(b - a, c - a));
  }
}

double Mesh::area() const
{
  double s = 0.0;
  for (double a : m_areas)
    s += a;
  return s;
}

double Mesh::max_element_area() const
{
  return m_areas.empty() ? 0.0 : *std::max_element(m_areas.begin(), m_areas.end());
}

double Mesh::max_edge_length() const
{
  double m = 0.0;
  for (const Triangle& t : m_triangles)
    for (int k = 0; k < 3; ++k)
      m = std::max(m, distance(m_vertices[t[k]], m_vertices[t[(k + 1) % 3]]));
  return m;
}

Point Mesh::centroid(std::size_t t) const
{
  const Triangle& tri = m_triangles[t];
  const Point a = m_vertices[tri[0]], b = m_vertices[tri[1]], c = m_vertices[tri[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

std::set<std::string> Mesh::tags() const
{
  std::set<std::string> out;
  for (const auto& e : m_boundary)
    out.insert(e.tag);
  return out;
}

std::vector<bool> Mesh::boundary_vertex_mask() const
{
  std::vector<bool> mask(m_vertices.size(), false);
  for (const auto& e : m_boundary) {
    mask[e.v[0]] = true;
    mask[e.v[1]] = true;
  }
  return mask;
}

Mesh Mesh::retagged(const std::function<std::string(const BoundaryEdge&, Point, Point)>& tagger) const
{
  std::vector<BoundaryEdge> edges = m_boundary;
  for (auto& e : edges)
    e.tag = tagger(e, m_vertices[e.v[0]], m_vertices[e.v[1]]);
  return Mesh(m_vertices, m_triangles, std::move(edges));
}

EdgePredicate bottom_side_predicate(double y_level, double tolerance)
{
  return [=](Point a, Point b) { return std::abs(a.y - y_level) <= tolerance && std::abs(b.y - y_level) <= tolerance; };
}

Mesh structured_rectangle(Point lower, Point upper, int nx, int ny)
{
  if (nx < 1 || ny < 1 || !(upper.x > lower.x) || !(upper.y > lower.y))
    throw GeometryError("structured rectangle needs a positive box and at least one cell per side");
  std::vector<Point> vs;
  vs.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      vs.push_back({lower.x + (upper.x - lower.x) * i / nx, lower.y + (upper.y - lower.y) * j / ny});
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
      }
    }
  std::vector<BoundaryEdge> edges;
  for (int i = 0; i < nx; ++i) {
    edges.push_back({{id(i, 0), id(i + 1, 0)}, "boundary"});
    edges.push_back({{id(i + 1, ny), id(i, ny)}, "boundary"});
  }
  for (int j = 0; j < ny; ++j) {
    edges.push_back({{id(nx, j), id(nx, j + 1)}, "boundary"});
    edges.push_back({{id(0, j + 1), id(0, j)}, "boundary"});
  }
  return Mesh(std::move(vs), std::move(tris), std::move(edges));
}

Mesh tag_robin_side(const Mesh& mesh, const EdgePredicate& predicate)
{
  std::size_t matched = 0;
  Mesh out = mesh.retagged([&](const BoundaryEdge&, Point a, Point b) {
    if (predicate(a, b)) {
      ++matched;
      return std::string("robin");
    }
    return std::string("dirichlet");
  });
  if (matched == 0)
    throw GeometryError("robin predicate matches no boundary edge");
  return out;
}

Mesh tag_robin_side(const Mesh& mesh)
{
  const double tol = 1e-9 * DomainSpec::square().diameter();
  return tag_robin_side(mesh, bottom_side_predicate(-std::numbers::pi, tol));
}

namespace {

bool in_triangle(Point a, Point b, Point c, Point p, double tol)
{
  return cross(b - a, p - a) >= -tol && cross(c - b, p - b) >= -tol && cross(a - c, p - c) >= -tol;
}

double triangle_distance(Point a, Point b, Point c, Point p)
{
  if (in_triangle(a, b, c, p, 0.0))
    return 0.0;
  auto seg = [&](Point u, Point v) {
    const Point d = v - u;
    const double t = std::clamp(dot(p - u, d) / dot(d, d), 0.0, 1.0);
    return distance(u + t * d, p);
  };
  return std::min({seg(a, b), seg(b, c), seg(c, a)});
}

} // namespace

PointLocator::PointLocator(const Mesh& mesh) : m_mesh(&mesh)
{
  const auto& vs = mesh.vertices();
  double x1 = -1e300, y1 = -1e300;
  m_x0 = m_y0 = 1e300;
  for (Point p : vs) {
    m_x0 = std::min(m_x0, p.x);
    m_y0 = std::min(m_y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  const double avg = mesh.area() / std::max<std::size_t>(1, mesh.num_triangles());
  m_cell = std::max(2.0 * std::sqrt(avg), 1e-12);
  m_nx = std::max(1, static_cast<int>(std::ceil((x1 - m_x0) / m_cell)) + 1);
  m_ny = std::max(1, static_cast<int>(std::ceil((y1 - m_y0) / m_cell)) + 1);
  m_cells.assign(static_cast<std::size_t>(m_nx) * m_ny, {});
  const auto& tris = mesh.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    double ax = 1e300, ay = 1e300, bx = -1e300, by = -1e300;
    for (int v : tris[t]) {
      ax = std::min(ax, vs[v].x);
      ay = std::min(ay, vs[v].y);
      bx = std::max(bx, vs[v].x);
      by = std::max(by, vs[v].y);
    }
    const int i0 = static_cast<int>((ax - m_x0) / m_cell), i1 = static_cast<int>((bx - m_x0) / m_cell);
    const int j0 = static_cast<int>((ay - m_y0) / m_cell), j1 = static_cast<int>((by - m_y0) / m_cell);
    for (int j = j0; j <= std::min(j1, m_ny - 1); ++j)
      for (int i = i0; i <= std::min(i1, m_nx - 1); ++i)
        m_cells[static_cast<std::size_t>(j) * m_nx + i].push_back(static_cast<int>(t));
  }
}

int PointLocator::locate(Point p) const
{
  const int i = static_cast<int>(std::floor((p.x - m_x0) / m_cell));
  const int j = static_cast<int>(std::floor((p.y - m_y0) / m_cell));
  if (i < 0 || j < 0 || i >= m_nx || j >= m_ny)
    return -1;
  const auto& vs = m_mesh->vertices();
  const auto& tris = m_mesh->triangles();
  const double tol = 1e-12 * m_cell * m_cell;
  for (int t : m_cells[static_cast<std::size_t>(j) * m_nx + i]) {
    const Triangle& tri = tris[t];
    if (in_triangle(vs[tri[0]], vs[tri[1]], vs[tri[2]], p, tol))
      return t;
  }
  return -1;
}

int PointLocator::locate_or_nearest(Point p) const
{
  const int t = locate(p);
  if (t >= 0)
    return t;
  const auto& vs = m_mesh->vertices();
  const auto& tris = m_mesh->triangles();
  double best = std::numeric_limits<double>::infinity();
  int best_t = -1;
  for (std::size_t k = 0; k < tris.size(); ++k) {
    const double d = triangle_distance(vs[tris[k][0]], vs[tris[k][1]], vs[tris[k][2]], p);
    if (d < best) {
      best = d;
      best_t = static_cast<int>(k);
    }
  }
  return best_t;
}

} // namespace eigentop::geometry
