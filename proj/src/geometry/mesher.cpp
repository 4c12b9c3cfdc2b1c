#include "eigentop/error.hpp"
#include "eigentop/geometry.hpp"
#include "predicates.hpp"
#include "triangulation.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

namespace eigentop::geometry {

namespace {

using detail::Triangulation;

constexpr double kMaxEdgeFactor = 1.3;
constexpr double kMaxRadiusEdgeRatio = 1.4142135623730951;
constexpr double kInteriorClearance = 0.55;

struct Segment
{
  int a = 0, b = 0;
  int curve = 0;
  double ta = 0.0, tb = 0.0;
  bool alive = true;
};

class Mesher
{
public:
  Mesher(const DomainSpec& spec, double h) : m_spec(spec), m_h(h), m_tri(bounds().first, bounds().second)
  {
    for (const Loop& loop : spec.loops)
      for (const Curve& c : loop.curves)
        m_curves.push_back(&c);
  }

  Mesh run()
  {
    discretize_boundary();
    insert_interior_lattice();
    recover_boundary();
    refine();
    return extract();
  }

private:
  std::pair<Point, Point> bounds() const
  {
    Point lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const Curve& c : m_spec.loops.at(0).curves) {
      if (c.shape == Curve::Shape::Segment) {
        for (Point p : {c.a, c.b}) {
          lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
          hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
      } else {
        lo = {std::min(lo.x, c.center.x - c.rx), std::min(lo.y, c.center.y - c.ry)};
        hi = {std::max(hi.x, c.center.x + c.rx), std::max(hi.y, c.center.y + c.ry)};
      }
    }
    return {lo, hi};
  }

  void discretize_boundary()
  {
    int curve_index = 0;
    for (std::size_t li = 0; li < m_spec.loops.size(); ++li) {
      const Loop& loop = m_spec.loops[li];
      if (loop.hole) {
        const auto pts = loop_extent(loop);
        if (pts < 2.0 * m_h)
          throw GeometryError("h = " + std::to_string(m_h) + " is too large to resolve hole " + std::to_string(li));
      }
      std::vector<int> verts;
      std::vector<std::pair<int, double>> owner; // (curve, parameter) of each vertex
      for (const Curve& c : loop.curves) {
        int n = std::max(1, static_cast<int>(std::ceil(c.length() / m_h - 1e-9)));
        if (c.shape == Curve::Shape::Ellipse)
          n = std::max(8, (n + 7) / 8 * 8);
        for (int i = 0; i < n; ++i) {
          const double t = static_cast<double>(i) / n;
          verts.push_back(m_tri.insert(c.at(t)));
          owner.emplace_back(curve_index, t);
        }
        ++curve_index;
      }
      for (std::size_t i = 0; i < verts.size(); ++i) {
        const std::size_t j = (i + 1) % verts.size();
        Segment s;
        s.a = verts[i];
        s.b = verts[j];
        s.curve = owner[i].first;
        s.ta = owner[i].second;
        s.tb = owner[j].first == owner[i].first && owner[j].second > owner[i].second ? owner[j].second : 1.0;
        add_segment(s);
      }
    }
  }

  static double loop_extent(const Loop& loop)
  {
    if (loop.curves.size() == 1 && loop.curves[0].shape == Curve::Shape::Ellipse)
      return 2.0 * std::min(loop.curves[0].rx, loop.curves[0].ry);
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Curve& c : loop.curves) {
      xmin = std::min(xmin, c.a.x);
      xmax = std::max(xmax, c.a.x);
      ymin = std::min(ymin, c.a.y);
      ymax = std::max(ymax, c.a.y);
    }
    return std::min(xmax - xmin, ymax - ymin);
  }

  void insert_interior_lattice()
  {
    const auto [lo, hi] = bounds();
    const Point c = m_spec.symmetry_center();
    const double dy = m_h * std::sqrt(3.0) / 2.0;
    const int j0 = static_cast<int>(std::floor((lo.y - c.y) / dy)) - 1;
    const int j1 = static_cast<int>(std::ceil((hi.y - c.y) / dy)) + 1;
    const int i0 = static_cast<int>(std::floor((lo.x - c.x) / m_h)) - 1;
    const int i1 = static_cast<int>(std::ceil((hi.x - c.x) / m_h)) + 1;
    for (int j = j0; j <= j1; ++j) {
      const double offset = (std::abs(j) % 2 == 1) ? 0.5 : 0.0;
      const bool forward = ((j - j0) % 2) == 0;
      for (int k = 0; k <= i1 - i0; ++k) {
        const int i = forward ? i0 + k : i1 - k;
        const Point p{c.x + (i + offset) * m_h, c.y + j * dy};
        if (!m_spec.contains(p) || m_spec.boundary_distance(p) < kInteriorClearance * m_h)
          continue;
        m_tri.insert(p);
      }
    }
  }

  void add_segment(const Segment& s)
  {
    m_segment_of[Triangulation::key(s.a, s.b)] = static_cast<int>(m_segments.size());
    m_segments.push_back(s);
  }

  // Splits a segment at the parameter midpoint on the exact curve.
  void split_segment(int si)
  {
    Segment s = m_segments[si];
    m_segments[si].alive = false;
    m_segment_of.erase(Triangulation::key(s.a, s.b));
    m_tri.unconstrain(s.a, s.b);
    const double tm = 0.5 * (s.ta + s.tb);
    const Curve& curve = *m_curves[s.curve];
    Point pm = curve.at(tm);
    if (curve.shape == Curve::Shape::Segment)
      pm = 0.5 * (m_tri.points()[s.a] + m_tri.points()[s.b]);
    const int m = m_tri.insert(pm);
    if (m == s.a || m == s.b)
      throw GeometryError("boundary segment cannot be split further");
    Segment left = s, right = s;
    left.b = m;
    left.tb = tm;
    right.a = m;
    right.ta = tm;
    add_segment(left);
    add_segment(right);
    if (m_tri.has_edge(left.a, left.b))
      m_tri.constrain(left.a, left.b);
    if (m_tri.has_edge(right.a, right.b))
      m_tri.constrain(right.a, right.b);
    ++m_splits;
    if (m_splits > 50 * static_cast<long>(m_segments.size()) + 100000)
      throw GeometryError("boundary recovery did not terminate");
  }

  void recover_boundary()
  {
    std::deque<int> pending;
    for (std::size_t i = 0; i < m_segments.size(); ++i)
      pending.push_back(static_cast<int>(i));
    while (!pending.empty()) {
      const int si = pending.front();
      pending.pop_front();
      if (!m_segments[si].alive)
        continue;
      const Segment& s = m_segments[si];
      if (m_tri.has_edge(s.a, s.b)) {
        m_tri.constrain(s.a, s.b);
        continue;
      }
      split_segment(si);
      pending.push_back(static_cast<int>(m_segments.size()) - 2);
      pending.push_back(static_cast<int>(m_segments.size()) - 1);
    }
    ensure_segments();
  }

  // Later insertions may break recovered segments; split until every segment is an edge.
  void ensure_segments()
  {
    for (int pass = 0; pass < 64; ++pass) {
      bool changed = false;
      for (std::size_t i = 0; i < m_segments.size(); ++i) {
        if (!m_segments[i].alive)
          continue;
        const Segment& s = m_segments[i];
        if (m_tri.has_edge(s.a, s.b)) {
          m_tri.constrain(s.a, s.b);
        } else {
          split_segment(static_cast<int>(i));
          changed = true;
        }
      }
      if (!changed)
        return;
    }
    throw GeometryError("boundary recovery did not converge");
  }

  // Parity flood fill: crossing a boundary segment toggles inside/outside.
  void classify()
  {
    const auto& tris = m_tri.tris();
    m_inside.assign(tris.size(), -1);
    int seed = -1;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (tris[t].alive && (tris[t].v[0] < 3 || tris[t].v[1] < 3 || tris[t].v[2] < 3)) {
        seed = static_cast<int>(t);
        break;
      }
    }
    if (seed < 0)
      throw GeometryError("triangulation lost its enclosing triangle");
    std::deque<int> queue{seed};
    m_inside[seed] = 0;
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      const auto& tri = tris[t];
      for (int i = 0; i < 3; ++i) {
        const int u = tri.n[i];
        if (u < 0)
          continue;
        const bool wall = m_tri.is_constrained(tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
        const int parity = wall ? 1 - m_inside[t] : m_inside[t];
        if (m_inside[u] < 0) {
          m_inside[u] = parity;
          queue.push_back(u);
        } else if (m_inside[u] != parity) {
          throw GeometryError("boundary segments do not form closed loops");
        }
      }
    }
  }

  bool is_bad(const Triangulation::Tri& tri) const
  {
    const auto& pts = m_tri.points();
    const Point a = pts[tri.v[0]], b = pts[tri.v[1]], c = pts[tri.v[2]];
    const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
    const double longest = std::max({la, lb, lc});
    const double shortest = std::min({la, lb, lc});
    if (longest > kMaxEdgeFactor * m_h)
      return true;
    const double area2 = std::abs(cross(b - a, c - a));
    const double radius = la * lb * lc / (2.0 * area2);
    return radius / shortest > kMaxRadiusEdgeRatio;
  }

  void refine()
  {
    for (int batch = 0; batch < 400; ++batch) {
      classify();
      const auto& tris = m_tri.tris();
      std::vector<std::pair<int, std::array<int, 3>>> bad;
      for (std::size_t t = 0; t < tris.size(); ++t)
        if (tris[t].alive && m_inside[t] == 1 && is_bad(tris[t]))
          bad.emplace_back(static_cast<int>(t), tris[t].v);
      if (bad.empty())
        return;

      std::set<int> encroached;
      for (const auto& [t, verts] : bad) {
        const auto& tri = m_tri.tris()[t];
        if (!tri.alive || tri.v != verts)
          continue;
        const auto& pts = m_tri.points();
        const Point cc = predicates::circumcenter(pts[verts[0]], pts[verts[1]], pts[verts[2]]);
        std::array<int, 2> crossed{-1, -1};
        const int loc = m_tri.locate(cc, t, &crossed);
        if (crossed[0] >= 0) {
          mark_encroached(crossed[0], crossed[1], encroached);
          continue;
        }
        if (loc < 0 || m_inside_of(loc) != 1)
          continue;
        bool blocked = false;
        for (int c : m_tri.cavity(cc, loc)) {
          const auto& ct = m_tri.tris()[c];
          for (int i = 0; i < 3; ++i) {
            const int a = ct.v[(i + 1) % 3], b = ct.v[(i + 2) % 3];
            if (!m_tri.is_constrained(a, b))
              continue;
            if (dot(pts[a] - cc, pts[b] - cc) < 0.0) {
              mark_encroached(a, b, encroached);
              blocked = true;
            }
          }
        }
        if (blocked)
          continue;
        std::vector<int> created;
        m_tri.insert(cc, loc, &created);
        m_inside.resize(m_tri.tris().size(), -1);
        for (int n : created)
          m_inside[n] = 1;
      }
      for (int si : encroached)
        if (m_segments[si].alive)
          split_segment(si);
      ensure_segments();
      if (m_tri.points().size() > 4000000)
        throw GeometryError("mesh refinement exceeded the vertex budget");
    }
    throw GeometryError("mesh refinement did not terminate");
  }

  int m_inside_of(int t) const { return t < static_cast<int>(m_inside.size()) ? m_inside[t] : -1; }

  void mark_encroached(int a, int b, std::set<int>& out) const
  {
    const auto it = m_segment_of.find(Triangulation::key(a, b));
    if (it != m_segment_of.end())
      out.insert(it->second);
  }

  Mesh extract()
  {
    classify();
    const auto& tris = m_tri.tris();
    const auto& pts = m_tri.points();
    std::vector<int> remap(pts.size(), -1);
    std::vector<char> used(pts.size(), 0);
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!tris[t].alive || m_inside[t] != 1)
        continue;
      for (int v : tris[t].v) {
        if (m_tri.is_super_vertex(v))
          throw GeometryError("domain triangle touches the enclosing triangle");
        used[v] = 1;
      }
    }
    std::vector<Point> vertices;
    for (std::size_t v = 0; v < pts.size(); ++v) {
      if (used[v]) {
        remap[v] = static_cast<int>(vertices.size());
        vertices.push_back(pts[v]);
      }
    }
    std::vector<Triangle> triangles;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (tris[t].alive && m_inside[t] == 1)
        triangles.push_back({remap[tris[t].v[0]], remap[tris[t].v[1]], remap[tris[t].v[2]]});
    }
    std::vector<BoundaryEdge> boundary;
    for (const Segment& s : m_segments) {
      if (!s.alive)
        continue;
      boundary.push_back({{remap[s.a], remap[s.b]}, m_curves[s.curve]->tag});
    }
    return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
  }

  const DomainSpec& m_spec;
  double m_h;
  Triangulation m_tri;
  std::vector<const Curve*> m_curves;
  std::vector<Segment> m_segments;
  std::unordered_map<std::uint64_t, int> m_segment_of;
  std::vector<int> m_inside;
  long m_splits = 0;
};

} // namespace

Mesh build_mesh(const DomainSpec& spec, double h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw GeometryError("target edge length h must be positive");
  if (spec.kind == DomainKind::Interval)
    throw GeometryError("the interval domain is handled by the oned module, not meshed");
  spec.validate();
  return Mesher(spec, h).run();
}

} // namespace eigentop::geometry
