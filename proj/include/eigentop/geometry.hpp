#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace eigentop::geometry {

struct Point
{
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// One boundary curve of a domain. Ellipses are always full closed loops.
struct Curve
{
  enum class Shape { Segment, Ellipse };

  Shape shape = Shape::Segment;
  Point a, b;        // segment endpoints
  Point center;      // ellipse center
  double rx = 0.0;   // ellipse semi-axis along x
  double ry = 0.0;   // ellipse semi-axis along y
  bool clockwise = false;
  std::string tag;

  static Curve segment(Point a, Point b, std::string tag);
  static Curve ellipse(Point center, double rx, double ry, bool clockwise, std::string tag);

  double length() const;
  /// Point at normalized arclength t in [0, 1].
  Point at(double t) const;
  double distance_to(Point p) const;
};

struct Loop
{
  std::vector<Curve> curves;
  bool hole = false;

  bool contains(Point p) const;
  double length() const;
};

/// Rigid map used by symmetry checks.
struct Transform
{
  enum class Kind { Identity, Reflection, Rotation };

  Kind kind = Kind::Identity;
  Point center;
  double angle = 0.0; // reflection axis direction, or rotation angle

  Point apply(Point p) const;
  std::string describe() const;

  static Transform identity() { return {}; }
  static Transform reflection(Point center, double axis_angle) { return {Kind::Reflection, center, axis_angle}; }
  static Transform rotation(Point center, double angle) { return {Kind::Rotation, center, angle}; }
};

enum class DomainKind {
  Interval,
  Square,
  Cross,
  Disk,
  DiskTwoHoles,
  Rectangle,
  RectCross,
  Ellipse,
  EllipseTwoHoles,
  CustomPolygon
};

std::string_view to_string(DomainKind kind);

/// Exact description of a computational domain. The built-in factories
/// reproduce the standard test domains; curved pieces keep their exact
/// geometry even though meshes approximate them by polygons.
struct DomainSpec
{
  DomainKind kind = DomainKind::Square;
  std::vector<double> params;
  std::vector<Loop> loops; // loops[0] is the outer boundary

  static DomainSpec interval();
  static DomainSpec square();          // (-pi, pi)^2
  static DomainSpec cross();           // (0,3)^2 minus the four unit corner squares
  static DomainSpec disk();            // unit disk
  static DomainSpec disk_two_holes();  // unit disk minus radius-0.2 disks at (+-0.5, 0)
  static DomainSpec rectangle();       // (-pi, pi) x (-2 pi, 2 pi)
  static DomainSpec rect_cross();      // (0,5)x(0,3) minus the four 2x1 corner blocks
  static DomainSpec ellipse();         // x^2 + y^2/4 < 1
  static DomainSpec ellipse_two_holes();
  static DomainSpec custom_polygon(std::vector<Point> outer, std::vector<std::vector<Point>> holes = {});

  /// Accepts the names used in run configurations (square, disk, rect_cross, ...).
  static DomainSpec from_name(std::string_view name);
  std::string name() const;

  double exact_area() const;
  double diameter() const;
  Point symmetry_center() const;
  bool contains(Point p) const;
  double boundary_distance(Point p) const;
  double geometric_tolerance() const { return 1e-9 * diameter(); }

  /// True when `t` maps the boundary onto itself within the geometric tolerance.
  bool is_symmetry(const Transform& t) const;

  /// Throws GeometryError when invariants fail (self-intersection, hole touching the outer boundary).
  void validate() const;
};

struct BoundaryEdge
{
  std::array<int, 2> v{};
  std::string tag;
};

using Triangle = std::array<int, 3>;

/// Conforming triangulation with tagged boundary edges. Construction
/// validates every invariant; instances are immutable afterwards.
class Mesh
{
public:
  Mesh() = default;
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::vector<BoundaryEdge> boundary);

  const std::vector<Point>& vertices() const { return m_vertices; }
  const std::vector<Triangle>& triangles() const { return m_triangles; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return m_boundary; }
  const std::vector<double>& element_areas() const { return m_areas; }

  std::size_t num_vertices() const { return m_vertices.size(); }
  std::size_t num_triangles() const { return m_triangles.size(); }

  double area() const;
  double max_element_area() const;
  double max_edge_length() const;
  Point centroid(std::size_t t) const;
  std::set<std::string> tags() const;
  std::vector<bool> boundary_vertex_mask() const;

  /// Copy with boundary tags replaced edge by edge.
  Mesh retagged(const std::function<std::string(const BoundaryEdge&, Point, Point)>& tagger) const;

private:
  std::vector<Point> m_vertices;
  std::vector<Triangle> m_triangles;
  std::vector<BoundaryEdge> m_boundary;
  std::vector<double> m_areas;
};

/// Throws GeometryError describing the first violated mesh invariant.
void validate_mesh(const std::vector<Point>& vertices, const std::vector<Triangle>& triangles,
                   const std::vector<BoundaryEdge>& boundary);

/// Conforming Delaunay mesh of `spec` with target edge length h.
Mesh build_mesh(const DomainSpec& spec, double h);

/// Uniform nx-by-ny grid of the box [x0,x1]x[y0,y1], each cell split along
/// alternating diagonals, boundary tagged "boundary".
Mesh structured_rectangle(Point lower, Point upper, int nx, int ny);

Mesh read_mesh(std::string_view text);
std::string write_mesh(const Mesh& mesh);

using EdgePredicate = std::function<bool(Point, Point)>;

/// Tags edges whose endpoints both satisfy `predicate` as "robin", all others
/// "dirichlet". The default predicate selects the side y = -pi of the square.
Mesh tag_robin_side(const Mesh& mesh, const EdgePredicate& predicate);
Mesh tag_robin_side(const Mesh& mesh);
EdgePredicate bottom_side_predicate(double y_level, double tolerance);

/// Uniform-grid point location over mesh triangles.
class PointLocator
{
public:
  explicit PointLocator(const Mesh& mesh);

  /// Index of a triangle containing p, or -1.
  int locate(Point p) const;
  /// Triangle containing p, or the triangle closest to p when p is outside.
  int locate_or_nearest(Point p) const;

private:
  const Mesh* m_mesh;
  double m_x0 = 0, m_y0 = 0, m_cell = 1;
  int m_nx = 1, m_ny = 1;
  std::vector<std::vector<int>> m_cells;
};

} // namespace eigentop::geometry
