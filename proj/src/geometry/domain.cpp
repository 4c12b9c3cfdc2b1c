#include "eigentop/error.hpp"
#include "eigentop/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numbers>
#include <sstream>

namespace eigentop::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

// 16-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kGaussX = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                           0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                           0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGaussW = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                           0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                           0.0622535239386479, 0.0271524594117541};

double ellipse_speed(double rx, double ry, double theta)
{
  return std::hypot(rx * std::sin(theta), ry * std::cos(theta));
}

// Arclength of the ellipse from angle 0 to theta (theta in [0, 2 pi]).
double ellipse_arclength(double rx, double ry, double theta)
{
  constexpr int panels_per_turn = 64;
  const double width = 2.0 * kPi / panels_per_turn;
  double s = 0.0;
  double lo = 0.0;
  while (lo < theta) {
    const double hi = std::min(theta, lo + width);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double panel = 0.0;
    for (std::size_t i = 0; i < kGaussX.size(); ++i) {
      panel += kGaussW[i] * (ellipse_speed(rx, ry, mid - half * kGaussX[i]) +
                             ellipse_speed(rx, ry, mid + half * kGaussX[i]));
    }
    s += half * panel;
    lo = hi;
  }
  return s;
}

// Distance from (y0, y1), both >= 0, to the ellipse with semi-axes e0 >= e1.
double ellipse_distance_first_quadrant(double e0, double e1, double y0, double y1)
{
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0)
        return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double n0 = r0 * z0;
      double s0 = z1 - 1.0;
      double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
      double s = 0.0;
      for (int i = 0; i < 200; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1)
          break;
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        const double f = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (f > 0.0)
          s0 = s;
        else if (f < 0.0)
          s1 = s;
        else
          break;
      }
      const double x0 = r0 * y0 / (s + r0);
      const double x1 = y1 / (s + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

double segment_distance(Point a, Point b, Point p)
{
  const Point d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(a + t * d, p);
}

bool segments_cross(Point a, Point b, Point c, Point d, double tol)
{
  auto orient = [](Point p, Point q, Point r) { return cross(q - p, r - p); };
  const double d1 = orient(c, d, a);
  const double d2 = orient(c, d, b);
  const double d3 = orient(a, b, c);
  const double d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  // Touching counts as crossing for the validity checks.
  return segment_distance(c, d, a) <= tol || segment_distance(c, d, b) <= tol ||
         segment_distance(a, b, c) <= tol || segment_distance(a, b, d) <= tol;
}

std::vector<Point> sample_loop(const Loop& loop, int per_ellipse)
{
  std::vector<Point> pts;
  for (const Curve& c : loop.curves) {
    if (c.shape == Curve::Shape::Segment) {
      pts.push_back(c.a);
    } else {
      for (int i = 0; i < per_ellipse; ++i) {
        const double th = 2.0 * kPi * i / per_ellipse;
        pts.push_back({c.center.x + c.rx * std::cos(th), c.center.y + c.ry * std::sin(th)});
      }
    }
  }
  return pts;
}

double polygon_signed_area(const std::vector<Point>& pts)
{
  double a = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    a += cross(pts[i], pts[(i + 1) % pts.size()]);
  return 0.5 * a;
}

bool polygon_contains(const std::vector<Point>& pts, Point p)
{
  bool inside = false;
  for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
    const Point a = pts[i];
    const Point b = pts[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x)
        inside = !inside;
    }
  }
  return inside;
}

Loop polygon_loop(const std::vector<Point>& pts, bool hole, const std::vector<std::string>& tags)
{
  Loop loop;
  loop.hole = hole;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string& tag = tags.size() == 1 ? tags[0] : tags[i];
    loop.curves.push_back(Curve::segment(pts[i], pts[(i + 1) % pts.size()], tag));
  }
  return loop;
}

Loop ellipse_loop(Point center, double rx, double ry, bool hole, std::string tag)
{
  Loop loop;
  loop.hole = hole;
  loop.curves.push_back(Curve::ellipse(center, rx, ry, hole, std::move(tag)));
  return loop;
}

std::vector<Point> rectangle_points(double x0, double x1, double y0, double y1)
{
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

const std::vector<std::string> kRectangleTags = {"bottom", "right", "top", "left"};

} // namespace

Curve Curve::segment(Point a, Point b, std::string tag)
{
  Curve c;
  c.shape = Shape::Segment;
  c.a = a;
  c.b = b;
  c.tag = std::move(tag);
  return c;
}

Curve Curve::ellipse(Point center, double rx, double ry, bool clockwise, std::string tag)
{
  Curve c;
  c.shape = Shape::Ellipse;
  c.center = center;
  c.rx = rx;
  c.ry = ry;
  c.clockwise = clockwise;
  c.tag = std::move(tag);
  c.a = c.b = {center.x + rx, center.y};
  return c;
}

double Curve::length() const
{
  if (shape == Shape::Segment)
    return distance(a, b);
  return ellipse_arclength(rx, ry, 2.0 * kPi);
}

Point Curve::at(double t) const
{
  if (shape == Shape::Segment)
    return a + t * (b - a);
  if (t <= 0.0 || t >= 1.0)
    return {center.x + rx, center.y};

  // Invert the arclength function by safeguarded Newton iteration.
  const double total = length();
  const double target = t * total;
  double lo = 0.0, hi = 2.0 * kPi;
  double theta = 2.0 * kPi * t;
  for (int it = 0; it < 60; ++it) {
    const double f = ellipse_arclength(rx, ry, theta) - target;
    if (f > 0.0)
      hi = theta;
    else
      lo = theta;
    double next = theta - f / ellipse_speed(rx, ry, theta);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (std::abs(next - theta) <= 1e-15 * (1.0 + theta)) {
      theta = next;
      break;
    }
    theta = next;
  }
  const double angle = clockwise ? -theta : theta;
  return {center.x + rx * std::cos(angle), center.y + ry * std::sin(angle)};
}

double Curve::distance_to(Point p) const
{
  if (shape == Shape::Segment)
    return segment_distance(a, b, p);
  const double y0 = std::abs(p.x - center.x);
  const double y1 = std::abs(p.y - center.y);
  if (rx >= ry)
    return ellipse_distance_first_quadrant(rx, ry, y0, y1);
  return ellipse_distance_first_quadrant(ry, rx, y1, y0);
}

bool Loop::contains(Point p) const
{
  if (curves.size() == 1 && curves[0].shape == Curve::Shape::Ellipse) {
    const Curve& c = curves[0];
    const double u = (p.x - c.center.x) / c.rx;
    const double v = (p.y - c.center.y) / c.ry;
    return u * u + v * v < 1.0;
  }
  return polygon_contains(sample_loop(*this, 0), p);
}

double Loop::length() const
{
  double s = 0.0;
  for (const Curve& c : curves)
    s += c.length();
  return s;
}

Point Transform::apply(Point p) const
{
  const Point d = p - center;
  switch (kind) {
  case Kind::Identity:
    return p;
  case Kind::Reflection: {
    const double c2 = std::cos(2.0 * angle);
    const double s2 = std::sin(2.0 * angle);
    return {center.x + c2 * d.x + s2 * d.y, center.y + s2 * d.x - c2 * d.y};
  }
  case Kind::Rotation: {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y};
  }
  }
  return p;
}

std::string Transform::describe() const
{
  std::ostringstream os;
  const double degrees = angle * 180.0 / kPi;
  switch (kind) {
  case Kind::Identity:
    os << "identity";
    break;
  case Kind::Reflection:
    os << "reflection axis " << degrees << "deg through (" << center.x << "," << center.y << ")";
    break;
  case Kind::Rotation:
    os << "rotation " << degrees << "deg about (" << center.x << "," << center.y << ")";
    break;
  }
  return os.str();
}

std::string_view to_string(DomainKind kind)
{
  switch (kind) {
  case DomainKind::Interval: return "interval";
  case DomainKind::Square: return "square";
  case DomainKind::Cross: return "cross";
  case DomainKind::Disk: return "disk";
  case DomainKind::DiskTwoHoles: return "disk_two_holes";
  case DomainKind::Rectangle: return "rectangle";
  case DomainKind::RectCross: return "rect_cross";
  case DomainKind::Ellipse: return "ellipse";
  case DomainKind::EllipseTwoHoles: return "ellipse_two_holes";
  case DomainKind::CustomPolygon: return "custom_polygon";
  }
  return "unknown";
}

DomainSpec DomainSpec::interval()
{
  DomainSpec s;
  s.kind = DomainKind::Interval;
  s.params = {0.0, 1.0};
  return s;
}

DomainSpec DomainSpec::square()
{
  DomainSpec s;
  s.kind = DomainKind::Square;
  s.params = {-kPi, kPi, -kPi, kPi};
  s.loops.push_back(polygon_loop(rectangle_points(-kPi, kPi, -kPi, kPi), false, kRectangleTags));
  return s;
}

DomainSpec DomainSpec::rectangle()
{
  DomainSpec s;
  s.kind = DomainKind::Rectangle;
  s.params = {-kPi, kPi, -2.0 * kPi, 2.0 * kPi};
  s.loops.push_back(polygon_loop(rectangle_points(-kPi, kPi, -2.0 * kPi, 2.0 * kPi), false, kRectangleTags));
  return s;
}

DomainSpec DomainSpec::cross()
{
  DomainSpec s;
  s.kind = DomainKind::Cross;
  s.params = {3.0, 3.0, 1.0, 1.0};
  const std::vector<Point> pts = {{1, 0}, {2, 0}, {2, 1}, {3, 1}, {3, 2}, {2, 2},
                                  {2, 3}, {1, 3}, {1, 2}, {0, 2}, {0, 1}, {1, 1}};
  s.loops.push_back(polygon_loop(pts, false, {"boundary"}));
  return s;
}

DomainSpec DomainSpec::rect_cross()
{
  DomainSpec s;
  s.kind = DomainKind::RectCross;
  s.params = {5.0, 3.0, 2.0, 1.0};
  const std::vector<Point> pts = {{2, 0}, {3, 0}, {3, 1}, {5, 1}, {5, 2}, {3, 2},
                                  {3, 3}, {2, 3}, {2, 2}, {0, 2}, {0, 1}, {2, 1}};
  s.loops.push_back(polygon_loop(pts, false, {"boundary"}));
  return s;
}

DomainSpec DomainSpec::disk()
{
  DomainSpec s;
  s.kind = DomainKind::Disk;
  s.params = {1.0};
  s.loops.push_back(ellipse_loop({0, 0}, 1.0, 1.0, false, "boundary"));
  return s;
}

DomainSpec DomainSpec::disk_two_holes()
{
  DomainSpec s;
  s.kind = DomainKind::DiskTwoHoles;
  s.params = {1.0, 0.5, 0.2};
  s.loops.push_back(ellipse_loop({0, 0}, 1.0, 1.0, false, "boundary"));
  s.loops.push_back(ellipse_loop({0.5, 0}, 0.2, 0.2, true, "hole"));
  s.loops.push_back(ellipse_loop({-0.5, 0}, 0.2, 0.2, true, "hole"));
  return s;
}

DomainSpec DomainSpec::ellipse()
{
  DomainSpec s;
  s.kind = DomainKind::Ellipse;
  s.params = {1.0, 2.0};
  s.loops.push_back(ellipse_loop({0, 0}, 1.0, 2.0, false, "boundary"));
  return s;
}

DomainSpec DomainSpec::ellipse_two_holes()
{
  DomainSpec s;
  s.kind = DomainKind::EllipseTwoHoles;
  s.params = {1.0, 2.0, 0.5, 0.2, 0.8};
  s.loops.push_back(ellipse_loop({0, 0}, 1.0, 2.0, false, "boundary"));
  s.loops.push_back(ellipse_loop({0.5, 0}, 0.2, 0.8, true, "hole"));
  s.loops.push_back(ellipse_loop({-0.5, 0}, 0.2, 0.8, true, "hole"));
  return s;
}

DomainSpec DomainSpec::custom_polygon(std::vector<Point> outer, std::vector<std::vector<Point>> holes)
{
  DomainSpec s;
  s.kind = DomainKind::CustomPolygon;
  if (polygon_signed_area(outer) < 0.0)
    std::reverse(outer.begin(), outer.end());
  s.loops.push_back(polygon_loop(outer, false, {"boundary"}));
  for (auto& h : holes) {
    if (polygon_signed_area(h) > 0.0)
      std::reverse(h.begin(), h.end());
    s.loops.push_back(polygon_loop(h, true, {"hole"}));
  }
  s.validate();
  return s;
}

DomainSpec DomainSpec::from_name(std::string_view name)
{
  if (name == "interval") return interval();
  if (name == "square") return square();
  if (name == "cross") return cross();
  if (name == "disk") return disk();
  if (name == "disk_two_holes") return disk_two_holes();
  if (name == "rectangle") return rectangle();
  if (name == "rect_cross") return rect_cross();
  if (name == "ellipse") return ellipse();
  if (name == "ellipse_two_holes") return ellipse_two_holes();
  throw ConfigError("unknown domain '" + std::string(name) + "'");
}

std::string DomainSpec::name() const { return std::string(to_string(kind)); }

double DomainSpec::exact_area() const
{
  if (kind == DomainKind::Interval)
    return params[1] - params[0];
  double area = 0.0;
  for (const Loop& loop : loops) {
    double a = 0.0;
    if (loop.curves.size() == 1 && loop.curves[0].shape == Curve::Shape::Ellipse)
      a = kPi * loop.curves[0].rx * loop.curves[0].ry;
    else
      a = std::abs(polygon_signed_area(sample_loop(loop, 0)));
    area += loop.hole ? -a : a;
  }
  return area;
}

double DomainSpec::diameter() const
{
  if (kind == DomainKind::Interval)
    return params[1] - params[0];
  const std::vector<Point> pts = sample_loop(loops.at(0), 256);
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      d = std::max(d, distance(pts[i], pts[j]));
  return d;
}

Point DomainSpec::symmetry_center() const
{
  switch (kind) {
  case DomainKind::Interval: return {0.5, 0.0};
  case DomainKind::Cross: return {1.5, 1.5};
  case DomainKind::RectCross: return {2.5, 1.5};
  case DomainKind::CustomPolygon: {
    const std::vector<Point> pts = sample_loop(loops.at(0), 0);
    const double a = polygon_signed_area(pts);
    Point c;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point p = pts[i];
      const Point q = pts[(i + 1) % pts.size()];
      const double w = geometry::cross(p, q);
      c.x += (p.x + q.x) * w;
      c.y += (p.y + q.y) * w;
    }
    return (1.0 / (6.0 * a)) * c;
  }
  default: return {0.0, 0.0};
  }
}

bool DomainSpec::contains(Point p) const
{
  if (loops.empty() || !loops[0].contains(p))
    return false;
  for (std::size_t i = 1; i < loops.size(); ++i)
    if (loops[i].contains(p))
      return false;
  return true;
}

double DomainSpec::boundary_distance(Point p) const
{
  double d = std::numeric_limits<double>::infinity();
  for (const Loop& loop : loops)
    for (const Curve& c : loop.curves)
      d = std::min(d, c.distance_to(p));
  return d;
}

bool DomainSpec::is_symmetry(const Transform& t) const
{
  if (kind == DomainKind::Interval)
    return false;
  const double tol = geometric_tolerance();
  constexpr int samples = 33;
  for (const Loop& loop : loops) {
    for (const Curve& c : loop.curves) {
      for (int i = 0; i < samples; ++i) {
        const double s = static_cast<double>(i) / (samples - 1);
        const Point p = c.shape == Curve::Shape::Segment
                            ? c.at(s)
                            : Point{c.center.x + c.rx * std::cos(2 * kPi * s), c.center.y + c.ry * std::sin(2 * kPi * s)};
        if (boundary_distance(t.apply(p)) > tol)
          return false;
      }
    }
  }
  // Interior must also map to interior; test the mapped symmetry center.
  return contains(t.apply(symmetry_center())) == contains(symmetry_center());
}

void DomainSpec::validate() const
{
  if (kind == DomainKind::Interval)
    return;
  if (loops.empty() || loops[0].hole)
    throw GeometryError("domain needs an outer boundary loop");
  const double tol = geometric_tolerance();

  std::vector<std::vector<Point>> polys;
  for (const Loop& loop : loops) {
    if (loop.curves.empty())
      throw GeometryError("empty boundary loop");
    for (const Curve& c : loop.curves) {
      if (c.shape == Curve::Shape::Ellipse && !(c.rx > 0.0 && c.ry > 0.0))
        throw GeometryError("ellipse with nonpositive semi-axis");
      if (c.shape == Curve::Shape::Ellipse && loop.curves.size() != 1)
        throw GeometryError("an ellipse must form a loop by itself");
      if (c.shape == Curve::Shape::Segment && c.length() <= tol)
        throw GeometryError("degenerate boundary segment");
    }
    std::vector<Point> pts = sample_loop(loop, 256);
    if (pts.size() < 3)
      throw GeometryError("boundary loop needs at least three vertices");
    if (std::abs(polygon_signed_area(pts)) <= tol * tol)
      throw GeometryError("boundary loop encloses no area");
    polys.push_back(std::move(pts));
  }

  auto loop_edges_cross = [&](const std::vector<Point>& a, const std::vector<Point>& b, bool same) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = same ? i + 1 : 0; j < b.size(); ++j) {
        if (same) {
          const bool adjacent = j == i + 1 || (i == 0 && j == a.size() - 1);
          if (adjacent)
            continue;
        }
        if (segments_cross(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()], tol))
          return true;
      }
    }
    return false;
  };

  for (std::size_t i = 0; i < polys.size(); ++i) {
    if (loop_edges_cross(polys[i], polys[i], true))
      throw GeometryError("boundary loop " + std::to_string(i) + " is not simple");
  }
  for (std::size_t i = 1; i < polys.size(); ++i) {
    if (loop_edges_cross(polys[0], polys[i], false))
      throw GeometryError("hole " + std::to_string(i) + " touches the outer boundary");
    if (!polygon_contains(polys[0], polys[i][0]))
      throw GeometryError("hole " + std::to_string(i) + " lies outside the outer boundary");
    for (std::size_t j = i + 1; j < polys.size(); ++j) {
      if (loop_edges_cross(polys[i], polys[j], false) || polygon_contains(polys[i], polys[j][0]) ||
          polygon_contains(polys[j], polys[i][0]))
        throw GeometryError("holes " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
    }
  }
}

} // namespace eigentop::geometry
