#include "eigentop/error.hpp"
#include "eigentop/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace eigentop;
using namespace eigentop::geometry;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string drop_line(const std::string& text, std::size_t index)
{
  std::istringstream is(text);
  std::string line, out;
  for (std::size_t i = 0; std::getline(is, line); ++i)
    if (i != index)
      out += line + "\n";
  return out;
}

std::size_t find_line(const std::string& text, const std::string& prefix)
{
  std::istringstream is(text);
  std::string line;
  for (std::size_t i = 0; std::getline(is, line); ++i)
    if (line.rfind(prefix, 0) == 0)
      return i;
  return std::string::npos;
}

} // namespace

TEST_CASE("square mesh area and edge length")
{
  const double h = pi / 8;
  const Mesh m = build_mesh(DomainSpec::square(), h);
  CHECK(rel(m.area(), 4 * pi * pi) < 0.01);
  CHECK(m.max_edge_length() <= 1.5 * h);
  for (double a : m.element_areas())
    CHECK(a > 0.0);
}

TEST_CASE("disk mesh area")
{
  const Mesh m = build_mesh(DomainSpec::disk(), 0.05);
  CHECK(rel(m.area(), pi) < 0.01);
  CHECK(m.max_edge_length() <= 1.5 * 0.05);
}

TEST_CASE("disk with two holes area")
{
  const Mesh m = build_mesh(DomainSpec::disk_two_holes(), 0.02);
  const double expected = pi * (1.0 - 0.08);
  CHECK(rel(m.area(), expected) < 0.01);
  CHECK(rel(DomainSpec::disk_two_holes().exact_area(), expected) < 1e-14);
}

TEST_CASE("all built-in domains mesh with the expected area")
{
  for (const char* name : {"square", "cross", "disk", "disk_two_holes", "rectangle", "rect_cross", "ellipse",
                           "ellipse_two_holes"}) {
    CAPTURE(name);
    const DomainSpec spec = DomainSpec::from_name(name);
    const double h = spec.diameter() / 30.0;
    const Mesh m = build_mesh(spec, h);
    CHECK(rel(m.area(), spec.exact_area()) < 0.01);
    CHECK(m.max_edge_length() <= 1.5 * h);
  }
  CHECK(DomainSpec::cross().exact_area() == doctest::Approx(5.0));
  CHECK(DomainSpec::rect_cross().exact_area() == doctest::Approx(7.0));
  CHECK(DomainSpec::ellipse().exact_area() == doctest::Approx(2 * pi));
}

TEST_CASE("curved boundary area error converges at second order")
{
  const DomainSpec spec = DomainSpec::disk();
  double errs[3];
  for (int k = 0; k < 3; ++k) {
    const Mesh m = build_mesh(spec, 0.1 / (1 << k));
    errs[k] = std::abs(m.area() - spec.exact_area());
  }
  for (int k = 0; k < 2; ++k) {
    const double ratio = errs[k] / errs[k + 1];
    CAPTURE(ratio);
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
  }
}

TEST_CASE("interval and oversized h are rejected")
{
  CHECK_THROWS_AS(build_mesh(DomainSpec::interval(), 0.1), GeometryError);
  CHECK_THROWS_AS(build_mesh(DomainSpec::disk_two_holes(), 0.3), GeometryError);
  CHECK_THROWS_AS(build_mesh(DomainSpec::square(), 0.0), GeometryError);
}

TEST_CASE("custom polygon validation")
{
  CHECK_NOTHROW(DomainSpec::custom_polygon({{0, 0}, {2, 0}, {2, 1}, {0, 1}}));
  // Bow-tie outer boundary.
  CHECK_THROWS_AS(DomainSpec::custom_polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), GeometryError);
  // Hole touching the outer boundary.
  CHECK_THROWS_AS(DomainSpec::custom_polygon({{0, 0}, {2, 0}, {2, 2}, {0, 2}}, {{{0, 0.5}, {1, 0.5}, {1, 1}}}),
                  GeometryError);
  const DomainSpec ok = DomainSpec::custom_polygon({{0, 0}, {4, 0}, {4, 4}, {0, 4}}, {{{1, 1}, {2, 1}, {2, 2}, {1, 2}}});
  const Mesh m = build_mesh(ok, 0.2);
  CHECK(rel(m.area(), 15.0) < 1e-12);
}

TEST_CASE("mesh round trip is exact")
{
  const Mesh m = build_mesh(DomainSpec::square(), pi / 4);
  const std::string text = write_mesh(m);
  const Mesh r = read_mesh(text);
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.triangles() == m.triangles());
  CHECK(r.vertices() == m.vertices());
  CHECK(write_mesh(r) == text);
}

TEST_CASE("mesh parse errors name the line")
{
  const std::string text = write_mesh(build_mesh(DomainSpec::square(), pi / 4));
  const std::size_t tri_header = find_line(text, "triangles");
  REQUIRE(tri_header != std::string::npos);

  std::istringstream is(text);
  std::string line, broken;
  for (std::size_t i = 0; std::getline(is, line); ++i)
    broken += (i == tri_header + 2 ? std::string("0 1 99999") : line) + "\n";
  try {
    read_mesh(broken);
    FAIL("expected a parse error");
  } catch (const MeshParseError& e) {
    CHECK(e.line() == tri_header + 3);
    CHECK(std::string(e.what()).find("out of range") != std::string::npos);
  }

  // Deleting one boundary edge leaves a hull edge untagged.
  const std::size_t be_header = find_line(text, "boundary_edges");
  std::string missing = drop_line(text, be_header + 1);
  const std::size_t count_pos = missing.find("boundary_edges ");
  const std::size_t eol = missing.find('\n', count_pos);
  const long count = std::stol(missing.substr(count_pos + 15, eol - count_pos - 15));
  missing.replace(count_pos, eol - count_pos, "boundary_edges " + std::to_string(count - 1));
  try {
    read_mesh(missing);
    FAIL("expected a conformity error");
  } catch (const MeshParseError& e) {
    CHECK(std::string(e.what()).find("non-conforming") != std::string::npos);
  }

  CHECK_THROWS_AS(read_mesh("mesh 3d\n"), MeshParseError);
}

TEST_CASE("zero-area and dangling-tag inputs are rejected")
{
  const std::string degenerate = "mesh 2d\nvertices 3\n0 0\n1 0\n2 0\ntriangles 1\n0 1 2\nboundary_edges 0\n";
  try {
    read_mesh(degenerate);
    FAIL("expected zero-area error");
  } catch (const MeshParseError& e) {
    CHECK(e.line() == 7);
  }
  const std::string dangling = "mesh 2d\nvertices 4\n0 0\n1 0\n0 1\n1 1\ntriangles 2\n0 1 2\n1 3 2\n"
                               "boundary_edges 5\n0 1 a\n1 3 a\n3 2 a\n2 0 a\n1 2 a\n";
  try {
    read_mesh(dangling);
    FAIL("expected dangling tag error");
  } catch (const MeshParseError& e) {
    CHECK(e.line() == 15);
  }
}

TEST_CASE("robin side tagging")
{
  const Mesh m = build_mesh(DomainSpec::square(), pi / 8);
  const Mesh t = tag_robin_side(m);
  std::size_t robin = 0, dirichlet = 0, bottom = 0;
  for (const auto& e : t.boundary_edges()) {
    robin += e.tag == "robin";
    dirichlet += e.tag == "dirichlet";
  }
  for (const auto& e : m.boundary_edges())
    bottom += e.tag == "bottom";
  CHECK(robin == bottom);
  CHECK(robin == 16);
  CHECK(robin + dirichlet == t.boundary_edges().size());
  CHECK_THROWS_AS(tag_robin_side(m, [](Point a, Point b) { return std::abs(a.x - 100) < 1e-9 && std::abs(b.x - 100) < 1e-9; }),
                  GeometryError);
}

TEST_CASE("triangles are counter-clockwise and tags partition the boundary")
{
  const Mesh m = build_mesh(DomainSpec::ellipse_two_holes(), 0.08);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const Point a = m.vertices()[tri[0]], b = m.vertices()[tri[1]], c = m.vertices()[tri[2]];
    CHECK(cross(b - a, c - a) > 0.0);
  }
  std::size_t outer = 0, hole = 0;
  for (const auto& e : m.boundary_edges()) {
    outer += e.tag == "boundary";
    hole += e.tag == "hole";
  }
  CHECK(outer + hole == m.boundary_edges().size());
  CHECK(hole > 0);
}

TEST_CASE("domain symmetries and transforms")
{
  const DomainSpec sq = DomainSpec::square();
  CHECK(sq.is_symmetry(Transform::reflection({0, 0}, 0.0)));
  CHECK(sq.is_symmetry(Transform::reflection({0, 0}, pi / 2)));
  CHECK(sq.is_symmetry(Transform::rotation({0, 0}, pi / 2)));
  CHECK_FALSE(sq.is_symmetry(Transform::rotation({0, 0}, pi / 4)));
  const DomainSpec el = DomainSpec::ellipse();
  CHECK(el.is_symmetry(Transform::reflection({0, 0}, 0.0)));
  CHECK_FALSE(el.is_symmetry(Transform::rotation({0, 0}, pi / 2)));
  CHECK(DomainSpec::disk().is_symmetry(Transform::rotation({0, 0}, 0.3)));
  CHECK(DomainSpec::cross().is_symmetry(Transform::rotation({1.5, 1.5}, pi / 2)));
  CHECK_FALSE(DomainSpec::rect_cross().is_symmetry(Transform::rotation({2.5, 1.5}, pi / 2)));

  const Point p = Transform::reflection({0, 0}, pi / 2).apply({1.0, 2.0});
  CHECK(p.x == doctest::Approx(-1.0));
  CHECK(p.y == doctest::Approx(2.0));
}

TEST_CASE("ellipse boundary distance")
{
  const Curve c = Curve::ellipse({0, 0}, 1.0, 2.0, false, "b");
  CHECK(c.distance_to({0, 0}) == doctest::Approx(1.0));
  CHECK(c.distance_to({0, 3}) == doctest::Approx(1.0));
  CHECK(c.distance_to({2, 0}) == doctest::Approx(1.0));
  for (double t : {0.1, 0.37, 0.8}) {
    const Point q = c.at(t);
    CHECK(q.x * q.x + q.y * q.y / 4 == doctest::Approx(1.0));
    CHECK(c.distance_to(q) < 1e-12);
  }
}

TEST_CASE("point locator")
{
  const Mesh m = build_mesh(DomainSpec::disk(), 0.1);
  const PointLocator loc(m);
  for (std::size_t t = 0; t < m.num_triangles(); t += 7)
    CHECK(loc.locate(m.centroid(t)) == static_cast<int>(t));
  CHECK(loc.locate({5, 5}) == -1);
  CHECK(loc.locate_or_nearest({1.2, 0.0}) >= 0);
}
