#include "eigentop/criteria.hpp"
#include "eigentop/error.hpp"
#include "eigentop/levelset.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace eigentop;
using namespace eigentop::criteria;
using geometry::DomainSpec;
using geometry::Point;
using geometry::Transform;

namespace {

constexpr double pi = std::numbers::pi;

const Mesh& square_mesh()
{
  static const Mesh m = geometry::build_mesh(DomainSpec::square(), pi / 12);
  return m;
}

template <class F>
ElementField field(const Mesh& m, F f)
{
  ElementField e = ElementField::constant(m, 0.0);
  for (std::size_t t = 0; t < m.num_triangles(); ++t)
    e.values[t] = f(m.centroid(t));
  return e;
}

ElementField x_positive(const Mesh& m)
{
  return field(m, [](Point p) { return p.x > 1e-12 ? 1.0 : 0.0; });
}

eig::EigenSet uniform_modes(const Mesh& m, fem::BcKind kind, Problem problem, int k)
{
  levelset::ModeSolver solver(m, problem, fem::BoundaryCondition::uniform(m, kind));
  return solver.solve(ElementField::constant(m, 1.0), k);
}

} // namespace

TEST_CASE("level-set match basics")
{
  const Mesh& m = square_mesh();
  const auto S = x_positive(m);

  SUBCASE("aligned quantity")
  {
    const auto q = field(m, [](Point p) { return p.x > 1e-12 ? 0.0 : 1.0; });
    const auto r = level_set_match(m, q, S, Side::Sub);
    CHECK(r.violation_fraction == 0.0);
    CHECK(r.pass);
    CHECK_FALSE(r.indeterminate);
    // Wrong side: everything mismatches.
    CHECK(level_set_match(m, q, S, Side::Super).violation_fraction == doctest::Approx(1.0));
  }

  SUBCASE("constant quantity is indeterminate")
  {
    const auto r = level_set_match(m, ElementField::constant(m, 2.0), S, Side::Sub);
    CHECK(r.indeterminate);
    CHECK_FALSE(r.pass);
    CHECK(r.violation_fraction >= 0.0);
    CHECK(r.violation_fraction <= 1.0);
  }

  SUBCASE("quantile consistency")
  {
    const auto q = field(m, [](Point p) { return std::sin(1.3 * p.x) + 0.5 * std::cos(p.y) + 0.01 * p.x * p.y; });
    for (double frac : {0.2, 0.5, 0.8}) {
      // S as the first frac of the area in a different ordering.
      const auto Sf = field(m, [&](Point p) { return p.y < -pi + 2 * pi * frac ? 1.0 : 0.0; });
      double target = 0.0;
      for (std::size_t t = 0; t < m.num_triangles(); ++t)
        target += Sf.values[t] * m.element_areas()[t];
      for (Side side : {Side::Sub, Side::Super}) {
        const auto r = level_set_match(m, q, Sf, side);
        double level = 0.0;
        for (std::size_t t = 0; t < m.num_triangles(); ++t) {
          const bool in = side == Side::Sub ? q.values[t] <= r.tau : q.values[t] >= r.tau;
          level += in ? m.element_areas()[t] : 0.0;
        }
        CHECK(level >= target - m.max_element_area());
        CHECK(level <= target + m.max_element_area());
      }
    }
  }

  SUBCASE("invariance under monotone transforms")
  {
    const auto q = field(m, [](Point p) { return 0.3 + std::cos(p.x / 2) * std::cos(p.y / 3) + 0.02 * p.y; });
    auto q3 = q;
    for (double& v : q3.values)
      v = v * v * v;
    ElementField qexp = q;
    for (double& v : qexp.values)
      v = std::exp(2 * v);
    for (Side side : {Side::Sub, Side::Super}) {
      const auto a = level_set_match(m, q, S, side);
      const auto b = level_set_match(m, q3, S, side);
      const auto c = level_set_match(m, qexp, S, side);
      CHECK(a.violation_fraction == b.violation_fraction);
      CHECK(a.violation_fraction == c.violation_fraction);
      CHECK(b.tau == doctest::Approx(a.tau * a.tau * a.tau));
    }
  }
}

TEST_CASE("criterion sides")
{
  CHECK(expected_side(Problem::Conductivity, Objective::Minimize) == Side::Sub);
  CHECK(expected_side(Problem::Conductivity, Objective::Maximize) == Side::Super);
  CHECK(expected_side(Problem::Density, Objective::Minimize) == Side::Super);
  CHECK(expected_side(Problem::Density, Objective::Maximize) == Side::Sub);
  CHECK(to_string(Side::Sub) == "sub");
  CHECK(to_string(Side::Super) == "super");
}

TEST_CASE("single- and two-mode quantities")
{
  const Mesh& m = square_mesh();
  const auto ones = ElementField::constant(m, 1.0);
  const auto es = uniform_modes(m, fem::BcKind::Neumann, Problem::Conductivity, 3);
  REQUIRE(es.values[0] / es.values[1] >= 0.99);
  for (Problem problem : {Problem::Conductivity, Problem::Density}) {
    const std::string pname(to_string(problem));
    CAPTURE(pname);
    auto dup = es;
    dup.vectors[1] = dup.vectors[0];
    dup.values[1] = dup.values[0];
    const auto two = two_mode_quantity(problem, dup, ones, m);
    const auto one = single_mode_quantity(problem, dup, ones, m);
    const double norm = levelset::weighted_norm_sq(m, dup.vectors[0]);
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
      CHECK(two.values[t] == doctest::Approx(2 * one.values[t] / norm).epsilon(1e-12));

    auto rotated = es;
    const double th = 1.1;
    for (std::size_t i = 0; i < m.num_vertices(); ++i) {
      const double u1 = es.vectors[0][i], u2 = es.vectors[1][i];
      rotated.vectors[0][i] = std::cos(th) * u1 + std::sin(th) * u2;
      rotated.vectors[1][i] = -std::sin(th) * u1 + std::cos(th) * u2;
    }
    const auto a = two_mode_quantity(problem, es, ones, m);
    const auto b = two_mode_quantity(problem, rotated, ones, m);
    double scale = 0.0, diff = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      scale = std::max(scale, std::abs(a.values[t]));
      diff = std::max(diff, std::abs(a.values[t] - b.values[t]));
    }
    CHECK(diff <= 1e-10 * scale);
  }

  // cos(x/2)-type pair on the uniform square: the sum is invariant under a
  // quarter turn up to discretization error.
  const auto fine = geometry::build_mesh(DomainSpec::square(), pi / 20);
  const auto pair = uniform_modes(fine, fem::BcKind::Neumann, Problem::Conductivity, 2);
  const auto q = two_mode_quantity(Problem::Conductivity, pair, ElementField::constant(fine, 1.0), fine);
  const geometry::PointLocator loc(fine);
  double scale = 0.0, diff = 0.0;
  const auto quarter = Transform::rotation({0, 0}, pi / 2);
  for (std::size_t t = 0; t < fine.num_triangles(); ++t) {
    const int image = loc.locate_or_nearest(quarter.apply(fine.centroid(t)));
    scale = std::max(scale, q.values[t]);
    diff = std::max(diff, std::abs(q.values[t] - q.values[image]));
  }
  CHECK(diff <= 0.1 * scale);

  auto simple = es;
  simple.values = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(two_mode_quantity(Problem::Density, simple, ones, m), Error);
}

TEST_CASE("optimality check dispatches on multiplicity")
{
  const Mesh& m = square_mesh();
  const double c = 1.1;
  auto rho = field(m, [&](Point p) { return std::abs(p.x) < 1.7 && std::abs(p.y) < 1.7 ? c : 1.0; });
  levelset::ModeSolver solver(m, Problem::Conductivity, fem::BoundaryCondition::uniform(m, fem::BcKind::Dirichlet));
  const auto es = solver.solve(rho, 3);
  const auto r = check_optimality(Problem::Conductivity, Objective::Minimize, es, rho, c, m);
  CHECK_FALSE(r.multiplicity);
  CHECK(r.side == Side::Sub);
  CHECK(r.quantity == "|rho grad u1|^2");
  const auto q = single_mode_quantity(Problem::Conductivity, es, rho, m);
  const auto direct = level_set_match(m, q, indicator(rho, c), Side::Sub);
  CHECK(r.violation_fraction == direct.violation_fraction);

  const auto neu = uniform_modes(m, fem::BcKind::Neumann, Problem::Density, 3);
  const auto sigma = ElementField::constant(m, 1.0);
  const auto rn = check_optimality(Problem::Density, Objective::Maximize, neu, sigma, 2.0, m);
  CHECK(rn.multiplicity);
  CHECK(rn.quantity == "|u1|^2+|u2|^2");
  CHECK(rn.side == Side::Sub);
}

TEST_CASE("indicator")
{
  const Mesh& m = square_mesh();
  auto rho = field(m, [](Point p) { return p.y > 0 ? 2.0 : 1.0; });
  const auto S = indicator(rho, 2.0);
  for (std::size_t t = 0; t < m.num_triangles(); ++t)
    CHECK(S.values[t] == (rho.values[t] == 2.0 ? 1.0 : 0.0));
}

TEST_CASE("symmetry checks")
{
  const Mesh& m = square_mesh();
  const auto spec = DomainSpec::square();
  const auto S = x_positive(m);
  CHECK(symmetry_check(m, spec, S, Transform::identity()).fraction == 0.0);
  CHECK(symmetry_check(m, spec, S, Transform::reflection({0, 0}, pi / 2)).fraction >= 0.95);
  CHECK(symmetry_check(m, spec, S, Transform::reflection({0, 0}, 0)).fraction <= 0.05);
  CHECK(symmetry_check(m, spec, S, Transform::rotation({0, 0}, pi)).fraction >= 0.95);
  CHECK_THROWS_AS(symmetry_check(m, spec, S, Transform::rotation({0, 0}, 0.3)), GeometryError);
  CHECK_THROWS_AS(symmetry_check(m, spec, S, Transform::reflection({0.5, 0}, pi / 2)), GeometryError);

  const auto diskspec = DomainSpec::disk();
  const auto disk = geometry::build_mesh(diskspec, 0.07);
  const auto ring = field(disk, [](Point p) { return std::hypot(p.x, p.y) < 0.6 ? 1.0 : 0.0; });
  CHECK(radial_symmetry_deviation(disk, diskspec, ring).fraction <= 0.05);
  CHECK(radial_symmetry_deviation(disk, diskspec, x_positive(disk)).fraction >= 0.9);
}

TEST_CASE("symmetric difference")
{
  const Mesh& m = square_mesh();
  const auto a = x_positive(m);
  const auto b = field(m, [](Point p) { return p.x > 1e-12 && p.y > 0 ? 1.0 : 0.0; });
  CHECK(symmetric_difference(m, a, a) == 0.0);
  double expect = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t)
    if (a.values[t] != b.values[t])
      expect += m.element_areas()[t];
  CHECK(symmetric_difference(m, a, b) == doctest::Approx(expect / m.area()));
  CHECK(symmetric_difference(m, a, b) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("nodal domains")
{
  const Mesh& m = square_mesh();
  // Neumann first mode has two nodal domains, Dirichlet first mode one.
  const auto neu = uniform_modes(m, fem::BcKind::Neumann, Problem::Conductivity, 1);
  CHECK(nodal_domains(m, neu.vectors[0]).count == 2);
  const auto dir = uniform_modes(m, fem::BcKind::Dirichlet, Problem::Conductivity, 1);
  CHECK(nodal_domains(m, dir.vectors[0]).count == 1);
  std::vector<double> checker(m.num_vertices());
  for (std::size_t i = 0; i < checker.size(); ++i)
    checker[i] = (m.vertices()[i].x + 0.01) * (m.vertices()[i].y + 0.013);
  CHECK(nodal_domains(m, checker).count == 4);
  CHECK_THROWS_AS(nodal_domains(m, std::vector<double>(3, 1.0)), Error);
}

TEST_CASE("multiplicity table and serialization")
{
  std::vector<RunSummary> runs{{"square-neumann-max", {1.0, 1.0001, 2.0}}, {"rect-neumann-min", {0.25, 1.0, 1.1}}};
  const auto table = multiplicity_table({"rect-neumann-min", "square-neumann-max", "missing"}, runs);
  REQUIRE(table.size() == 3);
  CHECK(table[0].label == "rect-neumann-min");
  CHECK(*table[0].ratio12 == doctest::Approx(0.25));
  CHECK(*table[1].ratio23 == doctest::Approx(1.0001 / 2.0));
  CHECK_FALSE(table[2].ratio12.has_value());
  const std::string text = to_text(table);
  CHECK(text.find("missing") != std::string::npos);
  CHECK(text.find("absent") != std::string::npos);

  CriterionReport r;
  r.quantity = "|u1|^2";
  r.violation_fraction = 0.01;
  r.pass = true;
  const auto row = to_csv(r);
  const std::string header = csv_header();
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
  CHECK(to_text(r).find("PASS") != std::string::npos);
}
