#include "eigentop/error.hpp"
#include "eigentop/fem.hpp"
#include "eigentop/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace eigentop;
using namespace eigentop::fem;
using geometry::DomainSpec;
using geometry::Point;

namespace {

constexpr double pi = std::numbers::pi;

Mesh reference_triangle(const std::string& edge01_tag)
{
  return Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {{{0, 1}, edge01_tag}, {{1, 2}, "d"}, {{2, 0}, "d"}});
}

std::vector<double> random_vector(std::size_t n, unsigned seed)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v)
    x = dist(rng);
  return v;
}

ElementField random_two_phase(const Mesh& mesh, double c, unsigned seed)
{
  std::mt19937 rng(seed);
  ElementField f = ElementField::constant(mesh, 1.0);
  for (double& v : f.values)
    v = (rng() % 2) ? c : 1.0;
  return f;
}

double quad(const SparseMatrix& a, const std::vector<double>& u)
{
  const auto au = a * u;
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += u[i] * au[i];
  return s;
}

} // namespace

TEST_CASE("local P1 matrices on the reference triangle")
{
  const auto k = local_stiffness({0, 0}, {1, 0}, {0, 1}, 1.0);
  const double expected_k[9] = {1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5};
  for (int i = 0; i < 9; ++i)
    CHECK(k[i] == doctest::Approx(expected_k[i]).epsilon(1e-15));
  const auto m = local_mass({0, 0}, {1, 0}, {0, 1}, 1.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(m[3 * i + j] == doctest::Approx((i == j ? 2.0 : 1.0) * 0.5 / 12.0).epsilon(1e-15));
}

TEST_CASE("stiffness annihilates constants and scales linearly")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::disk(), 0.1);
  const SparseMatrix k1 = assemble_stiffness(mesh, ElementField::constant(mesh, 1.0));
  const std::vector<double> ones(mesh.num_vertices(), 1.0);
  const auto k1ones = k1 * ones;
  double worst = 0.0;
  for (double v : k1ones)
    worst = std::max(worst, std::abs(v));
  CHECK(worst <= 1e-12 * k1.norm_inf());

  const double c = 3.7;
  const SparseMatrix kc = assemble_stiffness(mesh, ElementField::constant(mesh, c));
  REQUIRE(kc.same_pattern(k1));
  for (std::size_t i = 0; i < k1.nonzeros(); ++i)
    CHECK(kc.values()[i] == doctest::Approx(c * k1.values()[i]).epsilon(1e-14));
  CHECK(k1.max_asymmetry() <= 1e-15 * k1.norm_inf());
}

TEST_CASE("nonpositive coefficients are rejected")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::square(), pi / 4);
  CHECK_THROWS_AS(assemble_stiffness(mesh, ElementField::constant(mesh, 0.0)), Error);
  CHECK_THROWS_AS(assemble_mass(mesh, ElementField::constant(mesh, -1.0)), Error);
}

TEST_CASE("consistent mass integrates coefficients exactly")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::square(), pi / 8);
  const SparseMatrix m = assemble_mass(mesh);
  const std::vector<double> ones(mesh.num_vertices(), 1.0);
  CHECK(std::abs(quad(m, ones) - mesh.area()) <= 1e-12 * mesh.area());
  CHECK(std::abs(mesh.area() - 4 * pi * pi) <= 1e-12 * 4 * pi * pi);

  // Two-phase coefficient: c on the right half.
  const double c = 2.0;
  ElementField rho = ElementField::constant(mesh, 1.0);
  double area_c = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.centroid(t).x > 0) {
      rho.values[t] = c;
      area_c += mesh.element_areas()[t];
    }
  }
  const double expected = c * area_c + (mesh.area() - area_c);
  CHECK(std::abs(quad(assemble_mass(mesh, rho), ones) - expected) <= 1e-12 * expected);
  CHECK(area_c == doctest::Approx(0.5 * mesh.area()).epsilon(0.05));
}

TEST_CASE("robin boundary mass")
{
  const Mesh tri = reference_triangle("r");
  BoundaryCondition bc;
  bc.set("r", BcKind::Robin, 6.0).set("d", BcKind::Dirichlet);
  const SparseMatrix r = assemble_robin_boundary(tri, bc);
  CHECK(r.at(0, 0) == doctest::Approx(2.0));
  CHECK(r.at(1, 1) == doctest::Approx(2.0));
  CHECK(r.at(0, 1) == doctest::Approx(1.0));
  CHECK(r.at(1, 0) == doctest::Approx(1.0));
  CHECK(r.at(2, 2) == 0.0);

  BoundaryCondition zero;
  zero.set("r", BcKind::Robin, 0.0).set("d", BcKind::Dirichlet);
  const SparseMatrix r0 = assemble_robin_boundary(tri, zero);
  for (double v : r0.values())
    CHECK(v == 0.0);

  const Mesh sq = geometry::tag_robin_side(geometry::build_mesh(DomainSpec::square(), pi / 8));
  BoundaryCondition b1, b2;
  b1.set("robin", BcKind::Robin, 0.5).set("dirichlet", BcKind::Dirichlet);
  b2.set("robin", BcKind::Robin, 1.0).set("dirichlet", BcKind::Dirichlet);
  const SparseMatrix r1 = assemble_robin_boundary(sq, b1);
  const SparseMatrix r2 = assemble_robin_boundary(sq, b2);
  for (std::size_t i = 0; i < r1.nonzeros(); ++i)
    CHECK(r2.values()[i] == doctest::Approx(2.0 * r1.values()[i]));
  // Total boundary mass equals eta times the robin side length.
  const std::vector<double> ones(sq.num_vertices(), 1.0);
  CHECK(quad(r1, ones) == doctest::Approx(0.5 * 2 * pi).epsilon(1e-12));
  // Supported only on robin vertices.
  std::vector<bool> robin_vertex(sq.num_vertices(), false);
  for (const auto& e : sq.boundary_edges())
    if (e.tag == "robin")
      robin_vertex[e.v[0]] = robin_vertex[e.v[1]] = true;
  for (int i = 0; i < r1.rows(); ++i)
    for (int k = r1.row_ptr()[i]; k < r1.row_ptr()[i + 1]; ++k)
      if (r1.values()[k] != 0.0)
        CHECK((robin_vertex[i] && robin_vertex[r1.cols()[k]]));
}

TEST_CASE("dirichlet elimination")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::square(), pi / 8);
  const SparseMatrix k = assemble_stiffness(mesh, ElementField::constant(mesh, 1.0));
  const SparseMatrix m = assemble_mass(mesh);

  const auto neumann = apply_dirichlet(k, m, mesh, BoundaryCondition::uniform(mesh, BcKind::Neumann));
  CHECK(neumann.dofs.is_identity());
  CHECK(neumann.K.values() == k.values());

  const auto dir = apply_dirichlet(k, m, mesh, BoundaryCondition::uniform(mesh, BcKind::Dirichlet));
  const auto mask = mesh.boundary_vertex_mask();
  const auto interior = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), false));
  CHECK(dir.dofs.free_size() == interior);
  CHECK(dir.K.max_asymmetry() == 0.0);

  const Mesh mixed = geometry::tag_robin_side(mesh);
  BoundaryCondition bc;
  bc.set("robin", BcKind::Robin, 1.0).set("dirichlet", BcKind::Dirichlet);
  const auto red = apply_dirichlet(k, m, mixed, bc);
  const double tol = 1e-9;
  for (std::size_t v = 0; v < mixed.num_vertices(); ++v) {
    const Point p = mixed.vertices()[v];
    const bool on_dirichlet_sides = std::abs(std::abs(p.x) - pi) < tol || std::abs(p.y - pi) < tol;
    CHECK((red.dofs.free_index(v) < 0) == on_dirichlet_sides);
  }

  const auto full = red.dofs.expand(std::vector<double>(red.dofs.free_size(), 1.0));
  for (std::size_t v = 0; v < full.size(); ++v)
    CHECK(full[v] == (red.dofs.free_index(v) < 0 ? 0.0 : 1.0));

  BoundaryCondition wrong;
  wrong.set("nope", BcKind::Dirichlet);
  CHECK_THROWS_AS(apply_dirichlet(k, m, mesh, wrong), ConfigError);
}

TEST_CASE("element gradients of linear functions are exact")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::ellipse(), 0.15);
  std::vector<double> ux, ulin;
  for (Point p : mesh.vertices()) {
    ux.push_back(p.x);
    ulin.push_back(3 * p.x - 2 * p.y + 7);
  }
  const auto gx = element_gradient(mesh, ux);
  const auto gl = element_gradient(mesh, ulin);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    CHECK(gx.values[t][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(gx.values[t][1]) < 1e-12);
    CHECK(gl.values[t][0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(gl.values[t][1] == doctest::Approx(-2.0).epsilon(1e-12));
  }

  const double c = 1.1;
  const auto qc = flux_magnitude_sq(mesh, ElementField::constant(mesh, c), ux);
  for (double v : qc.values)
    CHECK(v == doctest::Approx(c * c).epsilon(1e-12));
  const auto q2 = flux_magnitude_sq(mesh, random_two_phase(mesh, c, 3), ux);
  for (double v : q2.values)
    CHECK((std::abs(v - 1.0) < 1e-12 || std::abs(v - c * c) < 1e-12));
  const auto q1 = flux_magnitude_sq(mesh, ElementField::constant(mesh, 1.0), ulin);
  for (double v : q1.values)
    CHECK(v == doctest::Approx(13.0).epsilon(1e-12));
}

TEST_CASE("galerkin consistency of the stiffness form")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::disk_two_holes(), 0.05);
  const auto u = random_vector(mesh.num_vertices(), 11);
  for (unsigned seed : {1u, 2u}) {
    const ElementField rho = seed == 1 ? ElementField::constant(mesh, 1.0) : random_two_phase(mesh, 2.0, seed);
    const auto g = element_gradient(mesh, u);
    double direct = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
      direct += rho.values[t] * (g.values[t][0] * g.values[t][0] + g.values[t][1] * g.values[t][1]) *
                mesh.element_areas()[t];
    const double form = quad(assemble_stiffness(mesh, rho), u);
    CHECK(std::abs(form - direct) <= 1e-10 * std::abs(direct));
  }
}

TEST_CASE("parallel kernels match the serial reference bitwise")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::disk(), 0.03);
  const ElementField rho = random_two_phase(mesh, 1.1, 5);
  const int saved = parallel::thread_count();
  const SparseMatrix ref_k = reference::assemble_stiffness(mesh, rho);
  const SparseMatrix ref_m = reference::assemble_mass(mesh, rho);
  for (int threads : {1, 2, 4}) {
    parallel::set_thread_count(threads);
    const SparseMatrix k = assemble_stiffness(mesh, rho);
    const SparseMatrix m = assemble_mass(mesh, rho);
    CHECK(k.same_pattern(ref_k));
    CHECK(k.values() == ref_k.values());
    CHECK(m.values() == ref_m.values());
    const auto x = random_vector(mesh.num_vertices(), 9);
    std::vector<double> y1(x.size()), y2(x.size());
    k.multiply(x, y1);
    reference::multiply(ref_k, x, y2);
    CHECK(y1 == y2);
    CHECK(parallel::dot(x, y1) == doctest::Approx(parallel::reference::dot(x, y1)).epsilon(1e-14));
  }
  parallel::set_thread_count(saved);
}

TEST_CASE("coordinate dump and load vector")
{
  const Mesh mesh = geometry::build_mesh(DomainSpec::square(), pi / 4);
  const SparseMatrix k = assemble_stiffness(mesh, ElementField::constant(mesh, 1.0));
  const std::string text = k.to_coordinate_text();
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == k.nonzeros());
  const Assembler asmb(mesh);
  const std::vector<double> f(mesh.num_triangles(), 2.0);
  const auto b = asmb.load(f);
  double total = 0.0;
  for (double v : b)
    total += v;
  CHECK(total == doctest::Approx(2.0 * mesh.area()).epsilon(1e-13));
}
