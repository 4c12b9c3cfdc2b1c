#include "eigentop/criteria.hpp"
#include "eigentop/error.hpp"
#include "eigentop/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace eigentop::criteria {

namespace {

bool inside(const ElementField& S, std::size_t t)
{
  return S.values[t] != 0.0;
}

void check_sizes(const Mesh& mesh, const ElementField& f, const char* what)
{
  if (f.values.size() != mesh.num_triangles())
    throw Error(std::string(what) + " must have one value per triangle");
}

} // namespace

ElementField indicator(const ElementField& coeff, double c)
{
  ElementField s{coeff.mesh, std::vector<double>(coeff.values.size(), 0.0)};
  for (std::size_t t = 0; t < s.values.size(); ++t)
    s.values[t] = coeff.values[t] == c ? 1.0 : 0.0;
  return s;
}

CriterionReport level_set_match(const Mesh& mesh, const ElementField& q, const ElementField& S, Side side,
                                double band_tol)
{
  check_sizes(mesh, q, "quantity");
  check_sizes(mesh, S, "indicator");
  const auto& areas = mesh.element_areas();
  const std::size_t n = areas.size();
  const double total = mesh.area();
  double s_area = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    if (inside(S, t))
      s_area += areas[t];

  CriterionReport r;
  r.side = side;
  r.band_tol = band_tol;
  // Order elements so that the matched level set is a prefix.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double sign = side == Side::Sub ? 1.0 : -1.0;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sign * q.values[a] < sign * q.values[b]; });
  double acc = 0.0;
  std::size_t k = 0;
  while (k < n && acc < s_area) {
    acc += areas[order[k]];
    ++k;
  }
  if (k == 0) {
    r.tau = n ? q.values[order[0]] : 0.0;
  } else {
    r.tau = q.values[order[k - 1]];
  }
  // Level set {q <= tau} (or >=) including every tie.
  auto in_level = [&](std::size_t t) { return side == Side::Sub ? q.values[t] <= r.tau : q.values[t] >= r.tau; };
  double level_area = 0.0, bad = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const bool l = in_level(t);
    if (l)
      level_area += areas[t];
    if (l != inside(S, t))
      bad += areas[t];
  }
  r.indeterminate = s_area > 0 && level_area > s_area + mesh.max_element_area() * (1 + 1e-12);
  r.violation_fraction = std::clamp(bad / total, 0.0, 1.0);
  r.pass = !r.indeterminate && r.violation_fraction <= band_tol;
  return r;
}

Side expected_side(Problem problem, Objective objective)
{
  const bool minimize = objective == Objective::Minimize;
  if (problem == Problem::Conductivity)
    return minimize ? Side::Sub : Side::Super;
  return minimize ? Side::Super : Side::Sub;
}

ElementField single_mode_quantity(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff,
                                  const Mesh& mesh)
{
  if (eigs.vectors.empty() || eigs.vectors[0].size() != mesh.num_vertices())
    throw Error("criterion needs the first eigenvector as a full nodal vector");
  if (problem == Problem::Conductivity)
    return fem::flux_magnitude_sq(mesh, coeff, eigs.vectors[0]);
  return fem::centroid_square(mesh, eigs.vectors[0]);
}

ElementField two_mode_quantity(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff, const Mesh& mesh,
                               double threshold)
{
  if (eigs.size() < 2 || eigs.vectors.size() < 2)
    throw Error("two-mode quantity needs two eigenpairs");
  const double ratio = eigs.values[0] / eigs.values[1];
  if (ratio < threshold)
    throw Error("first eigenvalue is simple (lambda1/lambda2 = " + std::to_string(ratio) + ")");
  ElementField q = ElementField::constant(mesh, 0.0);
  for (int i = 0; i < 2; ++i) {
    const auto& u = eigs.vectors[i];
    if (u.size() != mesh.num_vertices())
      throw Error("eigenvectors must be full nodal vectors");
    if (problem == Problem::Conductivity) {
      const double norm = levelset::weighted_norm_sq(mesh, u);
      const auto f = fem::flux_magnitude_sq(mesh, coeff, u);
      for (std::size_t t = 0; t < q.values.size(); ++t)
        q.values[t] += f.values[t] / norm;
    } else {
      const double norm = levelset::weighted_norm_sq(mesh, u, &coeff);
      const auto f = fem::centroid_square(mesh, u);
      for (std::size_t t = 0; t < q.values.size(); ++t)
        q.values[t] += f.values[t] / norm;
    }
  }
  return q;
}

CriterionReport check_optimality(Problem problem, Objective objective, const eig::EigenSet& eigs,
                                 const ElementField& coeff, double c, const Mesh& mesh, double threshold,
                                 double band_tol)
{
  const bool multiple = eigs.size() >= 2 && eigs.values[0] / eigs.values[1] >= threshold;
  const ElementField q = multiple ? two_mode_quantity(problem, eigs, coeff, mesh, threshold)
                                  : single_mode_quantity(problem, eigs, coeff, mesh);
  CriterionReport r = level_set_match(mesh, q, indicator(coeff, c), expected_side(problem, objective), band_tol);
  r.problem = problem;
  r.objective = objective;
  r.multiplicity = multiple;
  if (problem == Problem::Conductivity)
    r.quantity = multiple ? "rho^2(|grad u1|^2+|grad u2|^2)" : "|rho grad u1|^2";
  else
    r.quantity = multiple ? "|u1|^2+|u2|^2" : "|u1|^2";
  return r;
}

SymmetryReport symmetry_check(const Mesh& mesh, const geometry::DomainSpec& spec, const ElementField& S,
                              const geometry::Transform& transform)
{
  check_sizes(mesh, S, "indicator");
  if (!spec.is_symmetry(transform))
    throw GeometryError("transform " + transform.describe() + " is not a symmetry of the " + spec.name() + " domain");
  SymmetryReport r;
  r.transform = transform.describe();
  if (transform.kind == geometry::Transform::Kind::Identity)
    return r;
  const geometry::PointLocator locator(mesh);
  const auto& areas = mesh.element_areas();
  double bad = 0.0;
  for (std::size_t t = 0; t < areas.size(); ++t) {
    const int image = locator.locate_or_nearest(transform.apply(mesh.centroid(t)));
    if (inside(S, t) != inside(S, static_cast<std::size_t>(image)))
      bad += areas[t];
  }
  r.fraction = std::clamp(bad / mesh.area(), 0.0, 1.0);
  return r;
}

SymmetryReport radial_symmetry_deviation(const Mesh& mesh, const geometry::DomainSpec& spec, const ElementField& S)
{
  const double pi = std::numbers::pi;
  const geometry::Point c = spec.symmetry_center();
  SymmetryReport worst;
  worst.transform = "none";
  for (int k = 0; k < 8; ++k) {
    std::vector<geometry::Transform> ts{geometry::Transform::reflection(c, k * pi / 8)};
    if (k > 0)
      ts.push_back(geometry::Transform::rotation(c, k * pi / 4));
    for (const auto& t : ts) {
      const auto rep = symmetry_check(mesh, spec, S, t);
      if (rep.fraction >= worst.fraction)
        worst = rep;
    }
  }
  return worst;
}

double symmetric_difference(const Mesh& mesh, const ElementField& S1, const ElementField& S2)
{
  check_sizes(mesh, S1, "indicator");
  check_sizes(mesh, S2, "indicator");
  const auto& areas = mesh.element_areas();
  double bad = 0.0;
  for (std::size_t t = 0; t < areas.size(); ++t)
    if (inside(S1, t) != inside(S2, t))
      bad += areas[t];
  return bad / mesh.area();
}

NodalDomains nodal_domains(const Mesh& mesh, std::span<const double> u)
{
  if (u.size() != mesh.num_vertices())
    throw Error("nodal vector length does not match the vertex count");
  const auto& tris = mesh.triangles();
  std::vector<int> sign(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double m = u[tris[t][0]] + u[tris[t][1]] + u[tris[t][2]];
    sign[t] = m > 0 ? 1 : (m < 0 ? -1 : 0);
  }
  std::map<std::pair<int, int>, std::vector<int>> edge_owners;
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int e = 0; e < 3; ++e) {
      const int a = tris[t][e], b = tris[t][(e + 1) % 3];
      edge_owners[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(t));
    }
  std::vector<std::vector<int>> nbr(tris.size());
  for (const auto& [edge, owners] : edge_owners)
    if (owners.size() == 2) {
      nbr[owners[0]].push_back(owners[1]);
      nbr[owners[1]].push_back(owners[0]);
    }
  NodalDomains d;
  d.label.assign(tris.size(), -1);
  std::vector<int> stack;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (sign[t] == 0 || d.label[t] >= 0)
      continue;
    d.label[t] = d.count;
    stack.push_back(static_cast<int>(t));
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      for (int nb : nbr[cur])
        if (d.label[nb] < 0 && sign[nb] == sign[cur]) {
          d.label[nb] = d.count;
          stack.push_back(nb);
        }
    }
    ++d.count;
  }
  return d;
}

std::vector<MultiplicityRow> multiplicity_table(const std::vector<std::string>& labels,
                                                const std::vector<RunSummary>& runs)
{
  std::vector<MultiplicityRow> rows;
  for (const auto& label : labels) {
    MultiplicityRow row{label, std::nullopt, std::nullopt};
    const auto it = std::find_if(runs.begin(), runs.end(), [&](const RunSummary& r) { return r.label == label; });
    if (it != runs.end() && it->lambdas.size() >= 3) {
      row.ratio12 = it->lambdas[0] / it->lambdas[1];
      row.ratio23 = it->lambdas[1] / it->lambdas[2];
    }
    rows.push_back(row);
  }
  return rows;
}

std::string to_string(Side side)
{
  return side == Side::Sub ? "sub" : "super";
}

std::string csv_header()
{
  return "problem,objective,multiplicity,quantity,side,tau,violation_fraction,band_tol,indeterminate,pass";
}

std::string to_csv(const CriterionReport& r)
{
  std::ostringstream os;
  os.precision(10);
  os << eigentop::to_string(r.problem) << ',' << eigentop::to_string(r.objective) << ',' << (r.multiplicity ? 1 : 0)
     << ",\"" << r.quantity << "\"," << to_string(r.side) << ',' << r.tau << ',' << r.violation_fraction << ','
     << r.band_tol << ',' << (r.indeterminate ? 1 : 0) << ',' << (r.pass ? 1 : 0);
  return os.str();
}

std::string to_text(const CriterionReport& r)
{
  std::ostringstream os;
  os.precision(6);
  os << "criterion: " << eigentop::to_string(r.problem) << '/' << eigentop::to_string(r.objective) << ", quantity "
     << r.quantity << ", S as " << to_string(r.side) << "-level set, tau = " << r.tau
     << ", violation = " << r.violation_fraction << " (band " << r.band_tol << ")"
     << (r.indeterminate ? ", indeterminate" : "") << " -> " << (r.pass ? "PASS" : "FAIL");
  return os.str();
}

std::string to_text(const std::vector<MultiplicityRow>& table)
{
  std::ostringstream os;
  os.precision(6);
  os << "run  lambda1/lambda2  lambda2/lambda3\n";
  for (const auto& row : table) {
    os << row.label << "  ";
    if (row.ratio12)
      os << *row.ratio12 << "  " << *row.ratio23 << '\n';
    else
      os << "absent  absent\n";
  }
  return os.str();
}

} // namespace eigentop::criteria
