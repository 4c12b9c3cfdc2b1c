#include "eigentop/error.hpp"
#include "eigentop/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace eigentop::fem {

using geometry::Point;

NodalField NodalField::zeros(const Mesh& mesh) { return {&mesh, std::vector<double>(mesh.num_vertices(), 0.0)}; }

NodalField NodalField::from(const Mesh& mesh, std::vector<double> values)
{
  NodalField f{&mesh, std::move(values)};
  f.check();
  return f;
}

void NodalField::check() const
{
  if (!mesh || values.size() != mesh->num_vertices())
    throw Error("nodal field length does not match the vertex count");
  for (double v : values)
    if (!std::isfinite(v))
      throw NumericalError("nodal field has a non-finite value");
}

ElementField ElementField::constant(const Mesh& mesh, double value)
{
  return {&mesh, std::vector<double>(mesh.num_triangles(), value)};
}

ElementField ElementField::from(const Mesh& mesh, std::vector<double> values)
{
  ElementField f{&mesh, std::move(values)};
  f.check();
  return f;
}

void ElementField::check() const
{
  if (!mesh || values.size() != mesh->num_triangles())
    throw Error("element field length does not match the triangle count");
  for (double v : values)
    if (!std::isfinite(v))
      throw NumericalError("element field has a non-finite value");
}

bool ElementField::takes_only(double a, double b) const
{
  return std::all_of(values.begin(), values.end(), [&](double v) { return v == a || v == b; });
}

double ElementField::integral() const
{
  const auto& areas = mesh->element_areas();
  double s = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t)
    s += values[t] * areas[t];
  return s;
}

std::array<double, 9> local_stiffness(Point a, Point b, Point c, double coeff)
{
  const double area = 0.5 * geometry::cross(b - a, c - a);
  // Scaled gradients of the barycentric functions: grad phi_i = g_i / (2 area).
  const std::array<Point, 3> g = {Point{b.y - c.y, c.x - b.x}, Point{c.y - a.y, a.x - c.x},
                                  Point{a.y - b.y, b.x - a.x}};
  std::array<double, 9> k{};
  const double s = coeff / (4.0 * area);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      k[3 * i + j] = s * geometry::dot(g[i], g[j]);
  return k;
}

std::array<double, 9> local_mass(Point a, Point b, Point c, double coeff)
{
  const double area = 0.5 * geometry::cross(b - a, c - a);
  const double off = coeff * area / 12.0;
  std::array<double, 9> m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m[3 * i + j] = i == j ? 2.0 * off : off;
  return m;
}

namespace {

void require_positive(const ElementField& coeff, const Mesh& mesh)
{
  if (coeff.values.size() != mesh.num_triangles())
    throw Error("coefficient length does not match the triangle count");
  for (double v : coeff.values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error("coefficient must be positive on every element");
}

template <class Local>
std::vector<std::array<double, 9>> local_matrices(const Mesh& mesh, const ElementField& coeff, Local local)
{
  const auto& vs = mesh.vertices();
  const auto& tris = mesh.triangles();
  std::vector<std::array<double, 9>> out(tris.size());
  const auto n = static_cast<std::ptrdiff_t>(tris.size());
#pragma omp parallel for schedule(static) if (n > 2048)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto& tri = tris[t];
    out[t] = local(vs[tri[0]], vs[tri[1]], vs[tri[2]], coeff.values[t]);
  }
  return out;
}

std::uint64_t edge_key(int a, int b)
{
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

} // namespace

Assembler::Assembler(const Mesh& mesh) : m_mesh(&mesh)
{
  const std::size_t nv = mesh.num_vertices();
  const auto& tris = mesh.triangles();
  std::vector<std::vector<int>> adj(nv);
  for (const auto& t : tris)
    for (int a : t)
      for (int b : t)
        adj[a].push_back(b);
  m_row_ptr.assign(nv + 1, 0);
  for (std::size_t i = 0; i < nv; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    m_row_ptr[i + 1] = m_row_ptr[i] + static_cast<int>(row.size());
  }
  m_cols.reserve(m_row_ptr.back());
  for (const auto& row : adj)
    m_cols.insert(m_cols.end(), row.begin(), row.end());

  m_slots.resize(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int a = 0; a < 3; ++a) {
      const int i = tris[t][a];
      const auto begin = m_cols.begin() + m_row_ptr[i];
      const auto end = m_cols.begin() + m_row_ptr[i + 1];
      for (int b = 0; b < 3; ++b)
        m_slots[t][3 * a + b] = static_cast<int>(std::lower_bound(begin, end, tris[t][b]) - m_cols.begin());
    }
  }

  m_incidence_ptr.assign(nv + 1, 0);
  for (const auto& t : tris)
    for (int v : t)
      ++m_incidence_ptr[v + 1];
  std::partial_sum(m_incidence_ptr.begin(), m_incidence_ptr.end(), m_incidence_ptr.begin());
  m_incidence.resize(m_incidence_ptr.back());
  std::vector<int> fill(m_incidence_ptr.begin(), m_incidence_ptr.end() - 1);
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int a = 0; a < 3; ++a)
      m_incidence[fill[tris[t][a]]++] = {static_cast<int>(t), a};
}

SparseMatrix Assembler::gather(const std::vector<std::array<double, 9>>& local) const
{
  std::vector<double> values(m_cols.size(), 0.0);
  const auto nv = static_cast<std::ptrdiff_t>(m_row_ptr.size() - 1);
  // Each row collects its contributions in ascending element order, which is
  // exactly the order of a serial element loop.
#pragma omp parallel for schedule(static) if (nv > 2048)
  for (std::ptrdiff_t i = 0; i < nv; ++i) {
    for (int k = m_incidence_ptr[i]; k < m_incidence_ptr[i + 1]; ++k) {
      const auto [t, a] = m_incidence[k];
      for (int b = 0; b < 3; ++b)
        values[m_slots[t][3 * a + b]] += local[t][3 * a + b];
    }
  }
  return SparseMatrix(static_cast<int>(nv), m_row_ptr, m_cols, std::move(values));
}

SparseMatrix Assembler::stiffness(const ElementField& coeff) const
{
  require_positive(coeff, *m_mesh);
  return gather(local_matrices(*m_mesh, coeff, local_stiffness));
}

SparseMatrix Assembler::mass(const ElementField& coeff) const
{
  require_positive(coeff, *m_mesh);
  return gather(local_matrices(*m_mesh, coeff, local_mass));
}

SparseMatrix Assembler::mass() const { return mass(ElementField::constant(*m_mesh, 1.0)); }

SparseMatrix Assembler::zero() const
{
  return SparseMatrix(static_cast<int>(m_row_ptr.size() - 1), m_row_ptr, m_cols,
                      std::vector<double>(m_cols.size(), 0.0));
}

SparseMatrix Assembler::robin(const BoundaryCondition& bc, const ElementField* weight) const
{
  const Mesh& mesh = *m_mesh;
  bc.check(mesh);
  if (weight)
    require_positive(*weight, mesh);

  std::unordered_map<std::uint64_t, int> owner;
  if (weight) {
    const auto& tris = mesh.triangles();
    for (std::size_t t = 0; t < tris.size(); ++t)
      for (int k = 0; k < 3; ++k)
        owner[edge_key(tris[t][k], tris[t][(k + 1) % 3])] = static_cast<int>(t);
  }

  SparseMatrix r = zero();
  auto& values = r.values();
  auto slot = [&](int i, int j) {
    const auto begin = m_cols.begin() + m_row_ptr[i];
    const auto end = m_cols.begin() + m_row_ptr[i + 1];
    return static_cast<std::size_t>(std::lower_bound(begin, end, j) - m_cols.begin());
  };
  for (const auto& e : mesh.boundary_edges()) {
    const BcEntry& entry = bc.by_tag.at(e.tag);
    if (entry.kind != BcKind::Robin || entry.eta == 0.0)
      continue;
    const int a = e.v[0], b = e.v[1];
    double w = entry.eta * geometry::distance(mesh.vertices()[a], mesh.vertices()[b]) / 6.0;
    if (weight)
      w *= weight->values[owner.at(edge_key(a, b))];
    values[slot(a, a)] += 2.0 * w;
    values[slot(b, b)] += 2.0 * w;
    values[slot(a, b)] += w;
    values[slot(b, a)] += w;
  }
  return r;
}

std::vector<double> Assembler::load(std::span<const double> f) const
{
  const auto& areas = m_mesh->element_areas();
  const auto nv = static_cast<std::ptrdiff_t>(m_row_ptr.size() - 1);
  std::vector<double> b(nv, 0.0);
#pragma omp parallel for schedule(static) if (nv > 2048)
  for (std::ptrdiff_t i = 0; i < nv; ++i) {
    double s = 0.0;
    for (int k = m_incidence_ptr[i]; k < m_incidence_ptr[i + 1]; ++k) {
      const int t = m_incidence[k].first;
      s += f[t] * areas[t] / 3.0;
    }
    b[i] = s;
  }
  return b;
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementField& coeff) { return Assembler(mesh).stiffness(coeff); }
SparseMatrix assemble_mass(const Mesh& mesh, const ElementField& coeff) { return Assembler(mesh).mass(coeff); }
SparseMatrix assemble_mass(const Mesh& mesh) { return Assembler(mesh).mass(); }
SparseMatrix assemble_robin_boundary(const Mesh& mesh, const BoundaryCondition& bc, const ElementField* weight)
{
  return Assembler(mesh).robin(bc, weight);
}

BoundaryCondition BoundaryCondition::uniform(const Mesh& mesh, BcKind kind)
{
  BoundaryCondition bc;
  for (const auto& tag : mesh.tags())
    bc.set(tag, kind);
  return bc;
}

BoundaryCondition& BoundaryCondition::set(const std::string& tag, BcKind kind, double eta)
{
  by_tag[tag] = {kind, eta};
  return *this;
}

void BoundaryCondition::check(const Mesh& mesh) const
{
  const auto tags = mesh.tags();
  for (const auto& tag : tags)
    if (!by_tag.count(tag))
      throw ConfigError("boundary tag '" + tag + "' has no boundary condition");
  for (const auto& [tag, entry] : by_tag) {
    if (!tags.count(tag))
      throw ConfigError("boundary condition names tag '" + tag + "' which the mesh does not have");
    if (entry.kind == BcKind::Robin && (!std::isfinite(entry.eta) || entry.eta < 0.0))
      throw ConfigError("robin coefficient for tag '" + tag + "' must be finite and nonnegative");
  }
}

bool BoundaryCondition::pure_neumann() const
{
  return std::all_of(by_tag.begin(), by_tag.end(), [](const auto& kv) {
    return kv.second.kind == BcKind::Neumann || (kv.second.kind == BcKind::Robin && kv.second.eta == 0.0);
  });
}

bool BoundaryCondition::has_robin() const
{
  return std::any_of(by_tag.begin(), by_tag.end(), [](const auto& kv) { return kv.second.kind == BcKind::Robin; });
}

DofMap::DofMap(std::size_t full_size, const std::vector<bool>& eliminated) : m_full_to_free(full_size, -1)
{
  for (std::size_t i = 0; i < full_size; ++i) {
    if (!eliminated[i]) {
      m_full_to_free[i] = static_cast<int>(m_free_to_full.size());
      m_free_to_full.push_back(static_cast<int>(i));
    }
  }
}

std::vector<double> DofMap::expand(std::span<const double> reduced) const
{
  std::vector<double> full(full_size(), 0.0);
  for (std::size_t k = 0; k < m_free_to_full.size(); ++k)
    full[m_free_to_full[k]] = reduced[k];
  return full;
}

std::vector<double> DofMap::restrict_to_free(std::span<const double> full) const
{
  std::vector<double> r(free_size());
  for (std::size_t k = 0; k < m_free_to_full.size(); ++k)
    r[k] = full[m_free_to_full[k]];
  return r;
}

SparseMatrix DofMap::restrict_matrix(const SparseMatrix& a) const
{
  if (is_identity())
    return a;
  std::vector<int> rp{0};
  std::vector<int> cols;
  std::vector<double> vals;
  for (int full_row : m_free_to_full) {
    for (int k = a.row_ptr()[full_row]; k < a.row_ptr()[full_row + 1]; ++k) {
      const int c = m_full_to_free[a.cols()[k]];
      if (c < 0)
        continue;
      cols.push_back(c);
      vals.push_back(a.values()[k]);
    }
    rp.push_back(static_cast<int>(cols.size()));
  }
  return SparseMatrix(static_cast<int>(free_size()), std::move(rp), std::move(cols), std::move(vals));
}

ReducedSystem apply_dirichlet(const SparseMatrix& K, const SparseMatrix& M, const Mesh& mesh,
                              const BoundaryCondition& bc)
{
  bc.check(mesh);
  if (K.rows() != static_cast<int>(mesh.num_vertices()) || M.rows() != K.rows())
    throw Error("matrices were not assembled on this mesh");
  std::vector<bool> eliminated(mesh.num_vertices(), false);
  for (const auto& e : mesh.boundary_edges()) {
    if (bc.by_tag.at(e.tag).kind == BcKind::Dirichlet) {
      eliminated[e.v[0]] = true;
      eliminated[e.v[1]] = true;
    }
  }
  DofMap dofs(mesh.num_vertices(), eliminated);
  if (dofs.free_size() == 0)
    throw Error("every vertex is constrained");
  return {dofs.restrict_matrix(K), dofs.restrict_matrix(M), std::move(dofs)};
}

ElementVectorField element_gradient(const Mesh& mesh, std::span<const double> u)
{
  if (u.size() != mesh.num_vertices())
    throw Error("nodal vector length does not match the vertex count");
  const auto& vs = mesh.vertices();
  const auto& tris = mesh.triangles();
  const auto& areas = mesh.element_areas();
  ElementVectorField g{&mesh, std::vector<std::array<double, 2>>(tris.size())};
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Point a = vs[tris[t][0]], b = vs[tris[t][1]], c = vs[tris[t][2]];
    const double ua = u[tris[t][0]], ub = u[tris[t][1]], uc = u[tris[t][2]];
    const double s = 1.0 / (2.0 * areas[t]);
    g.values[t] = {s * (ua * (b.y - c.y) + ub * (c.y - a.y) + uc * (a.y - b.y)),
                   s * (ua * (c.x - b.x) + ub * (a.x - c.x) + uc * (b.x - a.x))};
  }
  return g;
}

ElementField flux_magnitude_sq(const Mesh& mesh, const ElementField& rho, std::span<const double> u)
{
  const ElementVectorField g = element_gradient(mesh, u);
  ElementField q{&mesh, std::vector<double>(mesh.num_triangles())};
  for (std::size_t t = 0; t < q.values.size(); ++t) {
    const double r = rho.values[t];
    q.values[t] = r * r * (g.values[t][0] * g.values[t][0] + g.values[t][1] * g.values[t][1]);
  }
  return q;
}

ElementField vertex_mean_square(const Mesh& mesh, std::span<const double> u)
{
  ElementField q{&mesh, std::vector<double>(mesh.num_triangles())};
  const auto& tris = mesh.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double a = u[tris[t][0]], b = u[tris[t][1]], c = u[tris[t][2]];
    q.values[t] = (a * a + b * b + c * c) / 3.0;
  }
  return q;
}

ElementField centroid_square(const Mesh& mesh, std::span<const double> u)
{
  ElementField q{&mesh, std::vector<double>(mesh.num_triangles())};
  const auto& tris = mesh.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double m = (u[tris[t][0]] + u[tris[t][1]] + u[tris[t][2]]) / 3.0;
    q.values[t] = m * m;
  }
  return q;
}

namespace reference {

namespace {

template <class Local>
SparseMatrix assemble(const Mesh& mesh, const ElementField& coeff, Local local)
{
  require_positive(coeff, mesh);
  struct Entry
  {
    int i, j;
    double v;
  };
  std::vector<Entry> entries;
  const auto& vs = mesh.vertices();
  const auto& tris = mesh.triangles();
  entries.reserve(9 * tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& tri = tris[t];
    const auto m = local(vs[tri[0]], vs[tri[1]], vs[tri[2]], coeff.values[t]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        entries.push_back({tri[a], tri[b], m[3 * a + b]});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& x, const Entry& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
  const int n = static_cast<int>(mesh.num_vertices());
  std::vector<int> rp(n + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  for (std::size_t k = 0; k < entries.size();) {
    const int i = entries[k].i, j = entries[k].j;
    double s = 0.0;
    while (k < entries.size() && entries[k].i == i && entries[k].j == j)
      s += entries[k++].v;
    cols.push_back(j);
    vals.push_back(s);
    rp[i + 1] = static_cast<int>(cols.size());
  }
  for (int i = 0; i < n; ++i)
    rp[i + 1] = std::max(rp[i + 1], rp[i]);
  return SparseMatrix(n, std::move(rp), std::move(cols), std::move(vals));
}

} // namespace

SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementField& coeff)
{
  return assemble(mesh, coeff, local_stiffness);
}

SparseMatrix assemble_mass(const Mesh& mesh, const ElementField& coeff) { return assemble(mesh, coeff, local_mass); }

} // namespace reference

} // namespace eigentop::fem
