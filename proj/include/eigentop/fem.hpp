#pragma once

#include "eigentop/geometry.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace eigentop::fem {

using geometry::Mesh;

/// One value per mesh vertex.
struct NodalField
{
  const Mesh* mesh = nullptr;
  std::vector<double> values;

  static NodalField zeros(const Mesh& mesh);
  static NodalField from(const Mesh& mesh, std::vector<double> values);
  /// Throws when the length does not match or a value is not finite.
  void check() const;
  std::size_t size() const { return values.size(); }
};

/// One scalar per triangle (coefficients, criterion quantities).
struct ElementField
{
  const Mesh* mesh = nullptr;
  std::vector<double> values;

  static ElementField constant(const Mesh& mesh, double value);
  static ElementField from(const Mesh& mesh, std::vector<double> values);
  void check() const;
  std::size_t size() const { return values.size(); }
  /// True when every value is exactly `a` or exactly `b`.
  bool takes_only(double a, double b) const;
  double integral() const;
};

/// One 2-vector per triangle (P1 gradients).
struct ElementVectorField
{
  const Mesh* mesh = nullptr;
  std::vector<std::array<double, 2>> values;
};

/// Symmetric matrix in compressed sparse row form, both triangles stored.
class SparseMatrix
{
public:
  SparseMatrix() = default;
  SparseMatrix(int n, std::vector<int> row_ptr, std::vector<int> cols, std::vector<double> values);

  int rows() const { return m_n; }
  std::size_t nonzeros() const { return m_values.size(); }
  const std::vector<int>& row_ptr() const { return m_row_ptr; }
  const std::vector<int>& cols() const { return m_cols; }
  const std::vector<double>& values() const { return m_values; }
  std::vector<double>& values() { return m_values; }

  double at(int i, int j) const;
  std::vector<double> diagonal() const;

  /// y = A x; rows are processed in parallel, each row summed sequentially.
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> operator*(std::span<const double> x) const;

  /// alpha*this + beta*other; both must share a sparsity pattern.
  SparseMatrix combined(double alpha, const SparseMatrix& other, double beta) const;
  SparseMatrix scaled(double alpha) const;

  double max_asymmetry() const;
  /// Max absolute row sum, an upper bound on the spectral norm for symmetric matrices.
  double norm_inf() const;

  Eigen::SparseMatrix<double> to_eigen() const;
  /// Lines `i j value`, one per stored entry.
  std::string to_coordinate_text() const;

  bool same_pattern(const SparseMatrix& other) const;

private:
  int m_n = 0;
  std::vector<int> m_row_ptr{0};
  std::vector<int> m_cols;
  std::vector<double> m_values;
};

enum class BcKind { Dirichlet, Neumann, Robin };

struct BcEntry
{
  BcKind kind = BcKind::Dirichlet;
  double eta = 0.0;
};

/// Boundary condition per boundary tag.
struct BoundaryCondition
{
  std::map<std::string, BcEntry> by_tag;

  static BoundaryCondition uniform(const Mesh& mesh, BcKind kind);
  BoundaryCondition& set(const std::string& tag, BcKind kind, double eta = 0.0);

  /// Throws when a mesh tag is unmapped, a mapped tag is absent, or eta is invalid.
  void check(const Mesh& mesh) const;
  bool pure_neumann() const;
  bool has_robin() const;
};

/// Sparsity pattern and element-to-slot map shared by all P1 operators on a mesh.
class Assembler
{
public:
  explicit Assembler(const Mesh& mesh);

  const Mesh& mesh() const { return *m_mesh; }
  SparseMatrix stiffness(const ElementField& coeff) const;
  SparseMatrix mass(const ElementField& coeff) const;
  SparseMatrix mass() const;
  /// Boundary mass on robin-tagged edges weighted by eta and, optionally, by the
  /// coefficient of the adjacent element.
  SparseMatrix robin(const BoundaryCondition& bc, const ElementField* weight = nullptr) const;
  /// Load vector of an elementwise-constant density f: b_i = sum_T f(T) area(T)/3.
  std::vector<double> load(std::span<const double> f) const;
  SparseMatrix zero() const;

private:
  SparseMatrix gather(const std::vector<std::array<double, 9>>& local) const;

  const Mesh* m_mesh;
  std::vector<int> m_row_ptr;
  std::vector<int> m_cols;
  std::vector<std::array<int, 9>> m_slots;      // CSR position of local entry (a, b)
  std::vector<int> m_incidence_ptr;             // vertex -> incident elements, ascending
  std::vector<std::pair<int, int>> m_incidence; // (element, local index)
};

std::array<double, 9> local_stiffness(geometry::Point a, geometry::Point b, geometry::Point c, double coeff);
std::array<double, 9> local_mass(geometry::Point a, geometry::Point b, geometry::Point c, double coeff);

SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementField& coeff);
SparseMatrix assemble_mass(const Mesh& mesh, const ElementField& coeff);
SparseMatrix assemble_mass(const Mesh& mesh);
SparseMatrix assemble_robin_boundary(const Mesh& mesh, const BoundaryCondition& bc,
                                     const ElementField* weight = nullptr);

/// Maps between full nodal vectors and the free degrees of freedom.
class DofMap
{
public:
  DofMap() = default;
  DofMap(std::size_t full_size, const std::vector<bool>& eliminated);

  std::size_t full_size() const { return m_full_to_free.size(); }
  std::size_t free_size() const { return m_free_to_full.size(); }
  const std::vector<int>& free_to_full() const { return m_free_to_full; }
  int free_index(std::size_t full) const { return m_full_to_free[full]; }
  bool is_identity() const { return free_size() == full_size(); }

  std::vector<double> expand(std::span<const double> reduced) const;
  std::vector<double> restrict_to_free(std::span<const double> full) const;
  SparseMatrix restrict_matrix(const SparseMatrix& a) const;

private:
  std::vector<int> m_full_to_free;
  std::vector<int> m_free_to_full;
};

struct ReducedSystem
{
  SparseMatrix K;
  SparseMatrix M;
  DofMap dofs;
};

/// Removes rows and columns of vertices on Dirichlet-tagged edges.
ReducedSystem apply_dirichlet(const SparseMatrix& K, const SparseMatrix& M, const Mesh& mesh,
                              const BoundaryCondition& bc);

ElementVectorField element_gradient(const Mesh& mesh, std::span<const double> u);
/// rho(T)^2 |grad u(T)|^2 per triangle.
ElementField flux_magnitude_sq(const Mesh& mesh, const ElementField& rho, std::span<const double> u);
/// Square of the P1 interpolant averaged over the three vertices of each triangle.
ElementField vertex_mean_square(const Mesh& mesh, std::span<const double> u);
/// Square of the P1 interpolant at each triangle centroid.
ElementField centroid_square(const Mesh& mesh, std::span<const double> u);

/// Serial implementations kept as the test oracle for the parallel kernels.
namespace reference {
SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementField& coeff);
SparseMatrix assemble_mass(const Mesh& mesh, const ElementField& coeff);
void multiply(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
} // namespace reference

} // namespace eigentop::fem
