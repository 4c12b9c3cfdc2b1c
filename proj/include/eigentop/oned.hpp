#pragma once

#include "eigentop/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace eigentop::oned {

enum class Bc1d
{
  Dirichlet,
  Neumann
};

/// Piecewise-constant coefficient on (0,1).
struct PiecewiseProfile
{
  std::vector<double> breakpoints; ///< 0 = x0 < x1 < ... < xK = 1
  std::vector<double> values;      ///< one per subinterval

  /// Two-phase profile with alternating values starting from `first`.
  static PiecewiseProfile alternating(std::vector<double> interior_breakpoints, double first, double other);
  static PiecewiseProfile uniform(double rho);

  std::size_t pieces() const { return values.size(); }
  double value_at(double x) const;
  /// Total length of the subintervals where the coefficient equals `v`.
  double measure_of(double v) const;
  bool is_uniform() const;

  /// Breakpoint ordering and positivity. Two-phase profiles in addition need
  /// measure({rho=c}) in (0,1) and distinct adjacent values.
  void validate() const;
  void validate_two_phase(double c) const;

  std::string describe() const;
};

/// k-th eigenvalue (k >= 1) of -(rho u')' + kt2 rho u = lambda u on (0,1).
/// The constant Neumann mode at lambda = 0 is skipped. Uses interface
/// transfer matrices and a Pruefer-angle eigenvalue count, bracketed on a
/// grid of step pi^2/20 and refined by bisection to relative 1e-12.
double eigen_1d(const PiecewiseProfile& profile, Bc1d bc, int k, double transverse_k2 = 0.0);

/// Number of eigenvalues strictly below lambda, counting the Neumann zero mode.
int eigenvalue_count_below(const PiecewiseProfile& profile, Bc1d bc, double lambda, double transverse_k2 = 0.0);

/// Exact eigenfunction for an eigenvalue of the profile, normalized to int u^2 = 1.
class Eigenfunction1d
{
public:
  Eigenfunction1d(const PiecewiseProfile& profile, Bc1d bc, double lambda, double transverse_k2 = 0.0);

  double lambda() const { return m_lambda; }
  double value(double x) const;
  /// rho u'
  double flux(double x) const;
  /// Value and flux at x evaluated with the formula of piece `piece`.
  std::array<double, 2> state_in_piece(std::size_t piece, double x) const;
  const PiecewiseProfile& profile() const { return m_profile; }

private:
  std::size_t piece_of(double x) const;

  PiecewiseProfile m_profile;
  double m_lambda;
  double m_kt2;
  std::vector<std::array<double, 2>> m_start; ///< (u, rho u') at each piece's left end
};

struct BruteForceResult
{
  PiecewiseProfile profile;
  double lambda = 0.0;
  long candidates = 0;
};

/// Exhaustive search over two-phase profiles with 1..max_interfaces
/// interfaces: all but the last interface run over the grid i/grid, the last
/// is placed so that measure({rho=c}) = m0 exactly, both starting phases are
/// tried. Ties go to the lexicographically smallest breakpoint vector.
BruteForceResult brute_force_optimum(double c, double m0, Bc1d bc, Objective objective, int max_interfaces = 4,
                                     int grid = 100);

struct Criterion1dReport
{
  bool trivial = false;
  /// measure(S symmetric-difference {q <= tau}) with tau the m-quantile of q = |rho u'|.
  double sub_violation = 0.0;
  /// measure(S symmetric-difference {q >= tau'}) with tau' the (1-m)-quantile.
  double super_violation = 0.0;
  double tau_sub = 0.0;
  double tau_super = 0.0;
  bool sub_holds = false;
  bool super_holds = false;
};

/// Checks whether S = {rho != 1} is a sub- or super-level set of |rho u1'|
/// on a fine grid, up to an exceptional set of measure `tolerance`.
Criterion1dReport criterion_check_1d(const PiecewiseProfile& profile, Bc1d bc, double tolerance = 0.01,
                                     int samples = 20000);

/// First k eigenvalues of the P1 finite-element discretization on n uniform
/// elements (coefficient sampled at element midpoints; constants deflated
/// for Neumann with kt2 = 0).
std::vector<double> fem_eigen_1d(const PiecewiseProfile& profile, Bc1d bc, int n, int k, double transverse_k2 = 0.0);

} // namespace eigentop::oned
