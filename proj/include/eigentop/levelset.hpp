#pragma once

#include "eigentop/common.hpp"
#include "eigentop/eig.hpp"
#include "eigentop/fem.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace eigentop::levelset {

using fem::ElementField;
using fem::Mesh;
using fem::NodalField;

struct PhaseConfig
{
  Problem problem = Problem::Conductivity;
  Objective objective = Objective::Minimize;
  double c = 1.1;
  double m0 = 0.5;
  fem::BoundaryCondition bc;
  double epsilon = 1e-4;
  int max_steps = 300;
  double stop_tol = 1e-6;
  int stop_window = 20;
  double multiplicity_threshold = 0.99;
  int snapshot_every = 0;
  double volume_tol = 1e-3;
  /// Largest interface displacement per step in element sizes, before the
  /// min(1, 10|c-1|) contrast factor. Fixes, at step 0, the gain g in
  /// dt = g / sup|phi|.
  double cfl = 2.0;
  /// Steps of monotone worsening that abort the run.
  int divergence_window = 50;
  /// Signed-distance reinitialization of phi before every step.
  bool reinitialize = false;
  bool record_wallclock = false;
  /// Random start block of the eigensolver.
  std::uint64_t seed = eig::kDefaultSeed;

  static double default_c(Problem p) { return p == Problem::Conductivity ? 1.1 : 2.0; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct HistoryRow
{
  int step = 0;
  double lambda1 = 0, lambda2 = 0, lambda3 = 0;
  double G = 0;  ///< volume mismatch divided by |Omega|
  double nu = 0; ///< multiplier used to reach this state
  double dt = 0; ///< step size used to reach this state (gain included)
  bool multiplicity = false;
  double wallclock = 0;

  double ratio12() const { return lambda1 / lambda2; }
  double ratio23() const { return lambda2 / lambda3; }
};

struct OptState
{
  int step = 0;
  NodalField phi;
  ElementField coeff; ///< rho (conductivity) or sigma (density), values in {1, c}
  eig::EigenSet eigs; ///< full nodal eigenvectors
  double nu = 0;
  double dt = 0;
  double volume_residual = 0;
  double gain = 1;
  std::vector<HistoryRow> history;
  std::string stop_reason;

  double objective_value() const { return eigs.values.front(); }
};

NodalField init_phi(const Mesh& mesh);
ElementField phase_from_phi(const Mesh& mesh, const NodalField& phi, double c);
/// Area of {phi > 0} (element-mean classification) minus m0 |Omega|.
double volume_mismatch(const Mesh& mesh, const NodalField& phi, double m0);
/// 1 / max |phi|.
double time_step(const NodalField& phi);

/// Consistent-mass integral of w u^2 for an element weight w (nullptr for 1).
double weighted_norm_sq(const Mesh& mesh, std::span<const double> u, const ElementField* w = nullptr);

/// Shape velocity of the first eigenpair for phase value c; negated for maximization.
ElementField velocity_simple(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff, const Mesh& mesh,
                             Objective objective, double c);
/// Sum of the single-mode velocities of the first two pairs. Throws when
/// lambda1/lambda2 is below the threshold.
ElementField velocity_multiplicity2(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff,
                                    const Mesh& mesh, Objective objective, double c, double threshold = 0.99);

/// Reusable operators of the regularized transport step
/// (M/dt + eps K) phi = M phi_prev / dt - b((v0 + nu) |grad phi_prev|).
class Stepper
{
public:
  Stepper(const Mesh& mesh, double epsilon);

  NodalField step(const NodalField& phi_prev, const ElementField& v0, double nu, double dt) const;

  struct Split
  {
    std::vector<double> base;  ///< phi at nu = 0
    std::vector<double> slope; ///< d phi / d nu
  };
  /// The step is affine in nu; both parts from two linear solves.
  Split split(const NodalField& phi_prev, const ElementField& v0, double dt) const;

  const Mesh& mesh() const { return *m_mesh; }

private:
  std::vector<double> solve(const fem::SparseMatrix& a, std::span<const double> rhs) const;
  fem::SparseMatrix system(double dt) const;

  const Mesh* m_mesh;
  double m_eps;
  fem::Assembler m_asm;
  fem::SparseMatrix m_K;
  fem::SparseMatrix m_M;
};

NodalField implicit_step(const Mesh& mesh, const NodalField& phi_prev, const ElementField& v0, double nu, double dt,
                         double epsilon);

struct MultiplierResult
{
  double nu = 0;
  NodalField phi;
  double G = 0; ///< volume mismatch of phi (absolute)
  int evaluations = 0;
};

/// Root-finds nu so that |G(phi_next)| <= volume_tol |Omega|; starts from the
/// interface average of -v0, expands a bracket, then bisects.
MultiplierResult find_multiplier(const Stepper& stepper, const NodalField& phi_prev, const ElementField& v0,
                                 double dt, double m0, double volume_tol = 1e-3);
MultiplierResult find_multiplier(const Mesh& mesh, const NodalField& phi_prev, const ElementField& v0, double dt,
                                 double epsilon, double m0, double volume_tol = 1e-3);

/// Signed distance to the discrete zero level set, sign taken from phi.
NodalField reinitialize(const Mesh& mesh, const NodalField& phi);

/// Eigenpairs of the problem for a given coefficient, with full nodal vectors.
class ModeSolver
{
public:
  ModeSolver(const Mesh& mesh, Problem problem, fem::BoundaryCondition bc, std::uint64_t seed = eig::kDefaultSeed);

  eig::EigenSet solve(const ElementField& coeff, int k = 3);
  bool deflated() const { return m_deflate; }

private:
  const Mesh* m_mesh;
  Problem m_problem;
  fem::BoundaryCondition m_bc;
  fem::Assembler m_asm;
  bool m_deflate;
  std::uint64_t m_seed;
  std::vector<std::vector<double>> m_warm;
};

using StepCallback = std::function<void(const OptState&)>;

/// Level-set gradient flow. Calls `on_step` after every recorded state.
OptState optimize(const PhaseConfig& config, const Mesh& mesh, const StepCallback& on_step = {});

} // namespace eigentop::levelset
