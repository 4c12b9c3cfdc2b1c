#pragma once

#include "eigentop/fem.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace eigentop::eig {

using fem::SparseMatrix;

inline constexpr std::uint64_t kDefaultSeed = 0x5EED2024ULL;

/// Eigenpairs in ascending order; vectors live in the space of the matrices passed
/// to the solver and are M-orthonormal.
struct EigenSet
{
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  std::vector<double> residuals;
  bool deflated = false;
  int iterations = 0;

  std::size_t size() const { return values.size(); }
};

struct SolverOptions
{
  double tol = 1e-8;
  int max_iterations = 500;
  std::uint64_t seed = kDefaultSeed;
  /// Optional warm start (for example the previous optimizer step).
  std::vector<std::vector<double>> initial;
  /// Problems with at most this many unknowns are solved densely.
  int dense_threshold = 160;
};

/// k smallest eigenpairs of K u = lambda M u by preconditioned LOBPCG. With
/// `deflate_constants` the constant mode is removed in the M inner product and
/// the returned pairs are the k smallest with 1^T M u = 0.
EigenSet solve_smallest(const SparseMatrix& K, const SparseMatrix& M, int k, bool deflate_constants,
                        const SolverOptions& options = {});

/// (lambda1/lambda2, lambda2/lambda3); needs at least three pairs.
std::pair<double, double> multiplicity_ratio(const EigenSet& es);

double rayleigh_quotient(const SparseMatrix& K, const SparseMatrix& M, std::span<const double> u);

/// Backward-error residual ||K u - lambda M u|| / (||K|| ||u||).
double relative_residual(const SparseMatrix& K, const SparseMatrix& M, std::span<const double> u, double lambda);

struct CgResult
{
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD A; x holds the initial guess
/// on entry. Throws NumericalError when the tolerance is not reached.
CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b, std::span<double> x,
                            double rel_tol = 1e-10, int max_iterations = 0);

} // namespace eigentop::eig
