#pragma once

#include "eigentop/common.hpp"
#include "eigentop/eig.hpp"
#include "eigentop/fem.hpp"

#include <optional>
#include <string>
#include <vector>

namespace eigentop::criteria {

using fem::ElementField;
using fem::Mesh;

enum class Side
{
  Sub,  ///< S matches {q <= tau}
  Super ///< S matches {q >= tau}
};

struct CriterionReport
{
  Problem problem = Problem::Conductivity;
  Objective objective = Objective::Minimize;
  bool multiplicity = false;
  std::string quantity;
  Side side = Side::Sub;
  double violation_fraction = 0.0;
  double tau = 0.0;
  double band_tol = 0.05;
  /// The quantile falls inside a block of tied values larger than one element.
  bool indeterminate = false;
  bool pass = false;
};

struct SymmetryReport
{
  std::string transform;
  double fraction = 0.0;
};

/// 0/1 element indicator of {coeff == c}.
ElementField indicator(const ElementField& coeff, double c);

/// Matches the indicator S (nonzero = inside) against the sub- or
/// super-level set of q at the area quantile of S's area fraction.
CriterionReport level_set_match(const Mesh& mesh, const ElementField& q, const ElementField& S, Side side,
                                double band_tol = 0.05);

/// Side on which S should sit for the first-eigenvalue optimizer.
Side expected_side(Problem problem, Objective objective);

/// |rho grad u1|^2 (conductivity) or |u1|^2 at centroids (density).
ElementField single_mode_quantity(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff,
                                  const Mesh& mesh);
/// rho^2(|grad u1|^2 + |grad u2|^2) with int u_i^2 = 1, or |u1|^2 + |u2|^2 with
/// int sigma u_i^2 = 1. Throws when lambda1/lambda2 is below the threshold.
ElementField two_mode_quantity(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff, const Mesh& mesh,
                               double threshold = 0.99);

/// Criterion check of an optimizer state, using the two-mode quantity when
/// lambda1/lambda2 >= threshold.
CriterionReport check_optimality(Problem problem, Objective objective, const eig::EigenSet& eigs,
                                 const ElementField& coeff, double c, const Mesh& mesh, double threshold = 0.99,
                                 double band_tol = 0.05);

/// Area fraction of S that changes under the transform. Throws GeometryError
/// when the transform is not a symmetry of the domain.
SymmetryReport symmetry_check(const Mesh& mesh, const geometry::DomainSpec& spec, const ElementField& S,
                              const geometry::Transform& transform);
/// Largest symmetry_check fraction over the rotations by k*45 degrees and the
/// reflections across axes at k*22.5 degrees about the symmetry center.
SymmetryReport radial_symmetry_deviation(const Mesh& mesh, const geometry::DomainSpec& spec, const ElementField& S);

/// area(S1 symmetric-difference S2) / |Omega| on a shared mesh.
double symmetric_difference(const Mesh& mesh, const ElementField& S1, const ElementField& S2);

struct NodalDomains
{
  std::vector<int> label; ///< per element, -1 on the (discrete) null set
  int count = 0;
};
/// Connected components (through shared edges) of elements where the
/// centroid value of u is nonzero, split by sign.
NodalDomains nodal_domains(const Mesh& mesh, std::span<const double> u);

struct MultiplicityRow
{
  std::string label;
  std::optional<double> ratio12;
  std::optional<double> ratio23;
};

struct RunSummary
{
  std::string label;
  std::vector<double> lambdas; ///< at least three when present
};

/// One row per requested label, in the given order; absent runs keep empty ratios.
std::vector<MultiplicityRow> multiplicity_table(const std::vector<std::string>& labels,
                                                const std::vector<RunSummary>& runs);

std::string to_string(Side side);
std::string csv_header();
std::string to_csv(const CriterionReport& r);
std::string to_text(const CriterionReport& r);
std::string to_text(const std::vector<MultiplicityRow>& table);

} // namespace eigentop::criteria
