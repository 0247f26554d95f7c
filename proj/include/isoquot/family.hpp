#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "isoquot/jmap.hpp"

namespace isoquot {

class ContinuationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FamilyOptions {
  double seed_scale = 1.0;  // expected Frobenius norm of J1 and J2 at t = 0
  double max_step = 0.01;
  double min_step = 1e-7;
  int max_reseeds = 8;
  double isospectral_tol = 1e-9;
  double separation_tol = 1e-6;
  double generic_tol = 1e-9;
};

struct FamilyMember {
  double t = 0.0;
  JMap j;
};

struct FamilyValidation {
  double max_isospectral_discrepancy = 0.0;  // against j(0), over all members
  int max_commutant_dimension = 0;
  double min_pairwise_separation = 0.0;  // over members with distinct t
  bool ok = false;
};

struct Family {
  std::vector<FamilyMember> members;  // in the order of the requested t values
  std::uint64_t seed = 0;             // the seed the caller asked for
  int attempts = 0;                   // 1 + number of re-seeds
  int transverse_dimension = 0;       // of the isospectral variety modulo conjugation, at j(0)
  FamilyValidation validation;
};

// Power sums tr((-i j_Z)^p), p = 2..m, on the m+1 certification directions.
// Their level set through j(0) is the isospectral variety.
RVec isospectral_constraints(const JMap& j);
// Derivative of isospectral_constraints with respect to JMap::coordinates().
RMat isospectral_constraint_jacobian(const JMap& j);
// Columns span the tangent space of the SU(m)-conjugation orbit through j.
RMat conjugation_orbit_tangent(const JMap& j);
// Orthonormal basis of the variety's tangent space orthogonal to the orbit.
RMat transverse_tangent_basis(const JMap& j);

// Random generic j(0), then predictor-corrector continuation along the
// isospectral variety in directions orthogonal to the conjugation orbit;
// t is the pseudo-arclength in coordinate space. Throws std::invalid_argument
// for m < 3 and ContinuationFailure when every re-seed fails.
Family generate_family(int m, const std::vector<double>& t_values, std::uint64_t seed,
                       const FamilyOptions& opts = {});

FamilyValidation validate_family(const std::vector<FamilyMember>& members, const FamilyOptions& opts = {});

}  // namespace isoquot
