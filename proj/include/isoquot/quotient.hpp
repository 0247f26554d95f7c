#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isoquot/geometry.hpp"

namespace isoquot {

// First-order g_kappa distance between nearby points: the chord q - p is
// projected onto the tangent space at the retracted midpoint, rescaled from
// chord to arc length of the ambient Frobenius sphere, and measured in
// g_kappa there. Symmetric in (p, q); exact for the round sphere.
double local_distance(const FormSpec& form, const CMat& p, const CMat& q);

struct QuotientDistanceOptions {
  int resolution = 16;  // theta grid before the bracketed refinement
};

// min over theta of local_distance(x, e^{i theta} y), the G-orbit distance
// in the local regime. Arguments are put in a canonical order first so the
// result is exactly symmetric.
double quotient_distance(const FormSpec& form, const CMat& x, const CMat& y, const QuotientDistanceOptions& opts = {});

// Closed form for the undeformed sphere quotient:
// arccos(|<u_x, u_y>| + Re <v_x, v_y>).
double round_quotient_distance(const CMat& x, const CMat& y);

// Allocation-free evaluator for sphere forms (points stored as s x 1 columns).
class SphereDistanceKernel {
 public:
  explicit SphereDistanceKernel(const JMap& j);

  double local(const cplx* p, const cplx* q) const;
  double quotient(const cplx* x, const cplx* y, int resolution = 16) const;

  // Every G-orbit distance satisfies d_kappa >= d_round / (1 + bound()).
  double bound() const { return bound_; }
  int m() const { return m_; }

 private:
  int m_;
  std::vector<cplx> j1_;  // row-major
  std::vector<cplx> j2_;
  double bound_;
  std::vector<cplx> phases_;  // e^{i theta} on the default grid
};

// Dimension of the G-stabilizer (0 or 1) for the circle actions here.
int stabilizer_dim(const Manifold& mf, const CMat& p, double tol = 1e-8);

// Sphere points whose G-stabilizer is trivial and whose image in G\M has
// trivial T-stabilizer: u != 0, v1 != 0, v2 != 0.
bool in_principal_hat(const CMat& p, double tol = 1e-8);
// Same set, decided from the rank of the Gram matrix of (Z1^#, Z2^#, i^#).
bool in_principal_hat_computed(const CMat& p, double tol = 1e-8);

struct OrbifoldReport {
  int manifold_dim = 0;
  int quotient_dim = 0;
  std::optional<int> singular_dim;  // empty when the fixed-point set is empty
  std::optional<int> codim;
  bool is_orbifold = false;
  std::string singular_model;  // "S^3 (round)", "U(2) (bi-invariant)", or "empty"
};

// A circle quotient is an orbifold iff the fixed-point set is empty or has
// codimension <= 2.
OrbifoldReport orbifold_report(const Manifold& mf);

}  // namespace isoquot
