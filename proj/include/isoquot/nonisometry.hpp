#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "isoquot/geometry.hpp"

namespace isoquot {

// Pullback of the g0 connection form of the T-bundle over the sphere quotient:
// component j is <V_j, i v_j> / |v_j|^2. Throws std::domain_error when
// |v_j| < 1e-10.
TValue omega0(const CMat& p, const CMat& x);

// omega0 + kappa for a sphere form.
TValue omega_lambda(const FormSpec& form, const CMat& p, const CMat& x);

struct OrbitGram {
  RMat gram;    // g(Z_j^#, Z_k^#)
  double area;  // 4 pi^2 sqrt(det gram)
};

// From the fundamental fields and the metric of `form` (g0 when absent).
OrbitGram orbit_gram(const CMat& p, const std::optional<FormSpec>& form = std::nullopt);

// Sphere point with |v1| = a1, |v2| = a2 and a random u of the remaining norm.
CMat point_with_torus_radii(int m, double a1, double a2, Rng& rng);

// Submanifold of the sphere on which exterior derivatives are taken: the
// whole sphere, or the level set S_a = {|v1| = |v2| = a}, 0 < a < 1/sqrt(2).
class LevelSet {
 public:
  static LevelSet whole_sphere(int m) { return LevelSet(m, std::nullopt); }
  static LevelSet torus_level(int m, double a);

  int m() const { return m_; }
  std::optional<double> a() const { return a_; }

  CMat project(const CMat& p, const CMat& x) const;
  CMat retract(const CMat& near) const;
  CMat random_point(Rng& rng) const;
  CMat random_tangent(const CMat& p, Rng& rng) const;
  bool contains(const CMat& p, double tol = 1e-12) const;

 private:
  LevelSet(int m, std::optional<double> a) : m_(m), a_(a) {}
  int m_;
  std::optional<double> a_;
};

using FormEvaluator = std::function<TValue(const CMat& p, const CMat& x)>;

struct ExteriorDerivative {
  TValue value;
  double noise_floor = 0.0;  // round-off estimate eps |omega| / h
};

// d omega(X, Y) = X omega(Y~) - Y omega(X~) - omega([X~, Y~]) with X~, Y~ the
// projected ambient-constant extensions, by central differences of step h
// along retracted curves. Throws std::invalid_argument for h below 1e-12.
ExteriorDerivative finite_diff_d(const FormEvaluator& omega, const LevelSet& sub, const CMat& p, const CMat& x,
                                 const CMat& y, double h);

struct FiniteDiffSweep {
  double max_value = 0.0;  // max |d omega| over the samples
  int samples = 0;
};

// Max of |finite_diff_d| over random (p, X, Y) on `sub`, parallel over samples.
FiniteDiffSweep sweep_finite_diff_d(const FormEvaluator& omega, const LevelSet& sub, int samples, double h,
                                    std::uint64_t seed);

struct NonisometryOptions {
  double separation_tol = 1e-6;
  double generic_tol = 1e-9;
  double isospectral_tol = 1e-9;
  double witness_tol = 1e-8;
  EquivalenceSearchOptions search;
};

struct NonisometryReport {
  std::string verdict;  // "non-isometric", "inconclusive", "equivalent: criterion inapplicable",
                        // "isometric (identical)", "open"
  std::string manifold;
  IsospectralityReport isospectrality;
  double invariant_separation = 0.0;
  bool separated = false;
  std::optional<EquivalenceWitness> witness;
  GenericityReport generic_a;
  GenericityReport generic_b;
  std::vector<std::string> failing_checks;
  std::string note;
};

NonisometryReport nonisometry_report(const JMap& ja, const JMap& jb, const Manifold& mf,
                                     const NonisometryOptions& opts = {});
inline NonisometryReport nonisometry_report(const JMap& ja, const JMap& jb, const NonisometryOptions& opts = {}) {
  return nonisometry_report(ja, jb, Manifold::sphere(ja.m()), opts);
}

}  // namespace isoquot
