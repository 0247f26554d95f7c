#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isoquot/linalg.hpp"

namespace isoquot {

// m x m matrix with A* = -A. The su(m) flag additionally requires trace 0.
class SkewHermitian {
 public:
  static constexpr double kTolerance = 1e-12;

  SkewHermitian() = default;
  // Throws std::invalid_argument unless `a` is skew-Hermitian (and traceless
  // when `traceless` is set) within kTolerance, scaled by max(1, |a|).
  explicit SkewHermitian(CMat a, bool traceless = true);

  const CMat& matrix() const { return a_; }
  int dim() const { return static_cast<int>(a_.rows()); }

 private:
  CMat a_;
};

// Element Z = a*Z1 + b*Z2 of the torus Lie algebra in the basis Z1=(i,0), Z2=(0,i).
struct TorusVector {
  double a = 0.0;
  double b = 0.0;
};

// Lattice weight mu with mu(Z1) = p, mu(Z2) = q.
struct Weight {
  int p = 0;
  int q = 0;

  // The direction Z with <Z, X> = mu(X) for the standard inner product.
  TorusVector direction() const { return {static_cast<double>(p), static_cast<double>(q)}; }
};

// Linear map t ~ R^2 -> su(m), stored as the images of Z1 and Z2.
class JMap {
 public:
  JMap() = default;
  JMap(SkewHermitian j1, SkewHermitian j2);
  JMap(const CMat& j1, const CMat& j2) : JMap(SkewHermitian(j1), SkewHermitian(j2)) {}

  static JMap zero(int m);

  int m() const { return j1_.dim(); }
  const CMat& j1() const { return j1_.matrix(); }
  const CMat& j2() const { return j2_.matrix(); }

  CMat eval(const TorusVector& z) const { return z.a * j1() + z.b * j2(); }

  JMap scaled(double c) const { return JMap(c * j1(), c * j2()); }
  JMap conjugated_by(const CMat& a) const;  // (A J1 A^-1, A J2 A^-1)

  // Real coordinates (J1 then J2) in the orthonormal su(m) basis.
  RVec coordinates() const;
  static JMap from_coordinates(int m, const RVec& x);

 private:
  SkewHermitian j1_;
  SkewHermitian j2_;
};

// Signed permutation psi of {Z1, Z2}, optionally composed with complex
// conjugation. Applied to j it yields the pair (j_{psi(Z1)}, j_{psi(Z2)}),
// conjugated entrywise when `conjugate` is set.
struct EquivalenceSymmetry {
  bool swap = false;  // psi(Z1) in {+-Z2} instead of {+-Z1}
  int sign1 = 1;      // psi(Z1) = sign1 * Z_{1 or 2}
  int sign2 = 1;      // psi(Z2) = sign2 * Z_{2 or 1}
  bool conjugate = false;

  JMap apply(const JMap& j) const;
  std::string describe() const;

  // All 16 elements; index 0 is the identity.
  static const std::array<EquivalenceSymmetry, 16>& all();
};

// Equal sorted spectra of j_Z and j2_Z on these m+1 directions imply equal
// spectra for every Z, since the characteristic coefficients of a*J1 + b*J2
// are homogeneous of degree <= m in (a, b).
std::vector<TorusVector> certification_directions(int m);

struct IsospectralityReport {
  bool isospectral = false;
  std::vector<TorusVector> directions;
  std::vector<double> discrepancy;  // max |sorted eigenvalue difference| per direction
  double max_discrepancy = 0.0;
};

IsospectralityReport is_isospectral(const JMap& j, const JMap& j2, double tol = 1e-9);

struct GenericityReport {
  bool generic = false;
  int commutant_dimension = 0;
  RVec singular_values;  // of the commutator system, ascending
};

GenericityReport is_generic(const JMap& j, double tol = 1e-9);

// Trace words of length <= 4 in (A, B) = (J1, J2) up to cyclic rotation.
// Even-length traces are real and odd-length ones are purely imaginary, so
// each word contributes one real number.
const std::vector<std::string>& invariant_words();
RVec raw_invariants(const JMap& j);

struct CanonicalInvariants {
  RVec values;
  int symmetry_index = 0;  // element of EquivalenceSymmetry::all() attaining the minimum
};

// Lexicographically minimal raw invariant vector over the 16-element orbit.
CanonicalInvariants equivalence_invariants(const JMap& j);

// min over the 16 symmetries s of max_k |raw(s(j))_k - raw(j2)_k|. A value
// above the separation tolerance certifies non-equivalence.
double invariant_separation(const JMap& j, const JMap& j2);

struct EquivalenceWitness {
  CMat a;  // in SU(m)
  EquivalenceSymmetry symmetry;
  int symmetry_index = 0;
  double residual = 0.0;
  int restart = 0;
};

struct EquivalenceSearchOptions {
  int iterations = 200;  // Levenberg-Marquardt steps per restart
  int restarts = 8;      // per symmetry
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

// Looks for A and a symmetry with A s(j)_k A^-1 = j2_k (k = 1, 2).
// std::nullopt means no witness was found within the budget; it is not a
// proof of non-equivalence.
std::optional<EquivalenceWitness> find_equivalence(const JMap& j, const JMap& j2,
                                                   const EquivalenceSearchOptions& opts = {});

// Residual sqrt(sum_k |A s(j)_k A^* - j2_k|^2).
double equivalence_residual(const JMap& j, const JMap& j2, const CMat& a,
                            const EquivalenceSymmetry& sym);

// A_Z in SU(m) with j2_Z = A_Z j_Z A_Z^-1, built by aligning the
// eigendecompositions of -i j_Z and -i j2_Z. With `require_equal_spectra`
// unequal spectra throw std::invalid_argument; otherwise the aligned matrix
// is returned regardless and callers see the mismatch in their residuals.
CMat conjugator(const JMap& j, const JMap& j2, const TorusVector& z, bool require_equal_spectra = true);

}  // namespace isoquot
