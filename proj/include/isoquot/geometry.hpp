#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isoquot/jmap.hpp"

namespace isoquot {

enum class ManifoldKind { sphere, stiefel };

// S^{2m+3} in C^{m+2}, or the complex Stiefel manifold V_r(C^{m+2}).
// Points are (m+2) x r complex matrices; the sphere is stored as r = 1.
// G = S^1 acts on the top m rows, T = S^1 x S^1 on rows m and m+1.
struct Manifold {
  ManifoldKind kind = ManifoldKind::sphere;
  int m = 3;
  int r = 1;

  static Manifold sphere(int m) { return {ManifoldKind::sphere, m, 1}; }
  static Manifold stiefel(int m, int r);

  int s() const { return m + 2; }
  int dimension() const { return 2 * s() * r - r * r; }
  std::string name() const;
};

// Components of a t-valued quantity in the basis (Z1, Z2).
struct TValue {
  double c1 = 0.0;
  double c2 = 0.0;

  TValue operator+(const TValue& o) const { return {c1 + o.c1, c2 + o.c2}; }
  TValue operator-(const TValue& o) const { return {c1 - o.c1, c2 - o.c2}; }
  TValue operator*(double k) const { return {k * c1, k * c2}; }
  double max_abs() const;
};

inline double apply_weight(const Weight& mu, const TValue& v) { return mu.p * v.c1 + mu.q * v.c2; }

enum class Generator { z1, z2, g };

// Round metric / Re tr(X* Y).
inline double g0(const CMat& x, const CMat& y) { return real_inner(x, y); }

double constraint_residual(const Manifold& mf, const CMat& p);
double tangency_residual(const Manifold& mf, const CMat& p, const CMat& x);
CMat project_tangent(const Manifold& mf, const CMat& p, const CMat& x);
// Nearest manifold point: normalization (sphere) or polar factor (Stiefel).
CMat retract(const Manifold& mf, const CMat& near);

CMat random_point(const Manifold& mf, Rng& rng);
// Ambient Gaussian, projected to T_p and normalized in g0.
CMat random_tangent(const Manifold& mf, const CMat& p, Rng& rng);
// g0-orthonormal basis of T_p, dimension() elements.
std::vector<CMat> tangent_frame(const Manifold& mf, const CMat& p);

CMat fundamental_field(Generator gen, const CMat& p);
// kappa^# for a t-value: c1 Z1^# + c2 Z2^#.
CMat torus_field(const TValue& v, const CMat& p);

CMat act_g(double theta, const CMat& p);
CMat act_t(double theta1, double theta2, const CMat& p);

// (m+2) x (m+2) matrix diag(A, I_2) of E_mu.
CMat block_isometry(const CMat& a);

// The sphere form: |u|^2 <j_Zk u, U> - <U, iu> <j_Zk u, iu>.
TValue kappa_sphere(const JMap& j, const CMat& p, const CMat& x);
// <kappa(X), Z_k> = g0(X, j_Zk^#) = Re tr(X* J_k Q) with J_k = diag(j(Z_k), 0_2).
TValue kappa_stiefel(const JMap& j, const CMat& q, const CMat& x);

// Which 1-form a FormSpec evaluates.
enum class FormKind { sphere, stiefel_raw, stiefel_horizontal };

struct FormSpec {
  Manifold manifold;
  JMap j;
  FormKind kind = FormKind::sphere;

  static FormSpec sphere(const JMap& j) { return {Manifold::sphere(j.m()), j, FormKind::sphere}; }
  static FormSpec stiefel(const JMap& j, int r, bool horizontalized = true);

  TValue operator()(const CMat& p, const CMat& x) const;
  std::string kind_name() const;
};

// |i^#|^2 kappa(X) - g0(X, i^#) kappa(i^#) for the raw Stiefel form.
TValue horizontalize(const JMap& j, const CMat& q, const CMat& x);

double metric_g_kappa(const FormSpec& form, const CMat& p, const CMat& x, const CMat& y);
RMat gram(const FormSpec& form, const CMat& p, const std::vector<CMat>& frame);
RMat gram0(const std::vector<CMat>& frame);

struct AdmissibilityReport {
  double t_horizontal = 0.0;  // max |kappa(Z_k^#)|
  double g_horizontal = 0.0;  // max |kappa(i^#)|
  double t_invariant = 0.0;   // max |kappa_{zp}(z X) - kappa_p(X)|
  double g_invariant = 0.0;
  std::vector<std::string> failures;  // names of properties above tolerance
  bool ok() const { return failures.empty(); }
};

AdmissibilityReport check_admissible(const FormSpec& form, int n_points, std::uint64_t seed, double tol = 1e-10);

struct IntertwiningReport {
  CMat a;                          // A_Z in SU(m)
  double residual = 0.0;           // max |mu(kappa_p(X)) - mu(kappa'_{Ep}(E X))|
  double equivariance = 0.0;       // max |E(z p) - z E(p)| over G and T elements
  double isometry = 0.0;           // max |g0(EX, EY) - g0(X, Y)|
  double tangency = 0.0;           // max tangency residual of E X at E p
  bool ok = false;
};

// Checks mu o kappa = E_mu^*(mu o kappa') with E_mu = diag(A_Z, I_2).
// `kind` selects the sphere form or the (horizontalized) Stiefel form on V_r.
IntertwiningReport verify_intertwining(const JMap& j, const JMap& j2, const Weight& mu, const Manifold& mf,
                                       int n_points, std::uint64_t seed, double tol = 1e-8);

struct VolumeReport {
  double max_deviation = 0.0;  // max |det Gram(g_kappa) - det Gram(g0)| on g0-orthonormal frames
  int points = 0;
};

VolumeReport check_volume(const FormSpec& form, int n_points, std::uint64_t seed);

// max |kappa_H(p, X) - kappa(p, X)| between the horizontalized V_1 form and
// the sphere form at random (point, tangent) pairs.
double r1_reduction_residual(const JMap& j, int n_points, std::uint64_t seed);

// Serial references for the verification loops above.
namespace serial {
AdmissibilityReport check_admissible(const FormSpec& form, int n_points, std::uint64_t seed, double tol = 1e-10);
VolumeReport check_volume(const FormSpec& form, int n_points, std::uint64_t seed);
}  // namespace serial

}  // namespace isoquot
