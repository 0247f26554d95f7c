#include "isoquot/nonisometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace isoquot {

namespace {

constexpr cplx kI(0.0, 1.0);
constexpr double kDomainTol = 1e-10;

struct Blocks {
  Eigen::Index m;
  // (first row, row count)
  std::array<std::pair<Eigen::Index, Eigen::Index>, 3> ranges() const { return {{{0, m}, {m, 1}, {m + 1, 1}}}; }
};

bool bitwise_equal(const JMap& a, const JMap& b) {
  return a.m() == b.m() && (a.j1().array() == b.j1().array()).all() && (a.j2().array() == b.j2().array()).all();
}

}  // namespace

TValue omega0(const CMat& p, const CMat& x) {
  const Eigen::Index m = p.rows() - 2;
  TValue out;
  double* comps[2] = {&out.c1, &out.c2};
  for (int k = 0; k < 2; ++k) {
    const cplx v = p(m + k, 0);
    const double n2 = std::norm(v);
    if (std::sqrt(n2) < kDomainTol) throw std::domain_error("omega0: point outside the principal part (v_j = 0)");
    *comps[k] = (std::conj(x(m + k, 0)) * (kI * v)).real() / n2;
  }
  return out;
}

TValue omega_lambda(const FormSpec& form, const CMat& p, const CMat& x) { return omega0(p, x) + form(p, x); }

OrbitGram orbit_gram(const CMat& p, const std::optional<FormSpec>& form) {
  const std::vector<CMat> fields = {fundamental_field(Generator::z1, p), fundamental_field(Generator::z2, p)};
  OrbitGram out;
  out.gram = form ? gram(*form, p, fields) : gram0(fields);
  out.area = 4.0 * M_PI * M_PI * std::sqrt(std::max(out.gram.determinant(), 0.0));
  return out;
}

CMat point_with_torus_radii(int m, double a1, double a2, Rng& rng) {
  const double rest = 1.0 - a1 * a1 - a2 * a2;
  if (a1 < 0 || a2 < 0 || rest < 0) throw std::invalid_argument("point_with_torus_radii: need a1^2 + a2^2 <= 1");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  CMat p(m + 2, 1);
  CVec u(m);
  for (int k = 0; k < m; ++k) u(k) = cplx(normal(rng), normal(rng));
  p.col(0).head(m) = std::sqrt(rest) * u.normalized();
  p(m, 0) = std::polar(a1, angle(rng));
  p(m + 1, 0) = std::polar(a2, angle(rng));
  return p;
}

LevelSet LevelSet::torus_level(int m, double a) {
  if (!(a > 0.0 && a < 1.0 / std::sqrt(2.0))) throw std::invalid_argument("LevelSet: need 0 < a < 1/sqrt(2)");
  return LevelSet(m, a);
}

CMat LevelSet::project(const CMat& p, const CMat& x) const {
  if (!a_) return project_tangent(Manifold::sphere(m_), p, x);
  CMat out = x;
  for (const auto& [row, count] : Blocks{m_}.ranges()) {
    const auto b = p.block(row, 0, count, 1);
    const double n2 = b.squaredNorm();
    const double c = (b.adjoint() * x.block(row, 0, count, 1))(0, 0).real() / n2;
    out.block(row, 0, count, 1) -= c * b;
  }
  return out;
}

CMat LevelSet::retract(const CMat& near) const {
  if (!a_) return isoquot::retract(Manifold::sphere(m_), near);
  const double a = *a_;
  const double radii[3] = {std::sqrt(1.0 - 2.0 * a * a), a, a};
  CMat out = near;
  int k = 0;
  for (const auto& [row, count] : Blocks{m_}.ranges()) {
    auto b = out.block(row, 0, count, 1);
    b *= radii[k++] / b.norm();
  }
  return out;
}

CMat LevelSet::random_point(Rng& rng) const {
  if (!a_) return isoquot::random_point(Manifold::sphere(m_), rng);
  return point_with_torus_radii(m_, *a_, *a_, rng);
}

CMat LevelSet::random_tangent(const CMat& p, Rng& rng) const {
  std::normal_distribution<double> normal;
  CMat g(p.rows(), 1);
  for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, 0) = cplx(normal(rng), normal(rng));
  CMat x = project(p, g);
  return x / x.norm();
}

bool LevelSet::contains(const CMat& p, double tol) const {
  if (std::abs(p.norm() - 1.0) > tol) return false;
  if (!a_) return true;
  return std::abs(std::abs(p(m_, 0)) - *a_) <= tol && std::abs(std::abs(p(m_ + 1, 0)) - *a_) <= tol;
}

ExteriorDerivative finite_diff_d(const FormEvaluator& omega, const LevelSet& sub, const CMat& p, const CMat& x,
                                 const CMat& y, double h) {
  if (!(h >= 1e-12)) throw std::invalid_argument("finite_diff_d: step underflow");
  const CMat xp = sub.retract(p + h * x);
  const CMat xm = sub.retract(p - h * x);
  const CMat yp = sub.retract(p + h * y);
  const CMat ym = sub.retract(p - h * y);
  const CMat y_at_xp = sub.project(xp, y);
  const CMat y_at_xm = sub.project(xm, y);
  const CMat x_at_yp = sub.project(yp, x);
  const CMat x_at_ym = sub.project(ym, x);

  const TValue x_of_wy = (omega(xp, y_at_xp) - omega(xm, y_at_xm)) * (0.5 / h);
  const TValue y_of_wx = (omega(yp, x_at_yp) - omega(ym, x_at_ym)) * (0.5 / h);
  const CMat bracket = sub.project(p, ((y_at_xp - y_at_xm) - (x_at_yp - x_at_ym)) * (0.5 / h));

  ExteriorDerivative out;
  out.value = x_of_wy - y_of_wx - omega(p, bracket);
  const double scale = std::max({omega(p, x).max_abs(), omega(p, y).max_abs(), 1.0});
  out.noise_floor = std::numeric_limits<double>::epsilon() * scale / h;
  return out;
}

FiniteDiffSweep sweep_finite_diff_d(const FormEvaluator& omega, const LevelSet& sub, int samples, double h,
                                    std::uint64_t seed) {
  std::vector<double> vals(static_cast<std::size_t>(samples), 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < samples; ++i) {
    Rng rng = derived_rng(seed, static_cast<std::uint64_t>(i));
    const CMat p = sub.random_point(rng);
    const CMat x = sub.random_tangent(p, rng);
    const CMat y = sub.random_tangent(p, rng);
    vals[static_cast<std::size_t>(i)] = finite_diff_d(omega, sub, p, x, y, h).value.max_abs();
  }
  FiniteDiffSweep out;
  out.samples = samples;
  for (const double v : vals) out.max_value = std::max(out.max_value, v);
  return out;
}

NonisometryReport nonisometry_report(const JMap& ja, const JMap& jb, const Manifold& mf,
                                     const NonisometryOptions& opts) {
  NonisometryReport rep;
  rep.manifold = mf.name();
  if (mf.kind != ManifoldKind::sphere) {
    rep.verdict = "open";
    rep.note = "non-isometry of the Stiefel quotients is an open problem; no criterion is applied";
    return rep;
  }
  if (ja.m() != jb.m()) throw std::invalid_argument("nonisometry_report: j-maps of different size");

  rep.isospectrality = is_isospectral(ja, jb, opts.isospectral_tol);
  rep.invariant_separation = invariant_separation(ja, jb);
  rep.separated = rep.invariant_separation > opts.separation_tol;
  rep.generic_a = is_generic(ja, opts.generic_tol);
  rep.generic_b = is_generic(jb, opts.generic_tol);

  if (bitwise_equal(ja, jb)) {
    rep.verdict = "isometric (identical)";
    return rep;
  }
  if (!rep.separated) {
    rep.witness = find_equivalence(ja, jb, opts.search);
    if (rep.witness && rep.witness->residual < opts.witness_tol) {
      rep.verdict = "equivalent: criterion inapplicable";
      return rep;
    }
  }

  if (!rep.isospectrality.isospectral) rep.failing_checks.push_back("isospectral");
  if (!rep.separated) rep.failing_checks.push_back("non-equivalence (invariant separation)");
  if (!rep.generic_b.generic) rep.failing_checks.push_back("genericity");
  rep.verdict = rep.failing_checks.empty() ? "non-isometric" : "inconclusive";
  return rep;
}

}  // namespace isoquot
