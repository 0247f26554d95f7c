#include "isoquot/quotient.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace isoquot {

namespace {

constexpr int kBrentBits = std::numeric_limits<double>::digits / 2;
constexpr int kMaxKernelRows = 32;

// Arc length over chord length on a sphere of radius sqrt(r).
double arc_factor(double chord, double r) {
  const double x = chord / (2.0 * std::sqrt(r));
  if (x < 1e-8) return 1.0 + x * x / 6.0;
  return std::asin(std::min(x, 1.0)) / x;
}

bool lex_less(const CMat& a, const CMat& b) {
  const Eigen::Index n = std::min(a.size(), b.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx x = a.data()[k];
    const cplx y = b.data()[k];
    if (x.real() != y.real()) return x.real() < y.real();
    if (x.imag() != y.imag()) return x.imag() < y.imag();
  }
  return a.size() < b.size();
}

template <typename F>
double refine_on_grid(F&& f, double best_val, int best, int res) {
  const double step = 2.0 * M_PI / res;
  std::uintmax_t max_iter = 200;
  const auto r = boost::math::tools::brent_find_minima(f, (best - 1) * step, (best + 1) * step, kBrentBits, max_iter);
  // Brent stops at ~sqrt(eps) in theta, which leaves ~1e-8 when the orbits
  // (nearly) meet and f has a kink. One parabola step on f^2 fixes that.
  const double h = 1e-6;
  const double fm = f(r.first - h), f0 = r.second, fp = f(r.first + h);
  const double a = fm * fm, b = f0 * f0, c = fp * fp;
  const double curv = a - 2.0 * b + c;
  double out = std::min(best_val, r.second);
  if (curv > 0.0) out = std::min(out, f(r.first + 0.5 * h * (a - c) / curv));
  return out;
}

template <typename F>
double minimize_over_circle(F&& f, int resolution) {
  const int res = std::max(resolution, 3);
  const double step = 2.0 * M_PI / res;
  int best = 0;
  double best_val = f(0.0);
  for (int k = 1; k < res; ++k) {
    const double v = f(k * step);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  return refine_on_grid(f, best_val, best, res);
}

}  // namespace

double local_distance(const FormSpec& form, const CMat& p, const CMat& q) {
  const Manifold& mf = form.manifold;
  const CMat mid = retract(mf, p + q);
  const CMat chord = q - p;
  const double factor = arc_factor(chord.norm(), static_cast<double>(p.cols()));
  const CMat x = project_tangent(mf, mid, chord);
  const double n2 = metric_g_kappa(form, mid, x, x);
  return factor * std::sqrt(std::max(n2, 0.0));
}

double quotient_distance(const FormSpec& form, const CMat& x, const CMat& y, const QuotientDistanceOptions& opts) {
  const bool swap = lex_less(y, x);
  const CMat& a = swap ? y : x;
  const CMat& b = swap ? x : y;
  if (form.kind == FormKind::sphere && a.rows() <= kMaxKernelRows) {
    const SphereDistanceKernel kernel(form.j);
    return kernel.quotient(a.data(), b.data(), opts.resolution);
  }
  auto f = [&](double theta) { return local_distance(form, a, act_g(theta, b)); };
  return minimize_over_circle(f, opts.resolution);
}

double round_quotient_distance(const CMat& x, const CMat& y) {
  const Eigen::Index m = x.rows() - 2;
  const double c = std::abs(x.col(0).head(m).dot(y.col(0).head(m))) + x.col(0).tail(2).dot(y.col(0).tail(2)).real();
  return std::acos(std::clamp(c, -1.0, 1.0));
}

SphereDistanceKernel::SphereDistanceKernel(const JMap& j) : m_(j.m()) {
  if (m_ + 2 > kMaxKernelRows) throw std::invalid_argument("SphereDistanceKernel: m too large");
  j1_.resize(static_cast<std::size_t>(m_ * m_));
  j2_.resize(static_cast<std::size_t>(m_ * m_));
  for (int r = 0; r < m_; ++r)
    for (int c = 0; c < m_; ++c) {
      j1_[static_cast<std::size_t>(r * m_ + c)] = j.j1()(r, c);
      j2_[static_cast<std::size_t>(r * m_ + c)] = j.j2()(r, c);
    }
  // |kappa(X)^#| <= |X| |u|^3 sqrt(1 - |u|^2) sqrt(|J1|^2 + |J2|^2), and
  // t^{3/2} (1 - t)^{1/2} peaks at t = 3/4.
  const double op1 = Eigen::JacobiSVD<CMat>(j.j1()).singularValues()(0);
  const double op2 = Eigen::JacobiSVD<CMat>(j.j2()).singularValues()(0);
  bound_ = std::pow(0.75, 1.5) * 0.5 * std::sqrt(op1 * op1 + op2 * op2);
  phases_.resize(16);
  for (int k = 0; k < 16; ++k) phases_[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * M_PI * k / 16);
}

double SphereDistanceKernel::local(const cplx* p, const cplx* q) const {
  const int m = m_;
  const int s = m + 2;
  std::array<cplx, kMaxKernelRows> mid;
  std::array<cplx, kMaxKernelRows> x;
  double nmid = 0.0;
  double nchord = 0.0;
  for (int k = 0; k < s; ++k) {
    mid[k] = p[k] + q[k];
    x[k] = q[k] - p[k];
    nmid += std::norm(mid[k]);
    nchord += std::norm(x[k]);
  }
  const double inv = 1.0 / std::sqrt(nmid);
  double re_mx = 0.0;
  for (int k = 0; k < s; ++k) {
    mid[k] *= inv;
    re_mx += (std::conj(mid[k]) * x[k]).real();
  }
  for (int k = 0; k < s; ++k) x[k] -= re_mx * mid[k];
  const double factor = arc_factor(std::sqrt(nchord), 1.0);

  double nu2 = 0.0;
  double u_iu = 0.0;  // <U, iu>
  double nU2 = 0.0;
  for (int k = 0; k < m; ++k) {
    nu2 += std::norm(mid[k]);
    nU2 += std::norm(x[k]);
    u_iu += (std::conj(x[k]) * cplx(-mid[k].imag(), mid[k].real())).real();
  }
  double c[2];
  const cplx* mats[2] = {j1_.data(), j2_.data()};
  for (int t = 0; t < 2; ++t) {
    double ju_U = 0.0;
    double ju_iu = 0.0;
    for (int r = 0; r < m; ++r) {
      cplx ju(0.0, 0.0);
      const cplx* row = mats[t] + r * m;
      for (int col = 0; col < m; ++col) ju += row[col] * mid[col];
      ju_U += (std::conj(ju) * x[r]).real();
      ju_iu += (std::conj(ju) * cplx(-mid[r].imag(), mid[r].real())).real();
    }
    c[t] = nu2 * ju_U - u_iu * ju_iu;
  }
  const cplx w1 = x[m] + cplx(0.0, c[0]) * mid[m];
  const cplx w2 = x[m + 1] + cplx(0.0, c[1]) * mid[m + 1];
  const double n2 = nU2 + std::norm(w1) + std::norm(w2);
  return factor * std::sqrt(n2);
}

double SphereDistanceKernel::quotient(const cplx* x, const cplx* y, int resolution) const {
  const int m = m_;
  const int s = m + 2;
  std::array<cplx, kMaxKernelRows> rotated;
  for (int k = m; k < s; ++k) rotated[k] = y[k];
  auto at_phase = [&](cplx phase) {
    for (int k = 0; k < m; ++k) rotated[k] = phase * y[k];
    return local(x, rotated.data());
  };
  auto f = [&](double theta) { return at_phase(std::polar(1.0, theta)); };
  if (resolution != static_cast<int>(phases_.size())) return minimize_over_circle(f, resolution);
  int best = 0;
  double best_val = at_phase(phases_[0]);
  for (int k = 1; k < resolution; ++k) {
    const double v = at_phase(phases_[static_cast<std::size_t>(k)]);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  return refine_on_grid(f, best_val, best, resolution);
}

int stabilizer_dim(const Manifold& mf, const CMat& p, double tol) {
  if (mf.kind == ManifoldKind::stiefel && mf.r >= 3) return 0;
  return p.topRows(mf.m).norm() < tol ? 1 : 0;
}

bool in_principal_hat(const CMat& p, double tol) {
  const Eigen::Index m = p.rows() - 2;
  return p.topRows(m).norm() > tol && std::abs(p(m, 0)) > tol && std::abs(p(m + 1, 0)) > tol;
}

bool in_principal_hat_computed(const CMat& p, double tol) {
  const std::vector<CMat> fields = {fundamental_field(Generator::z1, p), fundamental_field(Generator::z2, p),
                                    fundamental_field(Generator::g, p)};
  const RMat g = gram0(fields);
  Eigen::SelfAdjointEigenSolver<RMat> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) > tol * tol;
}

OrbifoldReport orbifold_report(const Manifold& mf) {
  OrbifoldReport rep;
  rep.manifold_dim = mf.dimension();
  rep.quotient_dim = rep.manifold_dim - 1;
  if (mf.kind == ManifoldKind::sphere || mf.r == 1) {
    rep.singular_dim = 3;
    rep.singular_model = "S^3 (round)";
  } else if (mf.r == 2) {
    rep.singular_dim = 4;
    rep.singular_model = "U(2) (bi-invariant)";
  } else {
    rep.singular_model = "empty";
  }
  if (rep.singular_dim) rep.codim = rep.quotient_dim - *rep.singular_dim;
  rep.is_orbifold = !rep.codim || *rep.codim <= 2;
  return rep;
}

}  // namespace isoquot
