#include "isoquot/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace isoquot {

namespace {

constexpr cplx kI(0.0, 1.0);

double re_dot(const CMat& a, const CMat& b) { return real_inner(a, b); }

}  // namespace

Manifold Manifold::stiefel(int m, int r) {
  if (m < 1) throw std::invalid_argument("Manifold::stiefel: m must be positive");
  if (r < 1 || r > m + 2) {
    std::ostringstream os;
    os << "Manifold::stiefel: need 1 <= r <= m+2 = " << m + 2 << ", got r = " << r;
    throw std::invalid_argument(os.str());
  }
  return {ManifoldKind::stiefel, m, r};
}

std::string Manifold::name() const {
  std::ostringstream os;
  if (kind == ManifoldKind::sphere)
    os << "sphere(m=" << m << ")";
  else
    os << "stiefel(m=" << m << ",r=" << r << ")";
  return os.str();
}

double TValue::max_abs() const { return std::max(std::abs(c1), std::abs(c2)); }

double constraint_residual(const Manifold& mf, const CMat& p) {
  if (p.rows() != mf.s() || p.cols() != mf.r) return std::numeric_limits<double>::infinity();
  return (p.adjoint() * p - CMat::Identity(mf.r, mf.r)).cwiseAbs().maxCoeff();
}

double tangency_residual(const Manifold& /*mf*/, const CMat& p, const CMat& x) {
  const CMat px = p.adjoint() * x;
  return (px + px.adjoint()).cwiseAbs().maxCoeff();
}

CMat project_tangent(const Manifold& /*mf*/, const CMat& p, const CMat& x) {
  const CMat px = p.adjoint() * x;
  return x - p * (0.5 * (px + px.adjoint()));
}

CMat retract(const Manifold& mf, const CMat& near) {
  if (mf.kind == ManifoldKind::sphere || near.cols() == 1) return near / near.norm();
  Eigen::JacobiSVD<CMat> svd(near, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

CMat random_point(const Manifold& mf, Rng& rng) {
  std::normal_distribution<double> normal;
  CMat g(mf.s(), mf.r);
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = cplx(normal(rng), normal(rng));
  return retract(mf, g);
}

CMat random_tangent(const Manifold& mf, const CMat& p, Rng& rng) {
  std::normal_distribution<double> normal;
  CMat g(p.rows(), p.cols());
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = cplx(normal(rng), normal(rng));
  CMat x = project_tangent(mf, p, g);
  return x / std::sqrt(g0(x, x));
}

std::vector<CMat> tangent_frame(const Manifold& mf, const CMat& p) {
  std::vector<CMat> frame;
  const int target = mf.dimension();
  frame.reserve(static_cast<std::size_t>(target));
  for (Eigen::Index c = 0; c < p.cols() && static_cast<int>(frame.size()) < target; ++c) {
    for (Eigen::Index r = 0; r < p.rows() && static_cast<int>(frame.size()) < target; ++r) {
      for (const cplx unit : {cplx(1.0, 0.0), kI}) {
        CMat e = CMat::Zero(p.rows(), p.cols());
        e(r, c) = unit;
        CMat v = project_tangent(mf, p, e);
        for (int pass = 0; pass < 2; ++pass)
          for (const CMat& f : frame) v -= g0(f, v) * f;
        const double n = std::sqrt(g0(v, v));
        if (n > 1e-6) frame.push_back(v / n);
        if (static_cast<int>(frame.size()) == target) break;
      }
    }
  }
  if (static_cast<int>(frame.size()) != target) throw std::runtime_error("tangent_frame: rank deficiency");
  return frame;
}

CMat fundamental_field(Generator gen, const CMat& p) {
  const Eigen::Index m = p.rows() - 2;
  CMat out = CMat::Zero(p.rows(), p.cols());
  switch (gen) {
    case Generator::z1:
      out.row(m) = kI * p.row(m);
      break;
    case Generator::z2:
      out.row(m + 1) = kI * p.row(m + 1);
      break;
    case Generator::g:
      out.topRows(m) = kI * p.topRows(m);
      break;
  }
  return out;
}

CMat torus_field(const TValue& v, const CMat& p) {
  const Eigen::Index m = p.rows() - 2;
  CMat out = CMat::Zero(p.rows(), p.cols());
  out.row(m) = (kI * v.c1) * p.row(m);
  out.row(m + 1) = (kI * v.c2) * p.row(m + 1);
  return out;
}

CMat act_g(double theta, const CMat& p) {
  CMat out = p;
  out.topRows(p.rows() - 2) *= std::polar(1.0, theta);
  return out;
}

CMat act_t(double theta1, double theta2, const CMat& p) {
  CMat out = p;
  const Eigen::Index m = p.rows() - 2;
  out.row(m) *= std::polar(1.0, theta1);
  out.row(m + 1) *= std::polar(1.0, theta2);
  return out;
}

CMat block_isometry(const CMat& a) {
  const Eigen::Index m = a.rows();
  CMat e = CMat::Identity(m + 2, m + 2);
  e.topLeftCorner(m, m) = a;
  return e;
}

TValue kappa_sphere(const JMap& j, const CMat& p, const CMat& x) {
  const int m = j.m();
  const CVec u = p.col(0).head(m);
  const CVec uu = x.col(0).head(m);
  const CVec iu = kI * u;
  const double nu2 = u.squaredNorm();
  const double u_iu = uu.dot(iu).real();  // <U, iu>
  auto component = [&](const CMat& jk) {
    const CVec ju = jk * u;
    return nu2 * ju.dot(uu).real() - u_iu * ju.dot(iu).real();
  };
  return {component(j.j1()), component(j.j2())};
}

TValue kappa_stiefel(const JMap& j, const CMat& q, const CMat& x) {
  const int m = j.m();
  const auto qt = q.topRows(m);
  const auto xt = x.topRows(m);
  return {re_dot(xt, j.j1() * qt), re_dot(xt, j.j2() * qt)};
}

TValue horizontalize(const JMap& j, const CMat& q, const CMat& x) {
  const CMat ig = fundamental_field(Generator::g, q);
  return kappa_stiefel(j, q, x) * g0(ig, ig) - kappa_stiefel(j, q, ig) * g0(x, ig);
}

FormSpec FormSpec::stiefel(const JMap& j, int r, bool horizontalized) {
  return {Manifold::stiefel(j.m(), r), j, horizontalized ? FormKind::stiefel_horizontal : FormKind::stiefel_raw};
}

TValue FormSpec::operator()(const CMat& p, const CMat& x) const {
  switch (kind) {
    case FormKind::sphere:
      return kappa_sphere(j, p, x);
    case FormKind::stiefel_raw:
      return kappa_stiefel(j, p, x);
    case FormKind::stiefel_horizontal:
      return horizontalize(j, p, x);
  }
  return {};
}

std::string FormSpec::kind_name() const {
  switch (kind) {
    case FormKind::sphere:
      return "sphere";
    case FormKind::stiefel_raw:
      return "stiefel_raw";
    case FormKind::stiefel_horizontal:
      return "stiefel_horizontal";
  }
  return "unknown";
}

double metric_g_kappa(const FormSpec& form, const CMat& p, const CMat& x, const CMat& y) {
  const CMat xx = x + torus_field(form(p, x), p);
  const CMat yy = y + torus_field(form(p, y), p);
  return g0(xx, yy);
}

RMat gram(const FormSpec& form, const CMat& p, const std::vector<CMat>& frame) {
  const Eigen::Index n = static_cast<Eigen::Index>(frame.size());
  std::vector<CMat> lifted;
  lifted.reserve(frame.size());
  for (const CMat& x : frame) lifted.push_back(x + torus_field(form(p, x), p));
  RMat g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) g(a, b) = g(b, a) = g0(lifted[a], lifted[b]);
  return g;
}

RMat gram0(const std::vector<CMat>& frame) {
  const Eigen::Index n = static_cast<Eigen::Index>(frame.size());
  RMat g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) g(a, b) = g(b, a) = g0(frame[a], frame[b]);
  return g;
}

namespace {

struct AdmissibilitySample {
  double t_horizontal, g_horizontal, t_invariant, g_invariant;
};

AdmissibilitySample admissibility_sample(const FormSpec& form, std::uint64_t seed, int index) {
  Rng rng = derived_rng(seed, static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  const CMat p = random_point(form.manifold, rng);
  const CMat x = random_tangent(form.manifold, p, rng);
  const TValue k = form(p, x);

  AdmissibilitySample s{};
  s.t_horizontal = std::max(form(p, fundamental_field(Generator::z1, p)).max_abs(),
                            form(p, fundamental_field(Generator::z2, p)).max_abs());
  s.g_horizontal = form(p, fundamental_field(Generator::g, p)).max_abs();

  const double theta = angle(rng);
  s.g_invariant = (form(act_g(theta, p), act_g(theta, x)) - k).max_abs();
  const double t1 = angle(rng);
  const double t2 = angle(rng);
  s.t_invariant = (form(act_t(t1, t2, p), act_t(t1, t2, x)) - k).max_abs();
  return s;
}

AdmissibilityReport summarize(const std::vector<AdmissibilitySample>& samples, double tol) {
  AdmissibilityReport rep;
  for (const auto& s : samples) {
    rep.t_horizontal = std::max(rep.t_horizontal, s.t_horizontal);
    rep.g_horizontal = std::max(rep.g_horizontal, s.g_horizontal);
    rep.t_invariant = std::max(rep.t_invariant, s.t_invariant);
    rep.g_invariant = std::max(rep.g_invariant, s.g_invariant);
  }
  if (rep.t_horizontal > tol) rep.failures.push_back("T-horizontal");
  if (rep.g_horizontal > tol) rep.failures.push_back("G-horizontal");
  if (rep.t_invariant > tol) rep.failures.push_back("T-invariant");
  if (rep.g_invariant > tol) rep.failures.push_back("G-invariant");
  return rep;
}

double volume_sample(const FormSpec& form, std::uint64_t seed, int index) {
  Rng rng = derived_rng(seed, static_cast<std::uint64_t>(index));
  const CMat p = random_point(form.manifold, rng);
  const auto frame = tangent_frame(form.manifold, p);
  const double det_k = gram(form, p, frame).determinant();
  const double det_0 = gram0(frame).determinant();
  return std::abs(det_k - det_0);
}

}  // namespace

AdmissibilityReport check_admissible(const FormSpec& form, int n_points, std::uint64_t seed, double tol) {
  std::vector<AdmissibilitySample> samples(static_cast<std::size_t>(std::max(0, n_points)));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_points; ++i) samples[static_cast<std::size_t>(i)] = admissibility_sample(form, seed, i);
  return summarize(samples, tol);
}

VolumeReport check_volume(const FormSpec& form, int n_points, std::uint64_t seed) {
  std::vector<double> dev(static_cast<std::size_t>(std::max(0, n_points)));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_points; ++i) dev[static_cast<std::size_t>(i)] = volume_sample(form, seed, i);
  VolumeReport rep;
  rep.points = n_points;
  for (double d : dev) rep.max_deviation = std::max(rep.max_deviation, d);
  return rep;
}

namespace serial {

AdmissibilityReport check_admissible(const FormSpec& form, int n_points, std::uint64_t seed, double tol) {
  std::vector<AdmissibilitySample> samples;
  for (int i = 0; i < n_points; ++i) samples.push_back(admissibility_sample(form, seed, i));
  return summarize(samples, tol);
}

VolumeReport check_volume(const FormSpec& form, int n_points, std::uint64_t seed) {
  VolumeReport rep;
  rep.points = n_points;
  for (int i = 0; i < n_points; ++i) rep.max_deviation = std::max(rep.max_deviation, volume_sample(form, seed, i));
  return rep;
}

}  // namespace serial

IntertwiningReport verify_intertwining(const JMap& j, const JMap& j2, const Weight& mu, const Manifold& mf,
                                       int n_points, std::uint64_t seed, double tol) {
  if (j.m() != j2.m() || j.m() != mf.m) throw std::invalid_argument("verify_intertwining: dimension mismatch");
  const bool sphere = mf.kind == ManifoldKind::sphere;
  const FormSpec form = sphere ? FormSpec::sphere(j) : FormSpec::stiefel(j, mf.r, true);
  const FormSpec form2 = sphere ? FormSpec::sphere(j2) : FormSpec::stiefel(j2, mf.r, true);

  IntertwiningReport rep;
  rep.a = conjugator(j, j2, mu.direction(), /*require_equal_spectra=*/false);
  const CMat e = block_isometry(rep.a);

  struct Sample {
    double residual, equivariance, isometry, tangency;
  };
  std::vector<Sample> samples(static_cast<std::size_t>(std::max(0, n_points)));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_points; ++i) {
    Rng rng = derived_rng(seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    const CMat p = random_point(mf, rng);
    const CMat x = random_tangent(mf, p, rng);
    const CMat y = random_tangent(mf, p, rng);
    const CMat ep = e * p;
    const CMat ex = e * x;

    Sample s{};
    s.residual = std::abs(apply_weight(mu, form(p, x)) - apply_weight(mu, form2(ep, ex)));
    const double th = angle(rng);
    const double t1 = angle(rng);
    const double t2 = angle(rng);
    s.equivariance = std::max((e * act_g(th, p) - act_g(th, ep)).cwiseAbs().maxCoeff(),
                              (e * act_t(t1, t2, p) - act_t(t1, t2, ep)).cwiseAbs().maxCoeff());
    s.isometry = std::abs(g0(ex, e * y) - g0(x, y));
    s.tangency = tangency_residual(mf, ep, ex);
    samples[static_cast<std::size_t>(i)] = s;
  }
  for (const auto& s : samples) {
    rep.residual = std::max(rep.residual, s.residual);
    rep.equivariance = std::max(rep.equivariance, s.equivariance);
    rep.isometry = std::max(rep.isometry, s.isometry);
    rep.tangency = std::max(rep.tangency, s.tangency);
  }
  rep.ok = rep.residual < tol && rep.equivariance < 1e-12 && rep.isometry < 1e-12 && rep.tangency < 1e-12;
  return rep;
}

double r1_reduction_residual(const JMap& j, int n_points, std::uint64_t seed) {
  const FormSpec sphere = FormSpec::sphere(j);
  const FormSpec stiefel = FormSpec::stiefel(j, 1, true);
  std::vector<double> res(static_cast<std::size_t>(n_points), 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_points; ++i) {
    Rng rng = derived_rng(seed, static_cast<std::uint64_t>(i));
    const CMat p = random_point(sphere.manifold, rng);
    const CMat x = random_tangent(sphere.manifold, p, rng);
    res[static_cast<std::size_t>(i)] = (stiefel(p, x) - sphere(p, x)).max_abs();
  }
  double out = 0.0;
  for (const double r : res) out = std::max(out, r);
  return out;
}

}  // namespace isoquot
