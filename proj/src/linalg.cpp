#include "isoquot/linalg.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace isoquot {

Rng derived_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5eedu};
  return Rng(seq);
}

double real_inner(const CMat& a, const CMat& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

bool is_skew_hermitian(const CMat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return (a + a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

CMat expm_skew_hermitian(const CMat& omega) {
  const CMat h = cplx(0.0, -1.0) * omega;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()));
  const RVec& lam = es.eigenvalues();
  CVec phases(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) phases(k) = std::polar(1.0, lam(k));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

CMat nearest_special_unitary(const CMat& a) {
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  CMat u = svd.matrixU() * svd.matrixV().adjoint();
  const cplx det = u.determinant();
  const double phase = std::arg(det) / static_cast<double>(a.rows());
  return u * std::polar(1.0, -phase);
}

CMat random_special_unitary(int m, Rng& rng) {
  std::normal_distribution<double> normal;
  CMat g(m, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < m; ++r) g(r, c) = cplx(normal(rng), normal(rng));
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ() * CMat::Identity(m, m);
  const CMat rr = qr.matrixQR().triangularView<Eigen::Upper>();
  // Mezzadri's phase fix makes Q Haar distributed.
  for (int k = 0; k < m; ++k) {
    const cplx d = rr(k, k);
    if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
  }
  const double phase = std::arg(q.determinant()) / static_cast<double>(m);
  return q * std::polar(1.0, -phase);
}

const std::vector<CMat>& su_basis(int m) {
  static std::mutex mutex;
  static std::map<int, std::vector<CMat>> cache;
  if (m < 1) throw std::invalid_argument("su_basis: m must be positive");
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;

  std::vector<CMat> basis;
  basis.reserve(static_cast<std::size_t>(m * m - 1));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      CMat a = CMat::Zero(m, m);
      a(j, k) = inv_sqrt2;
      a(k, j) = -inv_sqrt2;
      basis.push_back(a);
      CMat b = CMat::Zero(m, m);
      b(j, k) = cplx(0.0, inv_sqrt2);
      b(k, j) = cplx(0.0, inv_sqrt2);
      basis.push_back(b);
    }
  }
  for (int l = 1; l < m; ++l) {
    CMat d = CMat::Zero(m, m);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l * (l + 1)));
    for (int k = 0; k < l; ++k) d(k, k) = cplx(0.0, norm);
    d(l, l) = cplx(0.0, -static_cast<double>(l) * norm);
    basis.push_back(d);
  }
  return cache.emplace(m, std::move(basis)).first->second;
}

CMat random_su(int m, Rng& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  CMat x = CMat::Zero(m, m);
  for (const CMat& e : su_basis(m)) x += normal(rng) * e;
  return x;
}

RVec su_coordinates(const CMat& x) {
  const auto& basis = su_basis(static_cast<int>(x.rows()));
  RVec c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t b = 0; b < basis.size(); ++b) c(static_cast<Eigen::Index>(b)) = real_inner(basis[b], x);
  return c;
}

CMat su_from_coordinates(int m, const RVec& coords) {
  const auto& basis = su_basis(m);
  if (coords.size() != static_cast<Eigen::Index>(basis.size()))
    throw std::invalid_argument("su_from_coordinates: coordinate count mismatch");
  CMat x = CMat::Zero(m, m);
  for (std::size_t b = 0; b < basis.size(); ++b) x += coords(static_cast<Eigen::Index>(b)) * basis[b];
  return x;
}

RVec realify(const CMat& a) {
  RVec v(2 * a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    v(2 * k) = a.data()[k].real();
    v(2 * k + 1) = a.data()[k].imag();
  }
  return v;
}

CMat complexify(const RVec& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != 2 * rows * cols) throw std::invalid_argument("complexify: size mismatch");
  CMat a(rows, cols);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = cplx(v(2 * k), v(2 * k + 1));
  return a;
}

RVec skew_spectrum(const CMat& a) {
  const CMat h = cplx(0.0, -1.0) * a;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace isoquot
