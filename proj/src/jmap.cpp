#include "isoquot/jmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace isoquot {

namespace {

void require_same_dim(const JMap& j, const JMap& j2, const char* what) {
  if (j.m() != j2.m()) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << j.m() << " vs " << j2.m() << ")";
    throw std::invalid_argument(os.str());
  }
}

CMat commutator(const CMat& x, const CMat& y) { return x * y - y * x; }

}  // namespace

SkewHermitian::SkewHermitian(CMat a, bool traceless) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw std::invalid_argument("SkewHermitian: matrix is not square");
  const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
  if (!is_skew_hermitian(a_, kTolerance * scale))
    throw std::invalid_argument("SkewHermitian: A* != -A");
  if (traceless && std::abs(a_.trace()) > kTolerance * scale * static_cast<double>(a_.rows()))
    throw std::invalid_argument("SkewHermitian: trace is not zero");
}

JMap::JMap(SkewHermitian j1, SkewHermitian j2) : j1_(std::move(j1)), j2_(std::move(j2)) {
  if (j1_.dim() != j2_.dim()) throw std::invalid_argument("JMap: J1 and J2 differ in size");
  if (j1_.dim() < 2) throw std::invalid_argument("JMap: m must be at least 2");
}

JMap JMap::zero(int m) { return JMap(CMat::Zero(m, m), CMat::Zero(m, m)); }

JMap JMap::conjugated_by(const CMat& a) const {
  const CMat inv = a.inverse();
  CMat c1 = a * j1() * inv;
  CMat c2 = a * j2() * inv;
  // Conjugation by a unitary keeps skew-Hermitian exactly; symmetrize away round-off.
  c1 = 0.5 * (c1 - c1.adjoint().eval());
  c2 = 0.5 * (c2 - c2.adjoint().eval());
  return JMap(c1, c2);
}

RVec JMap::coordinates() const {
  const RVec c1 = su_coordinates(j1());
  const RVec c2 = su_coordinates(j2());
  RVec x(c1.size() + c2.size());
  x << c1, c2;
  return x;
}

JMap JMap::from_coordinates(int m, const RVec& x) {
  const Eigen::Index n = m * m - 1;
  if (x.size() != 2 * n) throw std::invalid_argument("JMap::from_coordinates: wrong length");
  return JMap(su_from_coordinates(m, x.head(n)), su_from_coordinates(m, x.tail(n)));
}

JMap EquivalenceSymmetry::apply(const JMap& j) const {
  const CMat& first = swap ? j.j2() : j.j1();
  const CMat& second = swap ? j.j1() : j.j2();
  CMat a = static_cast<double>(sign1) * first;
  CMat b = static_cast<double>(sign2) * second;
  if (conjugate) {
    a = a.conjugate().eval();
    b = b.conjugate().eval();
  }
  return JMap(a, b);
}

std::string EquivalenceSymmetry::describe() const {
  std::ostringstream os;
  os << "Z1->" << (sign1 < 0 ? "-" : "+") << (swap ? "Z2" : "Z1") << ",Z2->" << (sign2 < 0 ? "-" : "+")
     << (swap ? "Z1" : "Z2") << (conjugate ? ",conj" : "");
  return os.str();
}

const std::array<EquivalenceSymmetry, 16>& EquivalenceSymmetry::all() {
  static const std::array<EquivalenceSymmetry, 16> table = [] {
    std::array<EquivalenceSymmetry, 16> t{};
    std::size_t k = 0;
    for (int conj = 0; conj < 2; ++conj)
      for (int sw = 0; sw < 2; ++sw)
        for (int s1 : {1, -1})
          for (int s2 : {1, -1}) t[k++] = EquivalenceSymmetry{sw == 1, s1, s2, conj == 1};
    return t;
  }();
  return table;
}

std::vector<TorusVector> certification_directions(int m) {
  std::vector<TorusVector> dirs;
  dirs.reserve(static_cast<std::size_t>(m + 1));
  for (int k = 0; k <= m; ++k) {
    const double theta = M_PI * static_cast<double>(k) / static_cast<double>(m + 1);
    dirs.push_back({std::cos(theta), std::sin(theta)});
  }
  return dirs;
}

IsospectralityReport is_isospectral(const JMap& j, const JMap& j2, double tol) {
  require_same_dim(j, j2, "is_isospectral");
  IsospectralityReport report;
  report.directions = certification_directions(j.m());
  for (const TorusVector& z : report.directions) {
    const RVec d = skew_spectrum(j.eval(z)) - skew_spectrum(j2.eval(z));
    const double err = d.cwiseAbs().maxCoeff();
    report.discrepancy.push_back(err);
    report.max_discrepancy = std::max(report.max_discrepancy, err);
  }
  report.isospectral = report.max_discrepancy < tol;
  return report;
}

GenericityReport is_generic(const JMap& j, double tol) {
  const int m = j.m();
  const auto& basis = su_basis(m);
  const Eigen::Index rows = 4 * m * m;
  RMat system(rows, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t b = 0; b < basis.size(); ++b) {
    RVec col(rows);
    col << realify(commutator(basis[b], j.j1())), realify(commutator(basis[b], j.j2()));
    system.col(static_cast<Eigen::Index>(b)) = col;
  }
  Eigen::JacobiSVD<RMat> svd(system);
  RVec sv = svd.singularValues().reverse();
  const double threshold = tol * std::max(1.0, sv.size() ? sv.maxCoeff() : 0.0);

  GenericityReport report;
  report.singular_values = sv;
  report.commutant_dimension = static_cast<int>((sv.array() < threshold).count());
  report.generic = report.commutant_dimension == 0;
  return report;
}

const std::vector<std::string>& invariant_words() {
  static const std::vector<std::string> words = {"AA",   "AB",   "BB",   "AAA",  "AAB",  "ABB", "BBB",
                                                 "AAAA", "AAAB", "AABB", "ABAB", "ABBB", "BBBB"};
  return words;
}

RVec raw_invariants(const JMap& j) {
  const auto& words = invariant_words();
  RVec out(static_cast<Eigen::Index>(words.size()));
  const int m = j.m();
  for (std::size_t w = 0; w < words.size(); ++w) {
    CMat prod = CMat::Identity(m, m);
    for (char letter : words[w]) prod = prod * (letter == 'A' ? j.j1() : j.j2());
    const cplx tr = prod.trace();
    out(static_cast<Eigen::Index>(w)) = (words[w].size() % 2 == 0) ? tr.real() : tr.imag();
  }
  return out;
}

CanonicalInvariants equivalence_invariants(const JMap& j) {
  const auto& syms = EquivalenceSymmetry::all();
  CanonicalInvariants best;
  best.values = raw_invariants(j);
  const double tie = 1e-9 * std::max(1.0, best.values.cwiseAbs().maxCoeff());

  auto less = [tie](const RVec& a, const RVec& b) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (std::abs(a(k) - b(k)) > tie) return a(k) < b(k);
    }
    return false;
  };

  for (std::size_t s = 1; s < syms.size(); ++s) {
    RVec cand = raw_invariants(syms[s].apply(j));
    if (less(cand, best.values)) {
      best.values = std::move(cand);
      best.symmetry_index = static_cast<int>(s);
    }
  }
  return best;
}

double invariant_separation(const JMap& j, const JMap& j2) {
  require_same_dim(j, j2, "invariant_separation");
  const RVec target = raw_invariants(j2);
  double sep = std::numeric_limits<double>::infinity();
  for (const auto& sym : EquivalenceSymmetry::all())
    sep = std::min(sep, (raw_invariants(sym.apply(j)) - target).cwiseAbs().maxCoeff());
  return sep;
}

double equivalence_residual(const JMap& j, const JMap& j2, const CMat& a, const EquivalenceSymmetry& sym) {
  const JMap s = sym.apply(j);
  const CMat ad = a.adjoint();
  const double r1 = (a * s.j1() * ad - j2.j1()).squaredNorm();
  const double r2 = (a * s.j2() * ad - j2.j2()).squaredNorm();
  return std::sqrt(r1 + r2);
}

namespace {

// Unitary start point from the null direction of X -> (X B_k - C_k X).
CMat sylvester_start(const JMap& s, const JMap& target) {
  const int m = s.m();
  const Eigen::Index n = m * m;
  const CMat eye = CMat::Identity(m, m);
  CMat op(2 * n, n);
  auto kron = [m](const CMat& x, const CMat& y) {
    CMat out(m * m, m * m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) out.block(r * m, c * m, m, m) = x(r, c) * y;
    return out;
  };
  // vec(X B) = (B^T kron I) vec X,  vec(C X) = (I kron C) vec X
  op.topRows(n) = kron(s.j1().transpose(), eye) - kron(eye, target.j1());
  op.bottomRows(n) = kron(s.j2().transpose(), eye) - kron(eye, target.j2());
  Eigen::JacobiSVD<CMat> svd(op, Eigen::ComputeFullV);
  const CVec x = svd.matrixV().col(n - 1);
  CMat a(m, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < m; ++r) a(r, c) = x(c * m + r);
  return nearest_special_unitary(a);
}

struct DescentResult {
  CMat a;
  double residual;
};

// Levenberg-Marquardt on SU(m) with updates A <- exp(Omega) A.
DescentResult descend(const JMap& s, const JMap& target, CMat a, int iterations, double tol) {
  const int m = s.m();
  const auto& basis = su_basis(m);
  const Eigen::Index p = static_cast<Eigen::Index>(basis.size());

  auto residual_vec = [&](const CMat& x) {
    const CMat xd = x.adjoint();
    RVec r(4 * m * m);
    r << realify(x * s.j1() * xd - target.j1()), realify(x * s.j2() * xd - target.j2());
    return r;
  };

  RVec r = residual_vec(a);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  for (int it = 0; it < iterations && std::sqrt(cost) > 1e-3 * tol; ++it) {
    const CMat ad = a.adjoint();
    const CMat m1 = a * s.j1() * ad;
    const CMat m2 = a * s.j2() * ad;
    RMat jac(r.size(), p);
    for (Eigen::Index b = 0; b < p; ++b) {
      const CMat& e = basis[static_cast<std::size_t>(b)];
      RVec col(r.size());
      col << realify(e * m1 - m1 * e), realify(e * m2 - m2 * e);
      jac.col(b) = col;
    }
    const RMat jtj = jac.transpose() * jac;
    const RVec g = jac.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      RMat h = jtj;
      h.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
      const RVec delta = h.ldlt().solve(-g);
      CMat omega = CMat::Zero(m, m);
      for (Eigen::Index b = 0; b < p; ++b) omega += delta(b) * basis[static_cast<std::size_t>(b)];
      const CMat cand = expm_skew_hermitian(omega) * a;
      const RVec rc = residual_vec(cand);
      const double cc = rc.squaredNorm();
      if (cc < cost) {
        a = cand;
        r = rc;
        cost = cc;
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) break;
  }
  return {nearest_special_unitary(a), 0.0};
}

}  // namespace

std::optional<EquivalenceWitness> find_equivalence(const JMap& j, const JMap& j2,
                                                   const EquivalenceSearchOptions& opts) {
  require_same_dim(j, j2, "find_equivalence");
  const int m = j.m();
  const auto& syms = EquivalenceSymmetry::all();

  const CMat eye = CMat::Identity(m, m);
  if (equivalence_residual(j, j2, eye, syms[0]) <= opts.tol) {
    return EquivalenceWitness{eye, syms[0], 0, equivalence_residual(j, j2, eye, syms[0]), 0};
  }

  const int restarts = std::max(1, opts.restarts);
  for (std::size_t si = 0; si < syms.size(); ++si) {
    const JMap s = syms[si].apply(j);
    std::vector<DescentResult> results(static_cast<std::size_t>(restarts));
#pragma omp parallel for schedule(dynamic)
    for (int rs = 0; rs < restarts; ++rs) {
      CMat start;
      if (rs == 0) {
        start = sylvester_start(s, j2);
      } else {
        Rng rng = derived_rng(opts.seed, si * 1000u + static_cast<std::uint64_t>(rs));
        start = random_special_unitary(m, rng);
      }
      DescentResult res = descend(s, j2, start, opts.iterations, opts.tol);
      res.residual = equivalence_residual(j, j2, res.a, syms[si]);
      results[static_cast<std::size_t>(rs)] = std::move(res);
    }
    int best = 0;
    for (int rs = 1; rs < restarts; ++rs)
      if (results[static_cast<std::size_t>(rs)].residual < results[static_cast<std::size_t>(best)].residual)
        best = rs;
    const DescentResult& b = results[static_cast<std::size_t>(best)];
    if (b.residual <= opts.tol) return EquivalenceWitness{b.a, syms[si], static_cast<int>(si), b.residual, best};
  }
  return std::nullopt;
}

CMat conjugator(const JMap& j, const JMap& j2, const TorusVector& z, bool require_equal_spectra) {
  require_same_dim(j, j2, "conjugator");
  const int m = j.m();
  const CMat a = j.eval(z);
  const CMat b = j2.eval(z);
  if (a == b) return CMat::Identity(m, m);
  const CMat ha = cplx(0.0, -1.0) * a;
  const CMat hb = cplx(0.0, -1.0) * b;
  Eigen::SelfAdjointEigenSolver<CMat> ea(0.5 * (ha + ha.adjoint()));
  Eigen::SelfAdjointEigenSolver<CMat> eb(0.5 * (hb + hb.adjoint()));
  const double scale = std::max(1.0, ea.eigenvalues().cwiseAbs().maxCoeff());
  if (require_equal_spectra && (ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("conjugator: j_Z and j2_Z have different spectra");
  // Eigenvalue order aligns the eigenspaces; within a repeated eigenvalue
  // V_b V_a^* maps one orthonormal eigenbasis onto the other.
  CMat u = eb.eigenvectors() * ea.eigenvectors().adjoint();
  const double phase = std::arg(u.determinant()) / static_cast<double>(m);
  return u * std::polar(1.0, -phase);
}

}  // namespace isoquot
