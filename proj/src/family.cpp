#include "isoquot/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace isoquot {

namespace {

struct Direction {
  double a;
  double b;
};

std::vector<Direction> directions(int m) {
  std::vector<Direction> out;
  for (const TorusVector& z : certification_directions(m)) out.push_back({z.a, z.b});
  return out;
}

int numerical_rank(const RVec& singular_values, double rel_tol) {
  if (singular_values.size() == 0) return 0;
  const double cut = rel_tol * std::max(singular_values.maxCoeff(), 1e-300);
  return static_cast<int>((singular_values.array() > cut).count());
}

}  // namespace

RVec isospectral_constraints(const JMap& j) {
  const int m = j.m();
  const auto dirs = directions(m);
  RVec f(static_cast<Eigen::Index>(dirs.size()) * (m - 1));
  Eigen::Index row = 0;
  for (const Direction& d : dirs) {
    const CMat h = cplx(0.0, -1.0) * (d.a * j.j1() + d.b * j.j2());
    CMat power = h;
    for (int p = 2; p <= m; ++p) {
      power = power * h;
      f(row++) = power.trace().real();
    }
  }
  return f;
}

RMat isospectral_constraint_jacobian(const JMap& j) {
  const int m = j.m();
  const auto& basis = su_basis(m);
  const Eigen::Index n = static_cast<Eigen::Index>(basis.size());
  const auto dirs = directions(m);
  RMat jac(static_cast<Eigen::Index>(dirs.size()) * (m - 1), 2 * n);
  Eigen::Index row = 0;
  for (const Direction& d : dirs) {
    const CMat h = cplx(0.0, -1.0) * (d.a * j.j1() + d.b * j.j2());
    CMat prev = h;  // h^(p-1)
    for (int p = 2; p <= m; ++p) {
      // d tr(h^p) = p tr(h^(p-1) dh),  dh = -i * coeff * E_b
      for (Eigen::Index b = 0; b < n; ++b) {
        const cplx base = (prev * basis[static_cast<std::size_t>(b)]).trace() * cplx(0.0, -1.0);
        jac(row, b) = p * d.a * base.real();
        jac(row, n + b) = p * d.b * base.real();
      }
      prev = prev * h;
      ++row;
    }
  }
  return jac;
}

RMat conjugation_orbit_tangent(const JMap& j) {
  const int m = j.m();
  const auto& basis = su_basis(m);
  const Eigen::Index n = static_cast<Eigen::Index>(basis.size());
  RMat out(2 * n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const CMat& e = basis[static_cast<std::size_t>(b)];
    const CMat c1 = e * j.j1() - j.j1() * e;
    const CMat c2 = e * j.j2() - j.j2() * e;
    RVec col(2 * n);
    col << su_coordinates(c1), su_coordinates(c2);
    out.col(b) = col;
  }
  return out;
}

RMat transverse_tangent_basis(const JMap& j) {
  const RMat jac = isospectral_constraint_jacobian(j);
  Eigen::JacobiSVD<RMat> svd(jac, Eigen::ComputeFullV);
  const int rank = numerical_rank(svd.singularValues(), 1e-9);
  const Eigen::Index dim = jac.cols();
  const RMat null_space = svd.matrixV().rightCols(dim - rank);
  if (null_space.cols() == 0) return RMat(dim, 0);

  const RMat orbit_in_null = null_space.transpose() * conjugation_orbit_tangent(j);
  Eigen::JacobiSVD<RMat> osvd(orbit_in_null, Eigen::ComputeFullU);
  const int orbit_rank = numerical_rank(osvd.singularValues(), 1e-8);
  return null_space * osvd.matrixU().rightCols(null_space.cols() - orbit_rank);
}

namespace {

struct Continuation {
  int m;
  RVec target;  // constraint values at j(0)
  int rank;     // rank of the constraint Jacobian, fixed along the path
  const FamilyOptions& opts;

  double residual(const RVec& x) const {
    return (isospectral_constraints(JMap::from_coordinates(m, x)) - target).norm();
  }

  // Gauss-Newton with the minimum-norm (truncated pseudo-inverse) update.
  bool correct(RVec& x) const {
    const double scale = 1.0 + target.norm();
    for (int it = 0; it < 12; ++it) {
      const JMap j = JMap::from_coordinates(m, x);
      const RVec f = isospectral_constraints(j) - target;
      if (f.norm() <= 1e-14 * scale) return true;
      const RMat jac = isospectral_constraint_jacobian(j);
      Eigen::JacobiSVD<RMat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const RVec& sv = svd.singularValues();
      RVec coeffs = svd.matrixU().transpose() * f;
      for (Eigen::Index k = 0; k < coeffs.size(); ++k) coeffs(k) = (k < rank) ? coeffs(k) / sv(k) : 0.0;
      x -= svd.matrixV() * coeffs;
    }
    return residual(x) <= 1e-13 * scale;
  }

  RVec tangent(const RVec& x, const RVec& previous) const {
    const RMat basis = transverse_tangent_basis(JMap::from_coordinates(m, x));
    if (basis.cols() == 0) throw ContinuationFailure("isospectral variety exhausted by the conjugation orbit");
    RVec t = basis * (basis.transpose() * previous);
    if (t.norm() < 1e-3) throw ContinuationFailure("tangent direction lost");
    return t.normalized();
  }

  // Moves from (x, t_from) to t_to along +-direction, returns the new point.
  RVec advance(RVec x, RVec direction, double t_from, double t_to) const {
    double t = t_from;
    double h = opts.max_step;
    const double sign = (t_to >= t_from) ? 1.0 : -1.0;
    while (std::abs(t_to - t) > 1e-15) {
      const double step = std::min(h, std::abs(t_to - t));
      direction = tangent(x, direction);
      RVec trial = x + sign * step * direction;
      if (correct(trial) && (trial - x).norm() < 2.0 * step) {
        x = trial;
        t += sign * step;
        if (std::abs(t_to - t) < 1e-15) t = t_to;
        h = std::min(opts.max_step, 1.5 * h);
      } else {
        h *= 0.5;
        if (h < opts.min_step) throw ContinuationFailure("continuation step underflow");
      }
    }
    return x;
  }
};

}  // namespace

FamilyValidation validate_family(const std::vector<FamilyMember>& members, const FamilyOptions& opts) {
  FamilyValidation v;
  v.min_pairwise_separation = std::numeric_limits<double>::infinity();
  const FamilyMember* origin = &members.front();
  for (const auto& mem : members)
    if (mem.t == 0.0) origin = &mem;
  for (std::size_t a = 0; a < members.size(); ++a) {
    v.max_isospectral_discrepancy = std::max(
        v.max_isospectral_discrepancy, is_isospectral(origin->j, members[a].j, opts.isospectral_tol).max_discrepancy);
    v.max_commutant_dimension =
        std::max(v.max_commutant_dimension, is_generic(members[a].j, opts.generic_tol).commutant_dimension);
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      if (members[a].t == members[b].t) continue;
      v.min_pairwise_separation =
          std::min(v.min_pairwise_separation, invariant_separation(members[a].j, members[b].j));
    }
  }
  v.ok = v.max_isospectral_discrepancy < opts.isospectral_tol && v.max_commutant_dimension == 0 &&
         v.min_pairwise_separation > opts.separation_tol;
  return v;
}

Family generate_family(int m, const std::vector<double>& t_values, std::uint64_t seed, const FamilyOptions& opts) {
  if (m < 3) {
    std::ostringstream os;
    os << "generate_family: m = " << m << " but continuous isospectral non-equivalent families require m >= 3";
    throw std::invalid_argument(os.str());
  }
  if (t_values.empty()) throw std::invalid_argument("generate_family: no t values");

  std::vector<double> positive;
  std::vector<double> negative;
  for (double t : t_values) {
    if (!std::isfinite(t)) throw std::invalid_argument("generate_family: non-finite t value");
    if (t > 0.0) positive.push_back(t);
    if (t < 0.0) negative.push_back(t);
  }
  std::sort(positive.begin(), positive.end());
  std::sort(negative.begin(), negative.end(), std::greater<>());

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= opts.max_reseeds; ++attempt) {
    Rng rng = derived_rng(seed, static_cast<std::uint64_t>(attempt));
    const double coord_scale = opts.seed_scale / std::sqrt(static_cast<double>(m * m - 1));
    const JMap j0(random_su(m, rng, coord_scale), random_su(m, rng, coord_scale));
    if (!is_generic(j0, opts.generic_tol).generic) {
      last_error = "seed map not generic";
      continue;
    }
    const RMat transverse = transverse_tangent_basis(j0);
    if (transverse.cols() == 0) {
      last_error = "isospectral variety exhausted by the conjugation orbit at j(0)";
      continue;
    }

    Eigen::JacobiSVD<RMat> svd(isospectral_constraint_jacobian(j0));
    Continuation cont{m, isospectral_constraints(j0), numerical_rank(svd.singularValues(), 1e-9), opts};

    std::normal_distribution<double> normal;
    RVec mix(transverse.cols());
    for (Eigen::Index k = 0; k < mix.size(); ++k) mix(k) = normal(rng);
    const RVec dir0 = (transverse * mix).normalized();

    try {
      std::map<double, RVec> points;
      points[0.0] = j0.coordinates();
      RVec x = points[0.0];
      double t = 0.0;
      for (double target : positive) {
        x = cont.advance(x, dir0, t, target);
        t = target;
        points[t] = x;
      }
      x = points[0.0];
      t = 0.0;
      for (double target : negative) {
        x = cont.advance(x, -dir0, t, target);
        t = target;
        points[t] = x;
      }

      Family fam;
      fam.seed = seed;
      fam.attempts = attempt + 1;
      fam.transverse_dimension = static_cast<int>(transverse.cols());
      for (double tv : t_values) {
        const double key = (tv == 0.0) ? 0.0 : tv;
        fam.members.push_back({tv, JMap::from_coordinates(m, points.at(key))});
      }
      fam.validation = validate_family(fam.members, opts);
      if (fam.validation.ok) return fam;
      last_error = "family failed validation";
    } catch (const ContinuationFailure& e) {
      last_error = e.what();
    }
  }
  throw ContinuationFailure("generate_family: all seeds failed (" + last_error + ")");
}

}  // namespace isoquot
