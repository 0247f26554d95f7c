#include <Eigen/Eigenvalues>

#include "support.hpp"

using namespace isoquot;
using namespace isoquot::testing;

TEST_CASE("generated family is isospectral, separated and generic") {
  const Family& fam = family3();
  REQUIRE(fam.members.size() == 3);
  CHECK(fam.validation.ok);
  CHECK(fam.validation.max_commutant_dimension == 0);
  CHECK(fam.transverse_dimension > 0);
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(is_generic(fam.members[a].j).generic);
    for (std::size_t b = a + 1; b < 3; ++b) {
      CHECK(is_isospectral(fam.members[a].j, fam.members[b].j).max_discrepancy < 1e-9);
      CHECK(invariant_separation(fam.members[a].j, fam.members[b].j) > 1e-6);
    }
  }
}

TEST_CASE("family spectra agree on 100 random directions") {
  const Family& fam = family3();
  Rng rng(20);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const TorusVector z{normal(rng), normal(rng)};
    Eigen::SelfAdjointEigenSolver<CMat> e0(cplx(0, -1) * fam.members[0].j.eval(z), Eigen::EigenvaluesOnly);
    for (std::size_t k = 1; k < fam.members.size(); ++k) {
      Eigen::SelfAdjointEigenSolver<CMat> ek(cplx(0, -1) * fam.members[k].j.eval(z), Eigen::EigenvaluesOnly);
      worst = std::max(worst, (ek.eigenvalues() - e0.eigenvalues()).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("family members stay on the isospectral variety") {
  const Family& fam = family3();
  const RVec c0 = isospectral_constraints(fam.members[0].j);
  for (const auto& mem : fam.members) CHECK((isospectral_constraints(mem.j) - c0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constraint jacobian matches finite differences") {
  Rng rng(21);
  const JMap j = random_jmap(3, rng);
  const RMat jac = isospectral_constraint_jacobian(j);
  const RVec x = j.coordinates();
  const double h = 1e-6;
  for (Eigen::Index c = 0; c < x.size(); c += 3) {
    RVec xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    const RVec fd = (isospectral_constraints(JMap::from_coordinates(3, xp)) -
                     isospectral_constraints(JMap::from_coordinates(3, xm))) /
                    (2 * h);
    CHECK((fd - jac.col(c)).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, jac.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("transverse tangent basis is orthonormal and orthogonal to the orbit") {
  Rng rng(22);
  const JMap j = random_jmap(3, rng);
  const RMat b = transverse_tangent_basis(j);
  REQUIRE(b.cols() > 0);
  CHECK((b.transpose() * b - RMat::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((conjugation_orbit_tangent(j).transpose() * b).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((isospectral_constraint_jacobian(j) * b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("single-member family and argument validation") {
  const Family fam = generate_family(3, {0.0}, 5);
  REQUIRE(fam.members.size() == 1);
  CHECK(is_generic(fam.members[0].j).generic);
  CHECK(is_isospectral(fam.members[0].j, fam.members[0].j).isospectral);
  CHECK_THROWS_AS(generate_family(2, {0.0}, 1), std::invalid_argument);
}

TEST_CASE("family generation is deterministic") {
  const Family a = generate_family(3, {0.0, 0.05}, 9);
  const Family b = generate_family(3, {0.0, 0.05}, 9);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK((a.members[k].j.j1().array() == b.members[k].j.j1().array()).all());
    CHECK((a.members[k].j.j2().array() == b.members[k].j.j2().array()).all());
  }
}
