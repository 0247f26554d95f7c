#include "isoquot/geometry.hpp"

#include "support.hpp"

using namespace isoquot;
using namespace isoquot::testing;

namespace {

cplx herm(const CVec& a, const CVec& b) { return a.dot(b); }  // conjugate-linear in a

// |u|^2 <j u, U> - <U, iu> <j u, iu>, computed from blocks.
TValue sphere_form_oracle(const JMap& j, const CMat& p, const CMat& x) {
  const int m = j.m();
  const CVec u = p.col(0).head(m);
  const CVec uu = x.col(0).head(m);
  const CVec iu = cplx(0, 1) * u;
  TValue out;
  double* c[2] = {&out.c1, &out.c2};
  const CMat* jk[2] = {&j.j1(), &j.j2()};
  for (int k = 0; k < 2; ++k) {
    const CVec ju = *jk[k] * u;
    *c[k] = u.squaredNorm() * herm(ju, uu).real() - herm(uu, iu).real() * herm(ju, iu).real();
  }
  return out;
}

}  // namespace

TEST_CASE("manifold constraints, projection and retraction") {
  Rng rng(30);
  for (const Manifold mf : {Manifold::sphere(3), Manifold::stiefel(3, 2), Manifold::stiefel(3, 3)}) {
    for (int i = 0; i < 20; ++i) {
      const CMat p = random_point(mf, rng);
      CHECK(constraint_residual(mf, p) < 1e-12);
      const CMat x = random_tangent(mf, p, rng);
      CHECK(tangency_residual(mf, p, x) < 1e-12);
      CHECK(g0(x, x) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(max_abs(project_tangent(mf, p, x) - x) < 1e-13);
      CHECK(constraint_residual(mf, retract(mf, p + 0.1 * x)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(Manifold::stiefel(3, 6), std::invalid_argument);
  CHECK_THROWS_AS(Manifold::stiefel(3, 0), std::invalid_argument);
}

TEST_CASE("tangent frame is g0-orthonormal of full dimension") {
  Rng rng(31);
  for (const Manifold mf : {Manifold::sphere(3), Manifold::stiefel(3, 2)}) {
    const CMat p = random_point(mf, rng);
    const auto frame = tangent_frame(mf, p);
    REQUIRE(static_cast<int>(frame.size()) == mf.dimension());
    const RMat g = gram0(frame);
    CHECK((g - RMat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-12);
    for (const auto& x : frame) CHECK(tangency_residual(mf, p, x) < 1e-12);
  }
}

TEST_CASE("fundamental fields") {
  Rng rng(32);
  const Manifold mf = Manifold::sphere(3);
  CMat p = random_point(mf, rng);
  for (Generator g : {Generator::z1, Generator::z2, Generator::g})
    CHECK(tangency_residual(mf, p, fundamental_field(g, p)) < 1e-12);

  CMat q = p;
  q(3, 0) = 0.0;
  q /= q.norm();
  CHECK(max_abs(fundamental_field(Generator::z1, q)) == 0.0);

  CMat fixed = p;
  fixed.topRows(3).setZero();
  fixed /= fixed.norm();
  CHECK(max_abs(fundamental_field(Generator::g, fixed)) == 0.0);

  // generator of act_g / act_t
  const double h = 1e-6;
  CHECK(max_abs((act_g(h, p) - act_g(-h, p)) / (2 * h) - fundamental_field(Generator::g, p)) < 1e-9);
  CHECK(max_abs((act_t(h, 0, p) - act_t(-h, 0, p)) / (2 * h) - fundamental_field(Generator::z1, p)) < 1e-9);
  CHECK(max_abs((act_t(0, h, p) - act_t(0, -h, p)) / (2 * h) - fundamental_field(Generator::z2, p)) < 1e-9);

  const Manifold st = Manifold::stiefel(3, 2);
  const CMat qs = random_point(st, rng);
  for (Generator g : {Generator::z1, Generator::z2, Generator::g})
    CHECK(tangency_residual(st, qs, fundamental_field(g, qs)) < 1e-12);
}

TEST_CASE("T-orbits meet G-orbits perpendicularly on Stiefel") {
  Rng rng(33);
  const Manifold mf = Manifold::stiefel(3, 2);
  for (int i = 0; i < 100; ++i) {
    const CMat q = random_point(mf, rng);
    const CMat ig = fundamental_field(Generator::g, q);
    CHECK(g0(fundamental_field(Generator::z1, q), ig) == 0.0);
    CHECK(g0(fundamental_field(Generator::z2, q), ig) == 0.0);
  }
}

TEST_CASE("sphere form") {
  Rng rng(34);
  const JMap j = random_jmap(3, rng);
  const Manifold mf = Manifold::sphere(3);
  for (int i = 0; i < 20; ++i) {
    const CMat p = random_point(mf, rng);
    const CMat x = random_tangent(mf, p, rng);
    const TValue k = kappa_sphere(j, p, x);
    const TValue o = sphere_form_oracle(j, p, x);
    CHECK((k - o).max_abs() < 1e-13);
    CHECK(kappa_sphere(j, p, fundamental_field(Generator::g, p)).max_abs() < 1e-14);
    CHECK(kappa_sphere(j, p, fundamental_field(Generator::z1, p)).max_abs() == 0.0);
    CHECK(kappa_sphere(j, p, fundamental_field(Generator::z2, p)).max_abs() == 0.0);

    CMat singular = p;
    singular.topRows(3).setZero();
    singular /= singular.norm();
    CHECK(kappa_sphere(j, singular, random_tangent(mf, singular, rng)).max_abs() == 0.0);
  }
}

TEST_CASE("Stiefel form") {
  Rng rng(35);
  const JMap j = random_jmap(3, rng);
  const Manifold mf = Manifold::stiefel(3, 2);
  for (int i = 0; i < 20; ++i) {
    const CMat q = random_point(mf, rng);
    const CMat x = random_tangent(mf, q, rng);
    CHECK(kappa_stiefel(j, q, fundamental_field(Generator::z1, q)).max_abs() < 1e-15);
    CHECK(kappa_stiefel(j, q, fundamental_field(Generator::z2, q)).max_abs() < 1e-15);
    CHECK(kappa_stiefel(JMap::zero(3), q, x).max_abs() == 0.0);
    CHECK(horizontalize(j, q, fundamental_field(Generator::g, q)).max_abs() < 1e-14);
  }

  SUBCASE("r = 1 raw form is <U, j u>") {
    const Manifold v1 = Manifold::stiefel(3, 1);
    const CMat q = random_point(v1, rng);
    const CMat x = random_tangent(v1, q, rng);
    const CVec u = q.col(0).head(3);
    const CVec uu = x.col(0).head(3);
    const TValue k = kappa_stiefel(j, q, x);
    CHECK(k.c1 == doctest::Approx(herm(uu, j.j1() * u).real()).epsilon(1e-13));
    CHECK(k.c2 == doctest::Approx(herm(uu, j.j2() * u).real()).epsilon(1e-13));
  }
  SUBCASE("r = 1 horizontalization reproduces the sphere form") {
    const Manifold v1 = Manifold::stiefel(3, 1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const CMat q = random_point(v1, rng);
      const CMat x = random_tangent(v1, q, rng);
      worst = std::max(worst, (horizontalize(j, q, x) - sphere_form_oracle(j, q, x)).max_abs());
    }
    CHECK(worst < 1e-12);
    CHECK(r1_reduction_residual(j, 1000, 3) < 1e-12);
  }
  SUBCASE("G-horizontal X: raw form scaled by |i^#|^2") {
    const CMat q = random_point(mf, rng);
    const CMat ig = fundamental_field(Generator::g, q);
    CMat x = random_tangent(mf, q, rng);
    x -= (g0(x, ig) / g0(ig, ig)) * ig;
    CHECK((horizontalize(j, q, x) - kappa_stiefel(j, q, x) * g0(ig, ig)).max_abs() < 1e-13);
  }
}

TEST_CASE("metric g_kappa") {
  Rng rng(36);
  const JMap j = random_jmap(3, rng);
  const Manifold mf = Manifold::sphere(3);
  const FormSpec form = FormSpec::sphere(j);
  const FormSpec round = FormSpec::sphere(JMap::zero(3));
  for (int i = 0; i < 20; ++i) {
    const CMat p = random_point(mf, rng);
    const CMat x = random_tangent(mf, p, rng);
    const CMat y = random_tangent(mf, p, rng);
    CHECK(metric_g_kappa(round, p, x, y) == doctest::Approx(g0(x, y)).epsilon(1e-14));
    CHECK(metric_g_kappa(form, p, x, y) == doctest::Approx(metric_g_kappa(form, p, y, x)).epsilon(1e-14));
    const CMat z1 = fundamental_field(Generator::z1, p);
    CHECK(metric_g_kappa(form, p, z1, z1) == doctest::Approx(std::norm(p(3, 0))).epsilon(1e-13));
    const RMat g = gram(form, p, tangent_frame(mf, p));
    CHECK(g.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(check_volume(form, 50, 4).max_deviation < 1e-10);
  CHECK(check_volume(FormSpec::stiefel(j, 2), 20, 4).max_deviation < 1e-10);
}

TEST_CASE("admissibility") {
  Rng rng(37);
  const JMap j = random_jmap(3, rng);
  const auto sphere = check_admissible(FormSpec::sphere(j), 200, 1);
  CHECK(sphere.ok());
  CHECK(std::max({sphere.t_horizontal, sphere.g_horizontal, sphere.t_invariant, sphere.g_invariant}) < 1e-10);
  const auto st = check_admissible(FormSpec::stiefel(j, 2), 100, 1);
  CHECK(st.ok());
  CHECK(std::max({st.t_horizontal, st.g_horizontal, st.t_invariant, st.g_invariant}) < 1e-10);
  // raw Stiefel form is T-horizontal but not G-horizontal in general
  const auto raw = check_admissible(FormSpec::stiefel(j, 2, false), 100, 1);
  CHECK(raw.t_horizontal < 1e-10);
  CHECK(raw.g_horizontal > 1e-6);
}

TEST_CASE("serial and parallel verification loops agree") {
  Rng rng(38);
  const FormSpec form = FormSpec::sphere(random_jmap(3, rng));
  const auto a = check_admissible(form, 200, 8);
  const auto b = serial::check_admissible(form, 200, 8);
  CHECK(a.t_horizontal == b.t_horizontal);
  CHECK(a.g_horizontal == b.g_horizontal);
  CHECK(a.t_invariant == b.t_invariant);
  CHECK(a.g_invariant == b.g_invariant);
  CHECK(check_volume(form, 50, 8).max_deviation == serial::check_volume(form, 50, 8).max_deviation);
}

TEST_CASE("intertwining") {
  Rng rng(39);
  const JMap j = random_jmap(3, rng);
  const Manifold sphere = Manifold::sphere(3);

  const auto same = verify_intertwining(j, j, {1, 0}, sphere, 100, 2);
  CHECK(same.ok);
  CHECK(same.residual < 1e-14);
  CHECK(max_abs(same.a - CMat::Identity(3, 3)) < 1e-12);

  const JMap k = j.conjugated_by(random_special_unitary(3, rng));
  for (const Weight mu : {Weight{1, 0}, Weight{2, -1}, Weight{0, 3}}) {
    const auto rep = verify_intertwining(j, k, mu, sphere, 100, 2);
    CHECK(rep.ok);
    CHECK(rep.residual < 1e-10);
    CHECK(rep.tangency < 1e-12);
    CHECK(rep.isometry < 1e-12);
    CHECK(rep.equivariance < 1e-12);
  }

  const Family& fam = family3();
  const auto pair = verify_intertwining(fam.members[0].j, fam.members[2].j, {2, -1}, sphere, 200, 2);
  CHECK(pair.ok);
  CHECK(pair.residual < 1e-8);
  const auto st = verify_intertwining(fam.members[0].j, fam.members[2].j, {2, -1}, Manifold::stiefel(3, 2), 100, 2);
  CHECK(st.ok);
  CHECK(st.residual < 1e-8);

  // a non-isospectral perturbation breaks the intertwining
  const JMap bad(fam.members[2].j.j1(), 1.3 * fam.members[2].j.j2());
  CHECK_FALSE(verify_intertwining(fam.members[0].j, bad, {1, 1}, sphere, 100, 2, 1e-8).ok);
}
