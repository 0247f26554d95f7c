#include "isoquot/quotient.hpp"

#include <algorithm>

#include "support.hpp"

using namespace isoquot;
using namespace isoquot::testing;

namespace {

CMat nearby(const Manifold& mf, const CMat& p, double dist, Rng& rng) {
  return retract(mf, p + dist * random_tangent(mf, p, rng));
}

// Dense scan over the circle; independent of the grid + Brent path.
double brute_quotient(const FormSpec& form, const CMat& x, const CMat& y, int n = 4096) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) best = std::min(best, local_distance(form, x, act_g(2 * M_PI * k / n, y)));
  return best;
}

}  // namespace

TEST_CASE("local distance") {
  Rng rng(40);
  const Manifold mf = Manifold::sphere(3);
  const FormSpec form = FormSpec::sphere(random_jmap(3, rng));
  const FormSpec round = FormSpec::sphere(JMap::zero(3));

  SUBCASE("zero and symmetry") {
    const CMat p = random_point(mf, rng);
    CHECK(local_distance(form, p, p) == 0.0);
    const CMat q = nearby(mf, p, 0.1, rng);
    CHECK(local_distance(form, p, q) == local_distance(form, q, p));
  }
  SUBCASE("round metric matches arccos") {
    for (double d : {1e-3, 1e-2, 0.1, 0.3}) {
      const CMat p = random_point(mf, rng);
      const CMat q = nearby(mf, p, d, rng);
      const double exact = std::acos(std::clamp(g0(p, q), -1.0, 1.0));
      CHECK(std::abs(local_distance(round, p, q) - exact) < std::max(1e-12, exact * exact * exact));
    }
  }
  SUBCASE("step along a torus orbit") {
    const double eps = 1e-3;
    for (int i = 0; i < 10; ++i) {
      const CMat p = random_point(mf, rng);
      const double v1 = std::abs(p(3, 0));
      const CMat q = act_t(eps / v1, 0.0, p);
      CHECK(local_distance(form, p, q) == doctest::Approx(eps).epsilon(0.01));
    }
  }
  SUBCASE("kernel agrees with the generic evaluation") {
    SphereDistanceKernel kernel(form.j);
    for (int i = 0; i < 50; ++i) {
      const CMat p = random_point(mf, rng);
      const CMat q = nearby(mf, p, 0.2, rng);
      CHECK(std::abs(kernel.local(p.data(), q.data()) - local_distance(form, p, q)) < 1e-14);
    }
  }
}

TEST_CASE("quotient distance") {
  Rng rng(41);
  const Manifold mf = Manifold::sphere(3);
  const JMap j = random_jmap(3, rng);
  const FormSpec form = FormSpec::sphere(j);
  const FormSpec round = FormSpec::sphere(JMap::zero(3));

  SUBCASE("same orbit") {
    for (int i = 0; i < 20; ++i) {
      const CMat x = random_point(mf, rng);
      CHECK(quotient_distance(form, x, act_g(6.0 * i / 20.0, x)) < 1e-9);
    }
  }
  SUBCASE("round quotient oracle") {
    for (int i = 0; i < 200; ++i) {
      const CMat x = random_point(mf, rng);
      const CMat y = act_g(1.0 + i, nearby(mf, x, 0.3 * (i + 1) / 200.0, rng));
      const double exact = round_quotient_distance(x, y);
      if (exact > 0.3 || exact < 1e-6) continue;
      CHECK(std::abs(quotient_distance(round, x, y) - exact) < 1e-3 * exact);
    }
  }
  SUBCASE("singular points: round S^3 distance") {
    for (int i = 0; i < 20; ++i) {
      CMat x = CMat::Zero(5, 1), y = CMat::Zero(5, 1);
      CMat v = random_point(Manifold::sphere(0), rng);
      CMat w = retract(Manifold::sphere(0), v + 0.2 * random_tangent(Manifold::sphere(0), v, rng));
      x.bottomRows(2) = v;
      y.bottomRows(2) = w;
      const double s3 = std::acos(std::clamp(g0(v, w), -1.0, 1.0));
      CHECK(quotient_distance(round, x, y) == doctest::Approx(s3).epsilon(1e-6));
    }
  }
  SUBCASE("agrees with a dense scan over the circle") {
    for (int i = 0; i < 30; ++i) {
      const CMat x = random_point(mf, rng);
      const CMat y = act_g(2.0 * i, nearby(mf, x, 0.25, rng));
      const double brute = brute_quotient(form, x, y);
      const double q = quotient_distance(form, x, y);
      CHECK(q <= brute + 1e-12);
      CHECK(q >= brute - 1e-6);
    }
  }
  SUBCASE("exact symmetry and G-translate invariance") {
    for (int i = 0; i < 50; ++i) {
      const CMat x = random_point(mf, rng);
      const CMat y = nearby(mf, x, 0.3, rng);
      const double d = quotient_distance(form, x, y);
      CHECK(d == quotient_distance(form, y, x));
      CHECK(std::abs(quotient_distance(form, act_g(0.7, x), act_g(-2.1, y)) - d) < 1e-9);
    }
  }
  SUBCASE("triangle inequality in the local regime") {
    for (int i = 0; i < 200; ++i) {
      const CMat x = random_point(mf, rng);
      const CMat y = nearby(mf, x, 0.1, rng);
      const CMat z = nearby(mf, y, 0.1, rng);
      const double a = quotient_distance(form, x, y), b = quotient_distance(form, y, z),
                   c = quotient_distance(form, x, z);
      const double scale = std::max({a, b, c});
      CHECK(c <= a + b + 3.0 * scale * scale * scale);
    }
  }
  SUBCASE("kernel lower bound holds") {
    SphereDistanceKernel kernel(j);
    for (int i = 0; i < 100; ++i) {
      const CMat x = random_point(mf, rng);
      const CMat y = nearby(mf, x, 0.3, rng);
      CHECK(kernel.quotient(x.data(), y.data()) >= round_quotient_distance(x, y) / (1.0 + kernel.bound()) - 1e-12);
    }
  }
  SUBCASE("Stiefel path") {
    const Manifold st = Manifold::stiefel(3, 2);
    const FormSpec sf = FormSpec::stiefel(j, 2);
    const CMat x = random_point(st, rng);
    CHECK(quotient_distance(sf, x, act_g(1.3, x)) < 1e-9);
    const CMat y = nearby(st, x, 0.2, rng);
    CHECK(quotient_distance(sf, x, y) == quotient_distance(sf, y, x));
  }
}

TEST_CASE("stabilizers and the principal part") {
  Rng rng(42);
  const Manifold mf = Manifold::sphere(3);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    CMat p = random_point(mf, rng);
    switch (i % 5) {
      case 1: p.topRows(3).setZero(); break;
      case 2: p(3, 0) = 0.0; break;
      case 3: p(4, 0) = 0.0; break;
      default: break;
    }
    p /= p.norm();
    const bool closed = p.topRows(3).norm() > 1e-8 && std::abs(p(3, 0)) > 1e-8 && std::abs(p(4, 0)) > 1e-8;
    if (in_principal_hat(p) != closed || in_principal_hat_computed(p) != closed) ++mismatches;
    if ((stabilizer_dim(mf, p) == 1) != (p.topRows(3).norm() < 1e-8)) ++mismatches;
  }
  CHECK(mismatches == 0);

  const Manifold st2 = Manifold::stiefel(3, 2);
  CMat q = CMat::Zero(5, 2);
  q(3, 0) = 1.0;
  q(4, 1) = 1.0;
  CHECK(stabilizer_dim(st2, q) == 1);
  CHECK(stabilizer_dim(st2, random_point(st2, rng)) == 0);
  const Manifold st3 = Manifold::stiefel(3, 3);
  for (int i = 0; i < 20; ++i) CHECK(stabilizer_dim(st3, random_point(st3, rng)) == 0);
}

TEST_CASE("orbifold report") {
  const auto s = orbifold_report(Manifold::sphere(3));
  CHECK(s.manifold_dim == 9);
  CHECK(s.quotient_dim == 8);
  CHECK(s.singular_dim == 3);
  CHECK(s.codim == 5);
  CHECK_FALSE(s.is_orbifold);

  // dim V_2(C^5) = 2*2*5 - 4 = 16, fixed set U(2) of dimension 4
  const auto r2 = orbifold_report(Manifold::stiefel(3, 2));
  CHECK(r2.manifold_dim == 16);
  CHECK(r2.quotient_dim == 15);
  CHECK(r2.singular_dim == 4);
  CHECK(r2.codim == 11);
  CHECK_FALSE(r2.is_orbifold);

  const auto r3 = orbifold_report(Manifold::stiefel(3, 3));
  CHECK_FALSE(r3.singular_dim.has_value());
  CHECK(r3.is_orbifold);
  CHECK(r3.singular_model == "empty");

  for (int m = 3; m <= 6; ++m) CHECK(orbifold_report(Manifold::sphere(m)).quotient_dim == 2 * m + 2);
}
