#pragma once

#include <doctest.h>

#include "isoquot/family.hpp"

namespace isoquot::testing {

// m = 3 family at t = 0, 0.05, 0.1, generated once per process.
inline const Family& family3() {
  static const Family fam = generate_family(3, {0.0, 0.05, 0.1}, 42);
  return fam;
}

inline JMap random_jmap(int m, Rng& rng, double scale = 1.0) {
  return JMap(random_su(m, rng, scale), random_su(m, rng, scale));
}

inline double max_abs(const CMat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace isoquot::testing
