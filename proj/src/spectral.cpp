#include "isoquot/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Eigenvalues>

namespace isoquot {

namespace {

constexpr double kSigmaFraction = 1.0 / 3.0;
constexpr int kEpsilonPairs = 20000;
constexpr int kStiefelVolumeSamples = 20000;

double kernel_weight(double d, double sigma) { return std::exp(-d * d / (2.0 * sigma * sigma)); }

int quotient_dim(const Manifold& mf) { return orbifold_report(mf).quotient_dim; }

QuotientGraph finish_graph(int n, double epsilon, int dim, double volume,
                           std::vector<std::vector<WeightedEdge>>& rows) {
  QuotientGraph g;
  g.n_vertices = n;
  g.epsilon = epsilon;
  g.sigma = kSigmaFraction * epsilon;
  g.intrinsic_dim = dim;
  g.volume = volume;
  g.normalization = normalization_constant(epsilon, n, dim, volume);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  g.edges.reserve(total);
  for (auto& r : rows) {
    for (auto& e : r) {
      e.weight = kernel_weight(e.distance, g.sigma);
      g.edges.push_back(e);
    }
  }
  g.degrees = RVec::Zero(n);
  for (const auto& e : g.edges) {
    g.degrees(e.i) += e.weight;
    g.degrees(e.j) += e.weight;
  }
  return g;
}

// Candidate pairs grouped by their first index; `starts` has n + 1 entries.
std::vector<std::size_t> row_starts(int n, const std::vector<IndexPair>& candidates) {
  std::vector<std::size_t> starts(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& c : candidates) ++starts[static_cast<std::size_t>(c.first) + 1];
  std::partial_sum(starts.begin(), starts.end(), starts.begin());
  return starts;
}

std::vector<IndexPair> sorted_candidates(std::vector<IndexPair> c) {
  for (auto& p : c)
    if (p.first > p.second) std::swap(p.first, p.second);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

template <bool Parallel>
QuotientGraph assemble(int n, double epsilon, int dim, double volume, const DistanceFn& dist,
                       const std::vector<IndexPair>* candidates) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_graph: epsilon must be positive");
  std::vector<std::vector<WeightedEdge>> rows(static_cast<std::size_t>(n));
  std::vector<IndexPair> cand;
  std::vector<std::size_t> starts;
  if (candidates) {
    cand = sorted_candidates(*candidates);
    starts = row_starts(n, cand);
  }
  auto do_row = [&](int i) {
    auto& out = rows[static_cast<std::size_t>(i)];
    auto consider = [&](int j) {
      const double d = dist(i, j);
      if (d < epsilon) out.push_back({i, j, d, 0.0});
    };
    if (candidates) {
      for (std::size_t c = starts[static_cast<std::size_t>(i)]; c < starts[static_cast<std::size_t>(i) + 1]; ++c)
        consider(cand[c].second);
    } else {
      for (int j = i + 1; j < n; ++j) consider(j);
    }
  };
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) do_row(i);
  } else {
    for (int i = 0; i < n; ++i) do_row(i);
  }
  return finish_graph(n, epsilon, dim, volume, rows);
}

template <bool Parallel>
std::vector<IndexPair> candidates_impl(const PointCloud& cloud, double radius) {
  const int n = cloud.size();
  const int m = cloud.manifold.m;
  const double c_min = std::cos(std::min(radius, M_PI));
  std::vector<std::vector<IndexPair>> rows(static_cast<std::size_t>(n));
  auto do_row = [&](int i) {
    const cplx* x = cloud.points[static_cast<std::size_t>(i)].data();
    for (int j = i + 1; j < n; ++j) {
      const cplx* y = cloud.points[static_cast<std::size_t>(j)].data();
      cplx uu(0.0, 0.0);
      for (int k = 0; k < m; ++k) uu += std::conj(x[k]) * y[k];
      double c = std::abs(uu);
      for (int k = m; k < m + 2; ++k) c += (std::conj(x[k]) * y[k]).real();
      // arccos is decreasing; a small margin keeps borderline pairs.
      if (c > c_min - 1e-12) rows[static_cast<std::size_t>(i)].emplace_back(i, j);
    }
  };
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) do_row(i);
  } else {
    for (int i = 0; i < n; ++i) do_row(i);
  }
  std::vector<IndexPair> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

DistanceFn form_distance(const PointCloud& cloud, const FormSpec& form,
                         std::shared_ptr<SphereDistanceKernel>& kernel) {
  if (form.kind == FormKind::sphere) {
    kernel = std::make_shared<SphereDistanceKernel>(form.j);
    const auto* k = kernel.get();
    return [&cloud, k](int i, int j) {
      return k->quotient(cloud.points[static_cast<std::size_t>(i)].data(),
                         cloud.points[static_cast<std::size_t>(j)].data());
    };
  }
  return [&cloud, &form](int i, int j) {
    return quotient_distance(form, cloud.points[static_cast<std::size_t>(i)], cloud.points[static_cast<std::size_t>(j)]);
  };
}

// Undeformed quotient distance, used for epsilon selection and prefiltering.
DistanceFn proxy_distance(const PointCloud& cloud, const FormSpec& round) {
  if (cloud.manifold.kind == ManifoldKind::sphere)
    return [&cloud](int i, int j) {
      return round_quotient_distance(cloud.points[static_cast<std::size_t>(i)], cloud.points[static_cast<std::size_t>(j)]);
    };
  return [&cloud, &round](int i, int j) {
    return quotient_distance(round, cloud.points[static_cast<std::size_t>(i)], cloud.points[static_cast<std::size_t>(j)]);
  };
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

PointCloud sample_uniform(const Manifold& mf, int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_uniform: N must be >= 2");
  PointCloud c;
  c.manifold = mf;
  c.seed = seed;
  c.points.resize(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Rng rng = derived_rng(seed, static_cast<std::uint64_t>(i));
    c.points[static_cast<std::size_t>(i)] = random_point(mf, rng);
  }
  return c;
}

RMat sample_round_sphere(int dim, int n, std::uint64_t seed) {
  RMat pts(dim + 1, n);
  for (int i = 0; i < n; ++i) {
    Rng rng = derived_rng(seed, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal;
    for (int k = 0; k <= dim; ++k) pts(k, i) = normal(rng);
    pts.col(i).normalize();
  }
  return pts;
}

double normalization_constant(double epsilon, int n_points, int dim, double volume) {
  const double sigma = kSigmaFraction * epsilon;
  const double s2 = sigma * sigma;
  const double m2 = s2 * std::pow(2.0 * M_PI * s2, 0.5 * dim) *
                    boost::math::gamma_p(0.5 * (dim + 2), epsilon * epsilon / (2.0 * s2));
  return 2.0 * volume / (n_points * m2);
}

double round_sphere_volume(int dim) { return 2.0 * std::pow(M_PI, 0.5 * (dim + 1)) / std::tgamma(0.5 * (dim + 1)); }

double quotient_volume(const Manifold& mf) {
  const int s = mf.s();
  if (mf.kind == ManifoldKind::sphere || mf.r == 1) {
    // |u|^2 ~ Beta(m, 2) under the uniform measure.
    const double mean_inv = boost::math::beta(mf.m - 0.5, 2.0) / boost::math::beta(mf.m, 2.0);
    return round_sphere_volume(2 * s - 1) * mean_inv / (2.0 * M_PI);
  }
  double vol = 1.0;
  for (int k = s - mf.r + 1; k <= s; ++k) vol *= 2.0 * std::pow(M_PI, k) / std::tgamma(k);
  Rng rng = derived_rng(0x5eedULL, 0);
  double acc = 0.0;
  for (int i = 0; i < kStiefelVolumeSamples; ++i) {
    const CMat q = random_point(mf, rng);
    acc += 1.0 / (2.0 * M_PI * q.topRows(mf.m).norm());
  }
  return vol * acc / kStiefelVolumeSamples;
}

SparseMat QuotientGraph::unnormalized_laplacian() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * edges.size() + static_cast<std::size_t>(n_vertices));
  for (int i = 0; i < n_vertices; ++i) t.emplace_back(i, i, degrees(i));
  for (const auto& e : edges) {
    t.emplace_back(e.i, e.j, -e.weight);
    t.emplace_back(e.j, e.i, -e.weight);
  }
  SparseMat l(n_vertices, n_vertices);
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

SparseMat QuotientGraph::laplacian() const { return normalization * unnormalized_laplacian(); }

int QuotientGraph::components() const {
  std::vector<int> parent(static_cast<std::size_t>(n_vertices));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int count = n_vertices;
  for (const auto& e : edges) {
    const int a = find(e.i);
    const int b = find(e.j);
    if (a != b) {
      parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      --count;
    }
  }
  return count;
}

QuotientGraph graph_from_distances(int n, double epsilon, int dim, double volume, const DistanceFn& dist,
                                   const std::vector<IndexPair>* candidates) {
  return assemble<true>(n, epsilon, dim, volume, dist, candidates);
}

std::vector<IndexPair> round_candidates(const PointCloud& cloud, double radius) {
  return candidates_impl<true>(cloud, radius);
}

namespace serial {
QuotientGraph graph_from_distances(int n, double epsilon, int dim, double volume, const DistanceFn& dist,
                                   const std::vector<IndexPair>* candidates) {
  return assemble<false>(n, epsilon, dim, volume, dist, candidates);
}
std::vector<IndexPair> round_candidates(const PointCloud& cloud, double radius) {
  return candidates_impl<false>(cloud, radius);
}
}  // namespace serial

QuotientGraph build_graph(const PointCloud& cloud, const FormSpec& form, double epsilon) {
  if (form.kind == FormKind::sphere && cloud.manifold.kind == ManifoldKind::sphere) {
    const SphereDistanceKernel k(form.j);
    return build_graph(cloud, form, epsilon, round_candidates(cloud, (1.0 + k.bound()) * epsilon));
  }
  std::shared_ptr<SphereDistanceKernel> kernel;
  const DistanceFn d = form_distance(cloud, form, kernel);
  return graph_from_distances(cloud.size(), epsilon, quotient_dim(cloud.manifold), quotient_volume(cloud.manifold), d);
}

QuotientGraph build_graph(const PointCloud& cloud, const FormSpec& form, double epsilon,
                          const std::vector<IndexPair>& candidates) {
  std::shared_ptr<SphereDistanceKernel> kernel;
  const DistanceFn d = form_distance(cloud, form, kernel);
  return graph_from_distances(cloud.size(), epsilon, quotient_dim(cloud.manifold), quotient_volume(cloud.manifold), d,
                              &candidates);
}

namespace {

struct LanczosRun {
  RMat basis;
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples columns j and j+1; 0 at restarts
  int steps = 0;
};

double gershgorin(const SparseMat& l) {
  double b = 0.0;
  RVec rows = RVec::Zero(l.rows());
  for (int c = 0; c < l.outerSize(); ++c)
    for (SparseMat::InnerIterator it(l, c); it; ++it) rows(it.row()) += std::abs(it.value());
  if (rows.size()) b = rows.maxCoeff();
  return b;
}

RVec random_unit(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  RVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v.normalized();
}

// Orthogonalize w against the first `cols` basis vectors, twice.
void reorthogonalize(const RMat& basis, int cols, RVec& w) {
  for (int pass = 0; pass < 2; ++pass) {
    const RVec h = basis.leftCols(cols).transpose() * w;
    w.noalias() -= basis.leftCols(cols) * h;
  }
}

// Advances the run to `target` steps. Restarts with a fresh random vector
// when an invariant subspace is found.
void lanczos_extend(const SparseMat& l, LanczosRun& run, int target, double scale, Rng& rng) {
  const Eigen::Index n = l.rows();
  if (run.basis.cols() < target + 1) run.basis.conservativeResize(n, std::min<Eigen::Index>(n + 1, target + 1));
  if (run.steps == 0) run.basis.col(0) = random_unit(n, rng);
  RVec w(n);
  for (int j = run.steps; j < target; ++j) {
    w.noalias() = l * run.basis.col(j);
    const double a = run.basis.col(j).dot(w);
    w -= a * run.basis.col(j);
    if (j > 0) w -= run.beta[static_cast<std::size_t>(j - 1)] * run.basis.col(j - 1);
    reorthogonalize(run.basis, j + 1, w);
    double b = w.norm();
    run.alpha.push_back(a);
    run.steps = j + 1;
    if (j + 1 >= n) {
      run.beta.push_back(0.0);
      break;
    }
    if (b <= 1e-10 * scale) {
      b = 0.0;
      for (int attempt = 0; attempt < 3; ++attempt) {
        w = random_unit(n, rng);
        reorthogonalize(run.basis, j + 1, w);
        if (w.norm() > 1e-8) break;
      }
      w.normalize();
      run.beta.push_back(0.0);
      run.basis.col(j + 1) = w;
    } else {
      run.beta.push_back(b);
      run.basis.col(j + 1) = w / b;
    }
  }
}

struct RitzSolution {
  RVec values;
  RMat vectors;  // eigenvectors of T
};

RitzSolution solve_tridiagonal(const LanczosRun& run, bool want_vectors) {
  const int s = run.steps;
  RVec d(s);
  RVec e(std::max(s - 1, 0));
  for (int i = 0; i < s; ++i) d(i) = run.alpha[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < s; ++i) e(i) = run.beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<RMat> es;
  es.computeFromTridiagonal(d, e, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  RitzSolution sol;
  sol.values = es.eigenvalues();
  if (want_vectors) sol.vectors = es.eigenvectors();
  return sol;
}

}  // namespace

RVec ritz_values(const SparseMat& l, int krylov_dim, std::uint64_t seed) {
  const int dim = std::min<int>(krylov_dim, static_cast<int>(l.rows()));
  LanczosRun run;
  Rng rng = derived_rng(seed, 0);
  lanczos_extend(l, run, dim, std::max(gershgorin(l), 1e-300), rng);
  return solve_tridiagonal(run, false).values;
}

SpectrumEstimate smallest_eigenvalues(const SparseMat& l, int k, const LanczosOptions& opts) {
  const int n = static_cast<int>(l.rows());
  if (k < 1 || k >= n + 1) throw std::invalid_argument("smallest_eigenvalues: need 1 <= k <= N");
  const double scale = std::max(gershgorin(l), 1e-300);
  const int max_steps = std::min(opts.max_iterations, n);
  LanczosRun run;
  Rng rng = derived_rng(opts.seed, 0);
  int target = std::min(std::max(2 * k, 20), max_steps);
  SpectrumEstimate est;
  while (true) {
    lanczos_extend(l, run, target, scale, rng);
    const RitzSolution sol = solve_tridiagonal(run, true);
    const int s = run.steps;
    const int kk = std::min(k, s);
    RVec res(kk);
    const double b_last = run.beta.empty() ? 0.0 : run.beta.back();
    for (int i = 0; i < kk; ++i) res(i) = std::abs(b_last * sol.vectors(s - 1, i));
    const bool done = kk == k && res.maxCoeff() <= opts.tol * scale;
    if (done || s >= max_steps) {
      if (!done) {
        throw LanczosError("Lanczos did not converge in " + std::to_string(s) + " iterations (max residual " +
                               std::to_string(res.maxCoeff() / scale) + " relative)",
                           res, s);
      }
      est.eigenvalues = sol.values.head(k);
      est.residuals = res;
      est.iterations = s;
      if (opts.vectors) est.vectors = run.basis.leftCols(s) * sol.vectors.leftCols(k);
      return est;
    }
    target = std::min(max_steps, std::max(target + 10, target + target / 5));
  }
}

SpectrumEstimate smallest_eigenvalues(const QuotientGraph& g, int k, const LanczosOptions& opts) {
  SpectrumEstimate est = smallest_eigenvalues(g.laplacian(), k, opts);
  est.normalization = g.normalization;
  est.epsilon = g.epsilon;
  est.n_points = g.n_vertices;
  est.components = g.components();
  if (est.components > 1)
    est.warnings.push_back("graph is disconnected (" + std::to_string(est.components) + " components)");
  return est;
}

double default_epsilon(int n, const DistanceFn& dist, std::uint64_t seed) {
  const double q = std::min(1.0, kNeighbourScale * std::sqrt(static_cast<double>(n)) / (n - 1));
  Rng rng = derived_rng(seed, 0xe95);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<double> d;
  d.reserve(kEpsilonPairs);
  while (static_cast<int>(d.size()) < kEpsilonPairs) {
    const int i = pick(rng);
    const int j = pick(rng);
    if (i != j) d.push_back(dist(i, j));
  }
  std::sort(d.begin(), d.end());
  const auto idx = std::min(d.size() - 1, static_cast<std::size_t>(q * static_cast<double>(d.size())));
  return d[idx];
}

SpectrumEstimate estimate_quotient_spectrum(const FormSpec& form, const EstimateConfig& cfg) {
  const PointCloud cloud = sample_uniform(form.manifold, cfg.n_points, cfg.seed);
  const FormSpec round = form.kind == FormKind::sphere ? FormSpec::sphere(JMap::zero(form.manifold.m))
                                                       : FormSpec::stiefel(JMap::zero(form.manifold.m), form.manifold.r);
  const double eps = cfg.epsilon ? *cfg.epsilon : default_epsilon(cloud.size(), proxy_distance(cloud, round), cfg.seed);
  const QuotientGraph g = build_graph(cloud, form, eps);
  LanczosOptions lo;
  lo.seed = cfg.seed;
  return smallest_eigenvalues(g, cfg.k, lo);
}

RVec round_sphere_spectrum(int dim, int k) {
  RVec out(k);
  int idx = 0;
  for (int l = 0; idx < k; ++l) {
    // multiplicity of l(l + dim - 1) on S^dim
    const double mult = boost::math::binomial_coefficient<double>(static_cast<unsigned>(l + dim), static_cast<unsigned>(dim)) -
                        (l >= 2 ? boost::math::binomial_coefficient<double>(static_cast<unsigned>(l + dim - 2),
                                                                            static_cast<unsigned>(dim))
                                : 0.0);
    for (int c = 0; c < static_cast<int>(mult) && idx < k; ++c) out(idx++) = l * (l + dim - 1.0);
  }
  return out;
}

CalibrationReport calibrate_round(int sphere_dim, int n, std::optional<double> epsilon, int k, std::uint64_t seed) {
  if (sphere_dim != 2 && sphere_dim != 3) throw std::invalid_argument("calibrate_round: dimension must be 2 or 3");
  const RMat pts = sample_round_sphere(sphere_dim, n, seed);
  const DistanceFn dist = [&pts](int i, int j) {
    return std::acos(std::clamp(pts.col(i).dot(pts.col(j)), -1.0, 1.0));
  };
  const double eps = epsilon ? *epsilon : default_epsilon(n, dist, seed);
  const QuotientGraph g = graph_from_distances(n, eps, sphere_dim, round_sphere_volume(sphere_dim), dist);
  CalibrationReport rep;
  rep.sphere_dim = sphere_dim;
  LanczosOptions lo;
  lo.seed = seed;
  rep.estimate = smallest_eigenvalues(g, k, lo);
  rep.analytic = round_sphere_spectrum(sphere_dim, k);
  rep.relative_error = RVec::Zero(k);
  for (int i = 0; i < k; ++i) {
    const double a = rep.analytic(i);
    rep.relative_error(i) = a > 0 ? std::abs(rep.estimate.eigenvalues(i) - a) / a : std::abs(rep.estimate.eigenvalues(i));
  }
  return rep;
}

RVec relative_differences(const RVec& a, const RVec& b) {
  RVec out = RVec::Zero(a.size());
  for (Eigen::Index i = 1; i < a.size(); ++i) {
    const double denom = std::abs(a(i));
    out(i) = denom > 0 ? std::abs(a(i) - b(i)) / denom : std::abs(a(i) - b(i));
  }
  return out;
}

ComparisonReport compare_spectra(const JMap& ja, const JMap& jb, const Manifold& mf, int n,
                                 std::optional<double> epsilon, int k, const std::vector<std::uint64_t>& seeds) {
  ComparisonReport rep;
  rep.isospectrality = is_isospectral(ja, jb);
  const JMap jc = jb.scaled(1.2);
  auto form_of = [&](const JMap& j) {
    return mf.kind == ManifoldKind::sphere ? FormSpec::sphere(j) : FormSpec::stiefel(j, mf.r);
  };
  const FormSpec fa = form_of(ja);
  const FormSpec fb = form_of(jb);
  const FormSpec fc = form_of(jc);
  const FormSpec round = form_of(JMap::zero(mf.m));
  std::vector<double> pair;
  std::vector<double> control;
  for (const std::uint64_t seed : seeds) {
    const PointCloud cloud = sample_uniform(mf, n, seed);
    SeedComparison sc;
    sc.seed = seed;
    sc.epsilon = epsilon ? *epsilon : default_epsilon(n, proxy_distance(cloud, round), seed);
    LanczosOptions lo;
    lo.seed = seed;
    auto run = [&](const std::vector<const FormSpec*>& forms) {
      std::vector<RVec> out;
      if (mf.kind == ManifoldKind::sphere) {
        double bound = 0.0;
        for (const auto* f : forms) bound = std::max(bound, SphereDistanceKernel(f->j).bound());
        const auto cand = round_candidates(cloud, (1.0 + bound) * sc.epsilon);
        for (const auto* f : forms) out.push_back(smallest_eigenvalues(build_graph(cloud, *f, sc.epsilon, cand), k, lo).eigenvalues);
      } else {
        for (const auto* f : forms) out.push_back(smallest_eigenvalues(build_graph(cloud, *f, sc.epsilon), k, lo).eigenvalues);
      }
      return out;
    };
    const auto lam = run({&fa, &fb, &fc});
    sc.lambda_a = lam[0];
    sc.lambda_b = lam[1];
    sc.lambda_control = lam[2];
    sc.rel_diff_pair = relative_differences(sc.lambda_a, sc.lambda_b);
    sc.rel_diff_control = relative_differences(sc.lambda_a, sc.lambda_control);
    sc.max_pair = sc.rel_diff_pair.maxCoeff();
    sc.max_control = sc.rel_diff_control.maxCoeff();
    pair.push_back(sc.max_pair);
    control.push_back(sc.max_control);
    rep.seeds.push_back(std::move(sc));
  }
  rep.median_pair = median(pair);
  rep.median_control = median(control);
  rep.contrast = rep.median_pair < rep.median_control;
  return rep;
}

}  // namespace isoquot
