#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "isoquot/quotient.hpp"

namespace isoquot {

using SparseMat = Eigen::SparseMatrix<double>;

struct PointCloud {
  Manifold manifold;
  std::uint64_t seed = 0;
  std::vector<CMat> points;

  int size() const { return static_cast<int>(points.size()); }
};

// i.i.d. uniform for g0. Point i is drawn from derived_rng(seed, i).
PointCloud sample_uniform(const Manifold& mf, int n, std::uint64_t seed);

// Uniform points on the real unit sphere S^dim, one per column.
RMat sample_round_sphere(int dim, int n, std::uint64_t seed);

struct WeightedEdge {
  int i = 0;  // i < j
  int j = 0;
  double distance = 0.0;
  double weight = 0.0;
};

using DistanceFn = std::function<double(int, int)>;
using IndexPair = std::pair<int, int>;

struct QuotientGraph {
  int n_vertices = 0;
  double epsilon = 0.0;
  double sigma = 0.0;
  int intrinsic_dim = 0;
  double volume = 0.0;
  double normalization = 1.0;  // L = normalization * (D - W)
  std::vector<WeightedEdge> edges;  // sorted by (i, j)
  RVec degrees;

  SparseMat laplacian() const;               // normalization * (D - W)
  SparseMat unnormalized_laplacian() const;  // D - W
  int components() const;
};

// 2 vol / (N M2) with M2 the second moment of the truncated Gaussian kernel
// in dimension `dim`, so that L approximates the positive Laplacian.
double normalization_constant(double epsilon, int n_points, int dim, double volume);

// Riemannian volume of G\M: integral of 1 / (orbit length) over M.
double quotient_volume(const Manifold& mf);

double round_sphere_volume(int dim);

// Edges i < j with dist(i, j) < epsilon, over all pairs or the given
// candidates. Parallel over rows with a fixed write layout.
QuotientGraph graph_from_distances(int n, double epsilon, int dim, double volume, const DistanceFn& dist,
                                   const std::vector<IndexPair>* candidates = nullptr);

// Pairs whose undeformed quotient distance is below `radius`.
std::vector<IndexPair> round_candidates(const PointCloud& cloud, double radius);

QuotientGraph build_graph(const PointCloud& cloud, const FormSpec& form, double epsilon);
// Reuses a candidate list built with round_candidates(cloud, r), r >= (1 + bound) epsilon.
QuotientGraph build_graph(const PointCloud& cloud, const FormSpec& form, double epsilon,
                          const std::vector<IndexPair>& candidates);

namespace serial {
QuotientGraph graph_from_distances(int n, double epsilon, int dim, double volume, const DistanceFn& dist,
                                   const std::vector<IndexPair>* candidates = nullptr);
std::vector<IndexPair> round_candidates(const PointCloud& cloud, double radius);
}  // namespace serial

struct LanczosOptions {
  int max_iterations = 3000;
  double tol = 1e-10;  // residual relative to a bound on |L|
  std::uint64_t seed = 0;
  bool vectors = false;
};

struct LanczosError : std::runtime_error {
  LanczosError(const std::string& what, RVec residuals, int iterations)
      : std::runtime_error(what), residuals(std::move(residuals)), iterations(iterations) {}
  RVec residuals;
  int iterations;
};

struct SpectrumEstimate {
  RVec eigenvalues;  // ascending
  RVec residuals;
  RMat vectors;      // filled when requested
  int iterations = 0;
  double normalization = 1.0;
  double epsilon = 0.0;
  int n_points = 0;
  int components = 0;
  std::vector<std::string> warnings;
};

// k smallest eigenvalues of a symmetric matrix by Lanczos with full
// reorthogonalization. Deterministic given opts.seed. Throws LanczosError.
SpectrumEstimate smallest_eigenvalues(const SparseMat& l, int k, const LanczosOptions& opts = {});
SpectrumEstimate smallest_eigenvalues(const QuotientGraph& g, int k, const LanczosOptions& opts = {});

// All Ritz values of `krylov_dim` Lanczos steps from the seeded start vector.
RVec ritz_values(const SparseMat& l, int krylov_dim, std::uint64_t seed);

// Distance below which a fraction ~ neighbours/(N - 1) of pairs lies, with
// neighbours = kNeighbourScale * sqrt(N). Estimated from sampled pairs.
inline constexpr double kNeighbourScale = 4.0;
double default_epsilon(int n, const DistanceFn& dist, std::uint64_t seed);

struct EstimateConfig {
  int n_points = 4000;
  std::optional<double> epsilon;
  int k = 10;
  std::uint64_t seed = 0;
};

SpectrumEstimate estimate_quotient_spectrum(const FormSpec& form, const EstimateConfig& cfg);

struct CalibrationReport {
  int sphere_dim = 2;
  SpectrumEstimate estimate;
  RVec analytic;
  RVec relative_error;  // index 0 is absolute
};

RVec round_sphere_spectrum(int dim, int k);
CalibrationReport calibrate_round(int sphere_dim, int n, std::optional<double> epsilon, int k, std::uint64_t seed);

struct SeedComparison {
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  RVec lambda_a;
  RVec lambda_b;
  RVec lambda_control;
  RVec rel_diff_pair;
  RVec rel_diff_control;
  double max_pair = 0.0;
  double max_control = 0.0;
};

struct ComparisonReport {
  IsospectralityReport isospectrality;
  std::vector<SeedComparison> seeds;
  double median_pair = 0.0;
  double median_control = 0.0;
  bool contrast = false;  // median_pair < median_control
};

// Coupled design: one cloud per seed, graphs for jA, jB and jC = 1.2 jB.
ComparisonReport compare_spectra(const JMap& ja, const JMap& jb, const Manifold& mf, int n,
                                 std::optional<double> epsilon, int k, const std::vector<std::uint64_t>& seeds);

// |a_i - b_i| / |a_i| for i = 1 .. k-1; index 0 stays 0.
RVec relative_differences(const RVec& a, const RVec& b);

}  // namespace isoquot
