#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace isoquot {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// The one generator used for every randomized operation.
using Rng = std::mt19937_64;

// Independent stream for item `index` of a run seeded with `seed`. Used by
// parallel loops so that results do not depend on the worker count.
Rng derived_rng(std::uint64_t seed, std::uint64_t index);

// Real part of the Hermitian (Frobenius) product, Re tr(A* B).
double real_inner(const CMat& a, const CMat& b);

bool is_skew_hermitian(const CMat& a, double tol);

// exp(Omega) for skew-Hermitian Omega, via the spectral decomposition of -i*Omega.
CMat expm_skew_hermitian(const CMat& omega);

// Closest unitary (polar factor), then the scalar phase that moves det into 1.
CMat nearest_special_unitary(const CMat& a);

// Haar-distributed element of SU(m).
CMat random_special_unitary(int m, Rng& rng);

// Gaussian element of su(m) with i.i.d. N(0, scale^2) coordinates in the
// orthonormal basis of su_basis().
CMat random_su(int m, Rng& rng, double scale = 1.0);

// Orthonormal basis of su(m) for Re tr(X* Y): m^2 - 1 traceless
// skew-Hermitian matrices.
const std::vector<CMat>& su_basis(int m);

RVec su_coordinates(const CMat& x);
CMat su_from_coordinates(int m, const RVec& coords);

// Real vectorization of a complex matrix, column-major, (re, im) interleaved.
RVec realify(const CMat& a);
CMat complexify(const RVec& v, Eigen::Index rows, Eigen::Index cols);

// Ascending eigenvalues of the Hermitian matrix -i*A for skew-Hermitian A.
RVec skew_spectrum(const CMat& a);

}  // namespace isoquot
