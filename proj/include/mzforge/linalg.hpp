#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>

#include "mzforge/errors.hpp"

namespace mzforge {

using Cplx = std::complex<double>;

// Hermitian matrix; construction symmetrizes via (A + A*)/2 so downstream
// code can rely on exact conjugate symmetry.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(const Eigen::MatrixXcd& raw) {
    if (raw.rows() != raw.cols())
      throw InvalidInput("HermitianMatrix: matrix must be square");
    entries_ = 0.5 * (raw + raw.adjoint());
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }

 private:
  Eigen::MatrixXcd entries_;
};

struct EighResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenvectors; // columns, unitary
};

inline EighResult hermitian_eigh(const HermitianMatrix& a) {
  if (!a.entries().allFinite())
    throw InvalidInput("hermitian_eigh: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a.entries());
  if (solver.info() != Eigen::Success)
    throw InvalidInput("hermitian_eigh: eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// max_k |lambda_k - 1|; the operator-norm distance to the identity.
inline double spectral_distance_to_identity(const Eigen::VectorXd& eigenvalues) {
  double worst = 0.0;
  for (int k = 0; k < eigenvalues.size(); ++k)
    worst = std::max(worst, std::abs(eigenvalues[k] - 1.0));
  return worst;
}

inline double spectral_distance_to_identity(const HermitianMatrix& a) {
  return spectral_distance_to_identity(hermitian_eigh(a).eigenvalues);
}

// log det of a PSD matrix. Eigenvalues below -1e-10 reject the input;
// eigenvalues inside [-1e-10, 1e-300) make the matrix numerically singular
// and yield the -infinity sentinel.
inline double log_det(const HermitianMatrix& a) {
  EighResult e = hermitian_eigh(a);
  constexpr double kPsdTol = -1e-10;
  constexpr double kSingular = 1e-300;
  double acc = 0.0;
  for (int k = 0; k < e.eigenvalues.size(); ++k) {
    double lam = e.eigenvalues[k];
    if (lam < kPsdTol)
      throw NotPSD("log_det: eigenvalue " + std::to_string(lam) +
                   " below PSD tolerance");
    if (lam < kSingular) return -std::numeric_limits<double>::infinity();
    acc += std::log(lam);
  }
  return acc;
}

// A^{-1/2} through the same eigendecomposition backend.
inline HermitianMatrix inverse_sqrt(const HermitianMatrix& a,
                                    double eps = 1e-10) {
  EighResult e = hermitian_eigh(a);
  double smallest = e.eigenvalues.size() ? e.eigenvalues[0]
                                         : std::numeric_limits<double>::quiet_NaN();
  if (e.eigenvalues.size() == 0 || smallest < eps)
    throw IllConditioned("inverse_sqrt: smallest eigenvalue below eps",
                         smallest);
  Eigen::VectorXd scale = e.eigenvalues.array().rsqrt();
  Eigen::MatrixXcd b =
      e.eigenvectors * scale.asDiagonal() * e.eigenvectors.adjoint();
  return HermitianMatrix(b);
}

}  // namespace mzforge
