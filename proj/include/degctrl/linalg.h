#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace degctrl {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// Jordan-type decomposition A = sum_l (mu_l P_l + N_l) with spectral
/// projectors P_l and nilpotent parts N_l (N_l^tau_l = 0), so that
///   exp(A t) = sum_l e^{mu_l t} sum_{s < tau_l} t^s / s! N_l^s P_l.
/// Eigenvalues closer than cluster_tol * (1 + ||A||) are merged.
/// Distinct eigenvalues are ordered by real part descending, then by modulus
/// descending.
struct SpectralStructure {
  std::vector<cplx> eigenvalues;
  std::vector<int> algebraic;  // cluster sizes
  std::vector<int> chain;      // tau_l, the largest Jordan chain length
  std::vector<Mat> P;
  std::vector<Mat> N;
  double reconstruction_error = 0.0;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  int max_chain() const;
  /// sum_l e^{mu_l t} sum_s t^s/s! N^s P, evaluated from the decomposition.
  Mat exp(double t) const;
};

SpectralStructure spectral_structure(const Mat& A, double cluster_tol = 1e-8);

/// Matrix exponential by scaling and squaring (Pade 13).
Mat expm(const Mat& A);

/// Number of singular values above tol * sigma_max.
int numerical_rank(const Mat& M, double tol);

}  // namespace degctrl
