#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "degctrl/linalg.h"
#include "degctrl/spectrum.h"

namespace degctrl {

/// dw/dt = d_x(x^alpha d_x w) + A w, boundary input B h at x = 0.
/// Controls are synthesized for A - mu_shift I and mapped back with the
/// factor e^{mu_shift t}.
struct CoupledSystem {
  int n = 1;
  int m = 1;
  Mat A;
  Mat B;
  double mu_shift = 0.0;

  Mat shifted_A() const { return A - mu_shift * Mat::Identity(n, n); }
};

CoupledSystem make_system(const Mat& A, const Mat& B, double mu_shift = 0.0);

/// L_k = blockdiag(A - lambda_j I, j = 1..k) and B_k = [B; ...; B].
std::pair<Mat, Mat> build_blocks(const CoupledSystem& sys, const DegeneracyExponent& e, int k);

/// Rank of the Kalman matrix [B, L B, ..., L^{N-1} B], N = rows of L.
/// The Krylov space is built by block Arnoldi with reorthogonalization (same
/// span as the raw powers, which are hopelessly scaled for graded spectra); a
/// direction counts when its orthogonal remainder exceeds tol * ||L||.
int kalman_rank(const Mat& L, const Mat& B, double tol = 1e-9);

/// Total rank deficit of [L_k - s I | B_k] over the eigenvalues s of L_k.
int hautus_deficit(const CoupledSystem& sys, const DegeneracyExponent& e, int k,
                   double tol = 1e-9);

struct ControllabilityVerdict {
  int K_max = 0;
  std::vector<bool> per_k;  // per_k[k-1]: Kalman rank at k equals n k
  std::vector<int> rank;
  std::vector<int> expected;
  bool overall = false;
  int first_failure = 0;  // 0 if none
  std::string note;       // truncation statement
};

ControllabilityVerdict check_controllability(const CoupledSystem& sys, const DegeneracyExponent& e,
                                             int K_max = 64, double tol = 1e-9);

/// Moment exponents Lambda = lambda_k - mu_l, mu_l the distinct eigenvalues of
/// (A - mu_shift)^*, arranged as a low cluster (gammas) followed by a tail
/// enumerated k-major.
struct RearrangedSpectrum {
  DegeneracyExponent exponent;
  int K0 = 1;
  int p = 1;        // distinct eigenvalues of A^*
  int p_tilde = 0;  // number of gammas
  std::vector<cplx> mu;          // eigenvalues of the shifted A^*, ordered
  std::vector<int> tau;          // chain length per mu_l
  std::vector<cplx> gammas;      // low cluster, nondecreasing modulus
  std::vector<int> gamma_tau;    // chain length per gamma
  std::vector<double> lambdas;   // lambda_1..lambda_{K_max}
  int eta = 1;
  int K_max = 0;
  int k0 = 1, k1 = 1, k2 = 1;

  /// Lambda_{p_tilde + i}, i >= 1 (tail part of the sequence).
  cplx tail(int i) const;
  int tail_tau(int i) const;
  /// Full sequence up to index lambdas.size() in k.
  std::vector<cplx> sequence() const;
  std::vector<int> sequence_tau() const;
};

RearrangedSpectrum rearrange(const CoupledSystem& sys, const DegeneracyExponent& e, int K_max);

struct HypothesisReport {
  int count = 0;  // number of Lambda checked
  bool distinct = false;        // (i)
  double min_separation = 0.0;
  bool positive_real = false;   // (ii)
  double min_real = 0.0;
  bool imag_bound = false;      // (iii)
  double beta = 0.0;
  bool monotone_modulus = false;  // (iv)
  bool gap = false;             // (v)
  double rho = 0.0;
  int q = 1;
  double near_separation = 0.0;
  bool counting = false;        // (vii)
  double p1 = 0.0, p2 = 0.0, varpi = 0.0;
  bool all() const {
    return distinct && positive_real && imag_bound && monotone_modulus && gap && counting;
  }
};

HypothesisReport verify_hypotheses(const RearrangedSpectrum& rs, int K_max);
/// Same checks for an explicit sequence; q is the gap-condition index offset.
HypothesisReport verify_sequence(const std::vector<cplx>& Lambda, int q);

}  // namespace degctrl
