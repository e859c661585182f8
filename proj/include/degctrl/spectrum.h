#pragma once

#include <vector>

namespace degctrl {

enum class Regime { kWeak, kStrong };

/// Exponent alpha of the diffusivity x^alpha with its Bessel parameters.
struct DegeneracyExponent {
  double alpha = 0.0;
  Regime regime = Regime::kWeak;
  double nu = 0.5;     // |1 - alpha| / (2 - alpha)
  double kappa = 1.0;  // (2 - alpha) / 2
};

DegeneracyExponent make_exponent(double alpha);

/// Sign with which the boundary control enters the modal equations:
///   weak (Dirichlet datum at 0):  dc_k/dt = -lambda_k c_k + o_k h
///   strong (flux datum at 0):     dc_k/dt = -lambda_k c_k - o_k h
/// with o_k > 0 the observation trace of SpectralMode.
double input_sign(const DegeneracyExponent& e);

struct SpectralMode {
  int k = 0;
  double zero = 0.0;         // j_{nu,k}
  double eigenvalue = 0.0;   // kappa^2 j^2
  double norm_factor = 0.0;  // sqrt(2 - alpha) / |J'_nu(j)|
  double obs_trace = 0.0;    // (x^alpha phi')(0) (weak) or phi(0) (strong)

  /// obs_trace with the regime's input sign.
  double gain(const DegeneracyExponent& e) const { return input_sign(e) * obs_trace; }
};

SpectralMode mode(const DegeneracyExponent& e, int k);

/// Modes 1..K (zeros computed in one sweep).
std::vector<SpectralMode> modes(const DegeneracyExponent& e, int K);

/// Normalized eigenfunction phi_k(x) for 0 < x <= 1.
double eigenfunction_eval(const DegeneracyExponent& e, int k, double x);
double eigenfunction_eval(const DegeneracyExponent& e, const SpectralMode& m, double x);

/// phi_k(x) for 0 <= x <= 1, using the boundary limit at x = 0.
double eigenfunction_eval_closed(const DegeneracyExponent& e, const SpectralMode& m, double x);

/// int_a^b phi_k phi_m dx by adaptive quadrature in the variable s = x^kappa,
/// in which the integrand is smooth.
double eigenfunction_product_integral(const DegeneracyExponent& e, const SpectralMode& a,
                                      const SpectralMode& b, double lo, double hi,
                                      double tol = 1e-12);

struct GapViolation {
  int k = 0, m = 0;
  double gap = 0.0, lower = 0.0, upper = 0.0;
};

struct GapReport {
  double rho1 = 0.0;
  double rho2 = 0.0;
  int K = 0;
  std::vector<GapViolation> violations;
  double min_ratio = 0.0;  // min (lambda_k - lambda_m) / (k^2 - m^2)
  double max_ratio = 0.0;
  bool ok() const { return violations.empty(); }
};

/// Checks rho1 |k^2 - m^2| <= |lambda_k - lambda_m| <= rho2 |k^2 - m^2| for
/// 1 <= m < k <= K with rho1 = pi^2 kappa^2 / 4 and rho2 = 2 pi^2 kappa^2.
GapReport gap_check(const DegeneracyExponent& e, int K);

/// #{k : |Lambda_k| <= r} for a list sorted by nondecreasing modulus.
int counting_function(const std::vector<double>& moduli, double r);

/// Graded mesh x_i = (i/M)^(2/(2-alpha)), i = 0..M.
std::vector<double> graded_mesh(const DegeneracyExponent& e, int M);

/// First K eigenvalues of a node-based finite-volume discretization of
/// -(x^alpha u')' on the graded mesh (Dirichlet at 1; at 0 Dirichlet in the
/// weak regime, natural flux condition in the strong one).
std::vector<double> sturm_liouville_fd_oracle(const DegeneracyExponent& e, int K, int M);

/// int_0^1 |phi'|^2 x^alpha dx / lambda for mode k, i.e. ||phi_k||^2_{H^1} / lambda_k
/// computed by quadrature (should be 1). Exposed as a diagnostic.
double energy_ratio_by_quadrature(const DegeneracyExponent& e, const SpectralMode& m);

}  // namespace degctrl
