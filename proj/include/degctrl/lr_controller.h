#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "degctrl/kalman.h"
#include "degctrl/moment_control.h"
#include "degctrl/spectrum.h"

namespace degctrl {

/// State on the unit square in the tensor eigenbasis phi_k(x) psi_j(y):
/// column (k-1) J + (j-1) of coeffs is the n-vector c_{k,j}.
struct ModalState2D {
  DegeneracyExponent ex, ey;
  CoupledSystem sys;
  std::vector<SpectralMode> xmodes, ymodes;
  Mat coeffs;

  int K() const { return static_cast<int>(xmodes.size()); }
  int J() const { return static_cast<int>(ymodes.size()); }
  int n() const { return sys.n; }
  int index(int k, int j) const { return (k - 1) * J() + (j - 1); }  // 1-based k, j
  double eigenvalue(int k, int j) const {
    return xmodes[k - 1].eigenvalue + ymodes[j - 1].eigenvalue;
  }
  auto col(int k, int j) { return coeffs.col(index(k, j)); }
  auto col(int k, int j) const { return coeffs.col(index(k, j)); }
};

ModalState2D make_state_2d(const CoupledSystem& sys, const DegeneracyExponent& ex,
                           const DegeneracyExponent& ey, int K, int J);

double norm_l2_2d(const ModalState2D& u);
double norm_h1_2d(const ModalState2D& u);
double norm_hm1_2d(const ModalState2D& u);
/// H^{-1} norm of the part with j <= J.
double projected_norm_hm1_2d(const ModalState2D& u, int J);

struct LRInterval {
  double a = 0.0;   // a_k
  double T = 0.0;   // T_k
  int gamma = 0;    // beta 2^k
};

struct LRSchedule {
  double T = 0.0;
  double rho = 0.5;
  int beta = 1;
  double alpha_hat = 0.0;  // beta T (1 - 2^{-rho}) / 2
  int K_stop = 6;
  std::vector<LRInterval> intervals;  // k = 0..K_stop-1
  double identity_error = 0.0;        // |2 sum_k T_k - T| over the full series

  /// Time left after the last active interval: T - a_{K_stop}.
  double tail_time() const;
};

/// Intervals a_0 = 0, a_{k+1} = a_k + 2 T_k, T_k = (alpha_hat / beta) 2^{-k rho},
/// cutoffs gamma_k = beta 2^k.
LRSchedule make_schedule(double T, double rho, int beta, int K_stop = 6);
/// ceil(rho0 / T).
int default_beta(double T, double rho0 = 2.0);
/// Smallest K_stop with e^{-beta 2^{K_stop (2 - rho)}} <= target.
int auto_k_stop(double rho, int beta, double target);

/// G_ij = int_omega psi_i psi_j dy from the closed-form Lommel integrals in
/// 150-digit arithmetic; sigma_min comes from Jacobi rotations at the same
/// precision (it falls to about 1e-100 for alpha = 1.5, J = 40).
struct RestrictionGram {
  double a = 0.0, b = 1.0;
  int J = 0;
  Eigen::MatrixXd G;
  QMat Gq;  // the same entries rounded to quadruple precision
  double sigma_min = 0.0;
  double neg_log_sigma_min = 0.0;
};

RestrictionGram restriction_gram(const DegeneracyExponent& ey, double a, double b, int J);
/// sigma_min of the leading J x J blocks of one extended-precision Gram.
std::vector<double> leading_sigma_min(const DegeneracyExponent& ey, double a, double b,
                                      const std::vector<int>& J_list);

struct SpectralFit {
  std::vector<int> J;
  std::vector<double> lambda, sigma_min, m;  // m = -log sigma_min
  double C = 0.0;  // least C with m_J <= C sqrt(lambda_J) + C for all J
  double slope = 0.0, intercept = 0.0;  // least squares m ~ slope sqrt(lambda) + intercept
  std::vector<double> residual;  // |m - fit| / max(max m, 1)
  double max_residual = 0.0;
};

SpectralFit spectral_inequality_fit(const DegeneracyExponent& ey, double a, double b,
                                    const std::vector<int>& J_list);

struct StepOptions {
  SynthesisOptions synth;
  /// x-modes with lambda (1 - theta) T_k above this are first left to decay
  /// freely on the passive part of the interval.
  double skip_exponent = 36.0;
  double tolerance = 1e-6;
  /// The projected residual must fall below tolerance * reference in H^{-1};
  /// reference <= 0 means the norm of the state entering the step.
  double reference = -1.0;
};

struct StepResult {
  ModalState2D u_next;
  int gamma = 0;
  double a = 0.0, T = 0.0, tau = 0.0;
  std::vector<ExpSumControl> g;     // per y-mode j <= gamma (effective inputs)
  QMat Ginv;                        // (G_gamma)^{-1}
  std::vector<std::vector<int>> controlled;  // x-modes targeted per j
  double control_norm = 0.0;        // L^2((a, a+T) x omega)
  double norm_before = 0.0;
  double norm_after = 0.0;
  double projected_ratio = 0.0;     // ||Pi_gamma u_next|| / ||u||
  double cond = 0.0;                // largest moment Gram condition number

  /// Boundary control q(a + t, y) for local time t, one row per channel.
  Mat control_at(double t, const std::vector<double>& y, const DegeneracyExponent& ey,
                 const std::vector<SpectralMode>& ymodes, const RestrictionGram& gram) const;
};

/// One active phase: q(t, y) = sum_{j' <= gamma} h_j'(t) 1_omega psi_j'(y),
/// h = G_gamma^{-1} g with g_j the 1-d moment control of the y-mode j
/// (eigenvalues lambda_x + lambda_y,j). The state is propagated exactly for all
/// retained modes; throws NumericalError if the projected residual stays above
/// tolerance.
StepResult control_step(const ModalState2D& u, double a, double T, int gamma,
                        const RestrictionGram& gram, const StepOptions& opt = {});

/// Free evolution c_{k,j} -> e^{(A - lambda_{k,j}) dt} c_{k,j}. Throws
/// DomainError naming the offending modes if the part with j <= J exceeds
/// tol * reference (reference < 0: ||u||), all in H^{-1}.
ModalState2D dissipate(const ModalState2D& u, double dt, int J, double tol = 1e-6,
                       double reference = -1.0);
ModalState2D free_evolve(const ModalState2D& u, double dt);

struct LRStepRecord {
  double a = 0.0;
  double T = 0.0;
  int gamma = 0;
  double norm_before = 0.0;
  double norm_after_control = 0.0;
  double norm_after_dissipation = 0.0;
  double control_norm = 0.0;
  double cond = 0.0;
};

struct LRReport {
  std::vector<LRStepRecord> records;
  std::vector<StepResult> steps;
  double initial_norm = 0.0;
  double final_norm = 0.0;
  double final_ratio = 0.0;
  double total_control_norm = 0.0;
  double tail_time = 0.0;
  bool completed = false;
  std::string error;  // set when a step aborted the run
};

struct LROptions {
  StepOptions step;
  bool controls_enabled = true;
};

/// Alternates control_step and dissipation over the schedule, then evolves
/// freely until T. Residual tolerances are relative to the initial norm unless
/// opt.step.reference is set. A failing step ends the run with the partial trajectory.
LRReport run_lr(const ModalState2D& u0, const LRSchedule& schedule, const RestrictionGram& gram,
                const LROptions& opt = {});

/// Finite-volume free evolution on the tensor mesh fd_mesh(ex) x fd_mesh(ey),
/// BDF2 in time. Returns the mesh L^2 norms at t = 0 and t = duration.
/// Requires real A.
struct FdNorms2D {
  double initial = 0.0;
  double final = 0.0;
};
FdNorms2D fd_free_evolution_2d(const ModalState2D& u0, double duration, int Mx, int My, int steps);

}  // namespace degctrl
