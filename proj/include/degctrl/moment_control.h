#pragma once

#include <limits>
#include <string>
#include <vector>

#include "degctrl/kalman.h"
#include "degctrl/linalg.h"
#include "degctrl/quad.h"
#include "degctrl/solver_1d.h"

namespace degctrl {

/// int_0^T t^p e^{-s t} dt in quadruple precision; T = +inf allowed when
/// Re s > 0.
qcplx power_exp_integral(int p, const qcplx& s, const qreal& T);
qcplx power_exp_integral_inf(int p, const qcplx& s);

/// int_0^T t^a e^{-La t} t^b e^{-conj(Lb) t} dt. T may be +infinity.
cplx gram_entry(cplx La, int a, cplx Lb, int b, double T);

/// Generalized exponent t^sigma e^{-Lambda t}, sigma < max_power.
struct MomentNode {
  cplx Lambda;
  int max_power = 1;
};

struct MomentSystem {
  std::vector<MomentNode> nodes;
  double T = 1.0;
  Vec rhs;  // optional targets, one per (node, power)

  /// Number of generalized exponentials (sum of max_power).
  int size() const;
};

/// Biorthogonal family Psi_i = sum_c coefficients(c, i) e_c, e_c = t^sigma_c e^{-Lambda_c t}
/// ordered node-major. <Psi_i, e_j> = (gram * coefficients)(j, i).
struct BiorthoFamily {
  std::vector<MomentNode> nodes;
  double T = 1.0;
  QMat gram_q;
  QMat coefficients_q;
  Mat gram;
  Mat coefficients;
  double cond_estimate = 0.0;  // ||G||_1 ||G^{-1}||_1
  double residual = 0.0;       // max |G C - I|

  cplx eval(int i, double t) const;
  /// L^2(0, T) norm of Psi_i (exact, from the Gram).
  double norm(int i) const;
};

/// Default cap on cond(G). Gram algebra runs in quadruple precision, so the
/// cap leaves about ten significant digits.
inline constexpr double kDefaultCondCap = 1e24;

/// Minimal-norm biorthogonal family: coefficients = G^{-1} with
/// G(j, c) = <e_c, e_j>. Throws ConditioningError when cond(G) > cond_cap,
/// reporting the largest leading truncation that passes.
BiorthoFamily build_biortho(const MomentSystem& ms, double cond_cap = kDefaultCondCap);

/// Moment targets for driving the retained modes of w0 to zero on a horizon T
/// (unshifted; the shift is handled by synthesize_control): stacked per mode,
///   r_k = -e^{(A_eff - lambda_k) T} c_k(0) / g_k,
/// g_k the signed trace. For n = 1, A = 0, weak regime: -e^{-lambda_k T} c_k / o_k.
Vec moment_rhs(const ModalState1D& w0, double T);

/// Control of the form h(t) = e^{mu t} G(tau - t) on [0, tau] and 0 on (tau, T],
///   G_q(s) = sum_c y(c, q) s^{r + sigma_c} e^{-beta_c s}.
struct ExpSumControl {
  double T = 0.0;
  double tau = 0.0;
  double mu = 0.0;
  int r = 0;
  int m = 1;
  std::vector<qcplx> beta;
  std::vector<int> sigma;
  QMat y;  // basis x m

  int size() const { return static_cast<int>(beta.size()); }
  Vec eval(double t) const;
  QVec eval_q(double t) const;
  SampledControl sample(int intervals) const;
  /// Exact L^2(0, T) norm.
  double l2_norm() const;
  /// int_0^tau s^p e^{-E s} G(s) ds, one entry per channel.
  QVec moment(int p, const qcplx& E) const;
};

/// e^{mu tau} int_0^tau e^{(A_eff - lambda) s} B G(s) ds in quadruple
/// precision; ss is the spectral structure of A_eff = A - mu I.
QVec control_drive(const ExpSumControl& h, const CoupledSystem& sys, const SpectralStructure& ss,
                   double lambda);

/// Mode-wise response of dc/dt = (A - lambda) c + g B h with the exact
/// exponential-sum control, c(0) = c0, evaluated at t_end >= tau.
/// ss is the spectral structure of A - mu I.
Vec exact_mode_response(const ExpSumControl& h, const CoupledSystem& sys,
                        const SpectralStructure& ss, double lambda, cplx g, const Vec& c0,
                        double t_end);

/// Moment solve on the window [0, tau] of a horizon T for modes with
/// eigenvalues lambda[k], signed gains gain[k] and initial coefficients
/// c0.col(k): the returned control drives all of them to zero at tau (and they
/// stay there until T). Nodes lambda_k - nu_l are merged when equal; the
/// moment unknowns are the minimal-norm solution of the stacked equations,
/// and the exponential-sum coefficients solve the weighted Gram system.
struct MomentSolve {
  ExpSumControl control;
  double cond = 0.0;
  double moment_residual = 0.0;
};
MomentSolve solve_moment_problem(const CoupledSystem& sys, const SpectralStructure& ss,
                                 const std::vector<double>& lambda, const std::vector<double>& gain,
                                 const Mat& c0, double T, double tau, int weight_power,
                                 double cond_cap);

struct SynthesisOptions {
  double theta = 0.75;   // active fraction of the horizon
  int weight_power = 2;  // r: the control vanishes like (tau - t)^r at tau
  double cond_cap = kDefaultCondCap;
  int min_samples = 1024;
  double sample_resolution = 0.02;  // lambda_max * dt
  double tolerance = 1e-6;
  int max_refinements = 4;
  bool verify = true;
};

struct SynthesisResult {
  SampledControl h;
  ExpSumControl exact;
  double l2_norm = 0.0;  // exact L^2(0, T) norm
  double cond = 0.0;
  double moment_residual = 0.0;  // max |S x - R| relative to max |R|
  double exact_ratio = 0.0;      // retained-mode H^{-1} ratio, exact propagation
  double sampled_ratio = 0.0;    // same through modal_forward on the samples
  double tail_bound = 0.0;       // e^{-lambda_{K+1} (T - tau)} free decay of untargeted modes
  int samples = 0;
};

/// Null control for the retained modes of w0 on [0, T] by the moment method.
/// Throws ControllabilityError if the Kalman condition fails up to K,
/// ConditioningError on Gram refusal, DomainError if some exponent has
/// nonpositive real part (increase mu_shift), NumericalError if sampling cannot
/// reach the tolerance.
SynthesisResult synthesize_control(const ModalState1D& w0, double T,
                                   const SynthesisOptions& opt = {});

struct CostPoint {
  double T = 0.0;
  double norm = 0.0;  // NaN when refused
  bool ok = false;
  std::string note;
};

/// Control norms for a fixed initial state over a list of horizons.
/// Conditioning refusals are recorded as gaps.
std::vector<CostPoint> cost_curve(const ModalState1D& w0, const std::vector<double>& T_list,
                                  const SynthesisOptions& opt = {});

}  // namespace degctrl
