#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "degctrl/kalman.h"
#include "degctrl/linalg.h"
#include "degctrl/spectrum.h"

namespace degctrl {

/// State of the 1-d system in the eigenbasis: column k-1 of coeffs is the
/// n-vector c_k = <w, phi_k>.
struct ModalState1D {
  DegeneracyExponent exponent;
  CoupledSystem sys;
  std::vector<SpectralMode> modes;
  Mat coeffs;  // n x K

  int K() const { return static_cast<int>(modes.size()); }
  int n() const { return sys.n; }
};

ModalState1D make_state_1d(const CoupledSystem& sys, const DegeneracyExponent& e, int K);

/// Uniformly sampled control on [0, T]; values is m x N. Between samples the
/// control is the local cubic through the four nearest samples (one-sided at
/// the ends); outside [0, T] it is zero.
struct SampledControl {
  double T = 0.0;
  std::vector<double> grid;
  Mat values;

  static SampledControl zeros(double T, int samples, int m);
  int samples() const { return static_cast<int>(grid.size()); }
  int m() const { return static_cast<int>(values.rows()); }
  double dt() const { return grid.size() > 1 ? T / (grid.size() - 1) : 0.0; }
  Vec eval(double t) const;
  /// L^2(0,T) norm of the interpolant (5-point Gauss per interval).
  double l2_norm() const;
  double sup_norm() const;
};

/// Modal variation of constants over [0, T]:
///   c_k(T) = e^{L_k T} c_k(0) + g_k int_0^T e^{L_k (T-t)} B h(t) dt,
///   L_k = A - lambda_k I, g_k = input_sign * obs_trace.
ModalState1D modal_forward(const ModalState1D& w0, const SampledControl& h, double T);
/// Same over [t0, t1] with the control read on its own time axis.
ModalState1D modal_forward(const ModalState1D& w0, const SampledControl& h, double t0, double t1);

/// Boundary observation of the backward adjoint with v(T) = vT:
///   y(t) = sum_k o_k B^* e^{(A^* - lambda_k)(T - t)} v_{T,k},
/// which is B^* (x^alpha v_x)(t,0) (weak) or B^* v(t,0) (strong).
/// The transposition identity reads
///   <w(T), vT> - <w0, v(0)> = input_sign * int_0^T <h, y> dt.
struct ObservationTrace {
  std::vector<double> t;
  Mat values;  // m x N
};
ObservationTrace adjoint_solve(const ModalState1D& vT, double T, int samples = 1025);

/// Adjoint state v(t) = e^{(A^* - lambda_k)(T - t)} v_{T,k}, modewise.
ModalState1D adjoint_state(const ModalState1D& vT, double T, double t);

/// <a, b> = sum_k b_k^* a_k.
cplx modal_inner(const ModalState1D& a, const ModalState1D& b);

double norm_l2_1d(const ModalState1D& s);
double norm_h1_1d(const ModalState1D& s);
double norm_hm1_1d(const ModalState1D& s);

/// Values on the graded mesh (n x (M+1)).
struct MeshFunction {
  std::vector<double> x;
  Eigen::MatrixXd values;
};

/// Mesh used by the finite-volume oracle: x_i = (i/M)^q with
/// q = max(3, 2/(2-alpha)), graded harder than the natural x^kappa scaling so
/// that the x^{1-alpha} boundary layer of the weak regime is resolved.
std::vector<double> fd_mesh(const DegeneracyExponent& e, int M);

MeshFunction to_mesh(const ModalState1D& s, int M);  // on fd_mesh
MeshFunction to_mesh(const ModalState1D& s, const std::vector<double>& x);
double mesh_l2_norm(const MeshFunction& f);

struct FdOptions {
  int M = 4000;
  int steps = 4000;
};

/// Node-based finite-volume operator of -(x^alpha u')' on a mesh with
/// lumped cell volumes and face conductances ((x_i + x_{i+1})/2)^alpha / h_i.
/// Unknowns are nodes first..M-1 (first = 1 in the weak regime, where the
/// value at 0 is prescribed, and 0 in the strong regime); u(1) = 0.
struct FvOperator1D {
  int first = 0;
  std::vector<double> x;
  std::vector<double> conductance;  // per face, size M
  Eigen::VectorXd volume;           // per unknown
  Eigen::SparseMatrix<double> stiffness;

  int size() const { return static_cast<int>(volume.size()); }
};
FvOperator1D fv_operator_1d(const DegeneracyExponent& e, const std::vector<double>& x);

/// Finite-volume solution of w_t = (x^alpha w_x)_x + A w on the graded mesh
/// with BDF2 time stepping (backward Euler start). Weak regime: w(t,0) = B h(t);
/// strong regime: (x^alpha w_x)(t,0) = B h(t). w(t,1) = 0. Requires real A, B, h.
MeshFunction fd_forward_oracle(const DegeneracyExponent& e, const CoupledSystem& sys,
                               const MeshFunction& w0, const SampledControl& h, double T,
                               int steps);

}  // namespace degctrl
