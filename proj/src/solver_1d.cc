#include "degctrl/solver_1d.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "degctrl/errors.h"
#include "degctrl/parallel.h"

namespace degctrl {
namespace {

// 5-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 5> kGaussNode = {
    0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155, 0.95308992296933200};
constexpr std::array<double, 5> kGaussWeight = {
    0.11846344252809454, 0.23931433524968324, 0.28444444444444444, 0.23931433524968324,
    0.11846344252809454};

Mat mode_operator(const CoupledSystem& sys, double lambda) {
  return sys.A - lambda * Mat::Identity(sys.n, sys.n);
}

// On one grid interval the interpolant is a cubic; B h(a + u len) = sum_j c_j u^j
// is recovered from four interior values.
constexpr std::array<double, 4> kFitNode = {0.125, 0.375, 0.625, 0.875};

std::array<Vec, 4> input_cubic(const CoupledSystem& sys, const SampledControl& h, double a,
                               double len) {
  static const Eigen::Matrix4d inverse_vandermonde = [] {
    Eigen::Matrix4d V;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) V(i, j) = std::pow(kFitNode[i], j);
    return Eigen::Matrix4d(V.inverse());
  }();
  std::array<Vec, 4> v, c;
  for (int i = 0; i < 4; ++i) v[i] = sys.B * h.eval(a + kFitNode[i] * len);
  for (int j = 0; j < 4; ++j) {
    c[j] = Vec::Zero(sys.n);
    for (int i = 0; i < 4; ++i) c[j] += inverse_vandermonde(j, i) * v[i];
  }
  return c;
}

std::vector<std::array<Vec, 4>> sample_input(const CoupledSystem& sys, const SampledControl& h) {
  const int intervals = h.samples() - 1;
  std::vector<std::array<Vec, 4>> out(std::max(intervals, 0));
  for (int i = 0; i < intervals; ++i) out[i] = input_cubic(sys, h, h.grid[i], h.dt());
  return out;
}

// P_j = int_0^len e^{L (len - s)} (s / len)^j ds, j = 0..3, read off the
// exponential of the block matrix [[L len, I, 0, 0, 0], [0, 0, I, 0, 0], ...].
std::array<Mat, 4> power_kernels(const Mat& L, double len) {
  const int n = static_cast<int>(L.rows());
  Mat M = Mat::Zero(5 * n, 5 * n);
  M.topLeftCorner(n, n) = L * len;
  for (int b = 0; b < 4; ++b) M.block(b * n, (b + 1) * n, n, n) = Mat::Identity(n, n);
  const Mat E = expm(M);
  std::array<Mat, 4> P;
  double factorial = 1.0;
  for (int j = 0; j < 4; ++j) {
    if (j > 0) factorial *= j;
    P[j] = (len * factorial) * E.block(0, (j + 1) * n, n, n);
  }
  return P;
}

Vec apply_kernels(const std::array<Mat, 4>& P, const std::array<Vec, 4>& c) {
  Vec acc = P[0] * c[0];
  for (int j = 1; j < 4; ++j) acc += P[j] * c[j];
  return acc;
}

// int_a^b e^{L (b - s)} B h(s) ds for a sub-piece of one interval.
Vec piece_integral(const Mat& L, const CoupledSystem& sys, const SampledControl& h, double a,
                   double b) {
  return apply_kernels(power_kernels(L, b - a), input_cubic(sys, h, a, b - a));
}

}  // namespace

ModalState1D make_state_1d(const CoupledSystem& sys, const DegeneracyExponent& e, int K) {
  if (K < 1) throw DomainError("make_state_1d: K must be >= 1");
  ModalState1D s;
  s.exponent = e;
  s.sys = sys;
  s.modes = modes(e, K);
  s.coeffs = Mat::Zero(sys.n, K);
  return s;
}

SampledControl SampledControl::zeros(double T, int samples, int m) {
  if (!(T > 0.0) || samples < 2 || m < 1) {
    throw DomainError("SampledControl: need T > 0, at least 2 samples and m >= 1");
  }
  SampledControl h;
  h.T = T;
  h.grid.resize(samples);
  for (int i = 0; i < samples; ++i) h.grid[i] = T * i / (samples - 1);
  h.values = Mat::Zero(m, samples);
  return h;
}

Vec SampledControl::eval(double t) const {
  const int N = samples();
  if (N == 0 || t < 0.0 || t > T) return Vec::Zero(m());
  if (N == 1) return values.col(0);
  const double d = dt();
  const int i = std::clamp(static_cast<int>(std::floor(t / d)), 0, N - 2);
  const int p = std::min(4, N);
  const int s = std::clamp(i - 1, 0, N - p);
  const double u = (t - grid[s]) / d;
  Vec out = Vec::Zero(m());
  for (int a = 0; a < p; ++a) {
    double w = 1.0;
    for (int b = 0; b < p; ++b) {
      if (b != a) w *= (u - b) / static_cast<double>(a - b);
    }
    out += w * values.col(s + a);
  }
  return out;
}

double SampledControl::l2_norm() const {
  const int N = samples();
  if (N < 2) return 0.0;
  const double d = dt();
  double acc = 0.0;
  for (int i = 0; i + 1 < N; ++i) {
    for (int q = 0; q < 5; ++q) {
      acc += kGaussWeight[q] * d * eval(grid[i] + kGaussNode[q] * d).squaredNorm();
    }
  }
  return std::sqrt(acc);
}

double SampledControl::sup_norm() const {
  double best = 0.0;
  for (int i = 0; i < samples(); ++i) best = std::max(best, values.col(i).norm());
  return best;
}

ModalState1D modal_forward(const ModalState1D& w0, const SampledControl& h, double T) {
  if (!(T > 0.0)) throw DomainError("modal_forward: T must be positive");
  return modal_forward(w0, h, 0.0, T);
}

ModalState1D modal_forward(const ModalState1D& w0, const SampledControl& h, double t0,
                           double t1) {
  if (!(t1 >= t0)) throw DomainError("modal_forward: need t1 >= t0");
  if (h.samples() == 0 && t1 > t0) throw DomainError("modal_forward: empty control grid");
  if (h.m() != w0.sys.m) throw DomainError("modal_forward: control has wrong channel count");
  const CoupledSystem& sys = w0.sys;
  const int N = h.samples();
  const double dt = h.dt();
  const double active_end = std::min(t1, h.T);

  // Intervals of the control grid that lie completely inside [t0, active_end].
  int first_full = 0, last_full = -1;
  if (N >= 2 && active_end > t0) {
    first_full = static_cast<int>(std::ceil(t0 / dt - 1e-12));
    last_full = static_cast<int>(std::floor(active_end / dt + 1e-12)) - 1;
    last_full = std::min(last_full, N - 2);
  }
  const bool has_full = last_full >= first_full;
  std::vector<std::array<Vec, 4>> bh;
  if (has_full) bh = sample_input(sys, h);

  ModalState1D out = w0;
  parallel_for(w0.K(), [&](int k) {
    const SpectralMode& md = w0.modes[k];
    const Mat L = mode_operator(sys, md.eigenvalue);
    const double g = md.gain(w0.exponent);
    Vec c = w0.coeffs.col(k);
    double t = t0;
    auto advance_piece = [&](double a, double b) {
      c = expm(L * (b - a)) * c + g * piece_integral(L, sys, h, a, b);
      t = b;
    };
    if (!has_full) {
      if (active_end > t0 && N >= 2) {
        // Whole window inside (at most two) partial intervals.
        double a = t0;
        while (a < active_end) {
          const int i = std::clamp(static_cast<int>(std::floor(a / dt)), 0, N - 2);
          const double b = std::min(active_end, h.grid[i + 1]);
          if (b <= a) break;
          advance_piece(a, b);
          a = b;
        }
      }
    } else {
      const double a_full = h.grid[first_full];
      if (a_full > t0) advance_piece(t0, a_full);
      const Mat step = expm(L * dt);
      const std::array<Mat, 4> kernel = power_kernels(L, dt);
      for (int i = first_full; i <= last_full; ++i) c = step * c + g * apply_kernels(kernel, bh[i]);
      t = h.grid[last_full + 1];
      if (active_end > t) advance_piece(t, active_end);
    }
    if (t1 > t) c = expm(L * (t1 - t)) * c;
    out.coeffs.col(k) = c;
  });
  return out;
}

ObservationTrace adjoint_solve(const ModalState1D& vT, double T, int samples) {
  if (!(T > 0.0)) throw DomainError("adjoint_solve: T must be positive");
  if (samples < 2) throw DomainError("adjoint_solve: need at least 2 samples");
  const CoupledSystem& sys = vT.sys;
  ObservationTrace tr;
  tr.t.resize(samples);
  for (int i = 0; i < samples; ++i) tr.t[i] = T * i / (samples - 1);
  const double dt = T / (samples - 1);
  std::vector<Mat> per_mode(vT.K());
  parallel_for(vT.K(), [&](int k) {
    const SpectralMode& md = vT.modes[k];
    const Mat Ls = mode_operator(sys, md.eigenvalue).adjoint();
    const Mat step = expm(Ls * dt);
    Mat y(sys.m, samples);
    Vec v = vT.coeffs.col(k);
    for (int i = samples - 1; i >= 0; --i) {
      y.col(i) = md.obs_trace * (sys.B.adjoint() * v);
      if (i > 0) v = step * v;
    }
    per_mode[k] = std::move(y);
  });
  tr.values = Mat::Zero(sys.m, samples);
  for (const Mat& y : per_mode) tr.values += y;
  return tr;
}

ModalState1D adjoint_state(const ModalState1D& vT, double T, double t) {
  ModalState1D out = vT;
  for (int k = 0; k < vT.K(); ++k) {
    const Mat Ls = mode_operator(vT.sys, vT.modes[k].eigenvalue).adjoint();
    out.coeffs.col(k) = expm(Ls * (T - t)) * vT.coeffs.col(k);
  }
  return out;
}

cplx modal_inner(const ModalState1D& a, const ModalState1D& b) {
  if (a.coeffs.rows() != b.coeffs.rows() || a.coeffs.cols() != b.coeffs.cols()) {
    throw DomainError("modal_inner: shape mismatch");
  }
  cplx acc = 0.0;
  for (int k = 0; k < a.K(); ++k) acc += b.coeffs.col(k).dot(a.coeffs.col(k));
  return acc;
}

double norm_l2_1d(const ModalState1D& s) { return s.coeffs.norm(); }

double norm_h1_1d(const ModalState1D& s) {
  double acc = 0.0;
  for (int k = 0; k < s.K(); ++k) acc += s.modes[k].eigenvalue * s.coeffs.col(k).squaredNorm();
  return std::sqrt(acc);
}

double norm_hm1_1d(const ModalState1D& s) {
  double acc = 0.0;
  for (int k = 0; k < s.K(); ++k) acc += s.coeffs.col(k).squaredNorm() / s.modes[k].eigenvalue;
  return std::sqrt(acc);
}

std::vector<double> fd_mesh(const DegeneracyExponent& e, int M) {
  if (M < 1) throw DomainError("fd_mesh: M must be >= 1");
  const double q = std::max(3.0, 1.0 / e.kappa);
  std::vector<double> x(M + 1);
  for (int i = 0; i <= M; ++i) x[i] = std::pow(static_cast<double>(i) / M, q);
  x[M] = 1.0;
  return x;
}

MeshFunction to_mesh(const ModalState1D& s, int M) { return to_mesh(s, fd_mesh(s.exponent, M)); }

MeshFunction to_mesh(const ModalState1D& s, const std::vector<double>& x) {
  MeshFunction f;
  f.x = x;
  const int P = static_cast<int>(x.size());
  f.values = Eigen::MatrixXd::Zero(s.n(), P);
  for (int k = 0; k < s.K(); ++k) {
    const Eigen::VectorXd c = s.coeffs.col(k).real();
    for (int i = 0; i < P; ++i) {
      f.values.col(i) += eigenfunction_eval_closed(s.exponent, s.modes[k], f.x[i]) * c;
    }
  }
  return f;
}

double mesh_l2_norm(const MeshFunction& f) {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < f.x.size(); ++i) {
    const double hx = f.x[i + 1] - f.x[i];
    acc += 0.5 * hx * (f.values.col(i).squaredNorm() + f.values.col(i + 1).squaredNorm());
  }
  return std::sqrt(acc);
}

FvOperator1D fv_operator_1d(const DegeneracyExponent& e, const std::vector<double>& x) {
  const int M = static_cast<int>(x.size()) - 1;
  if (M < 2) throw DomainError("fv_operator_1d: need at least 2 mesh intervals");
  FvOperator1D op;
  op.first = e.regime == Regime::kWeak ? 1 : 0;
  op.x = x;
  op.conductance.resize(M);
  for (int i = 0; i < M; ++i) {
    op.conductance[i] = std::pow(0.5 * (x[i] + x[i + 1]), e.alpha) / (x[i + 1] - x[i]);
  }
  const int nodes = M - op.first;
  op.volume.resize(nodes);
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < nodes; ++r) {
    const int i = r + op.first;
    op.volume(r) = i == 0 ? 0.5 * (x[1] - x[0]) : 0.5 * (x[i + 1] - x[i - 1]);
    double diag = op.conductance[i];
    if (i > 0) diag += op.conductance[i - 1];
    trip.emplace_back(r, r, diag);
    if (r > 0) trip.emplace_back(r, r - 1, -op.conductance[i - 1]);
    if (r + 1 < nodes) trip.emplace_back(r, r + 1, -op.conductance[i]);
  }
  op.stiffness.resize(nodes, nodes);
  op.stiffness.setFromTriplets(trip.begin(), trip.end());
  return op;
}

MeshFunction fd_forward_oracle(const DegeneracyExponent& e, const CoupledSystem& sys,
                               const MeshFunction& w0, const SampledControl& h, double T,
                               int steps) {
  const int M = static_cast<int>(w0.x.size()) - 1;
  if (M < 500) throw DomainError("fd_forward_oracle: need at least 500 mesh intervals");
  if (!(T > 0.0) || steps < 1) throw DomainError("fd_forward_oracle: need T > 0 and steps >= 1");
  if (sys.A.imag().norm() > 0.0 || sys.B.imag().norm() > 0.0) {
    throw DomainError("fd_forward_oracle: A and B must be real");
  }
  const int n = sys.n;
  const Eigen::MatrixXd A = sys.A.real();
  const Eigen::MatrixXd B = sys.B.real();
  const FvOperator1D op = fv_operator_1d(e, w0.x);
  const bool weak = e.regime == Regime::kWeak;
  const int first = op.first;
  const int nodes = op.size();
  const int dim = nodes * n;

  // V w' = S w + f(t), S = -stiffness (x) I + V (x) A; unknowns interleaved by node.
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd V(dim);
  for (int k = 0; k < op.stiffness.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.stiffness, k); it; ++it) {
      for (int a = 0; a < n; ++a) trip.emplace_back(it.row() * n + a, it.col() * n + a, -it.value());
    }
  }
  for (int r = 0; r < nodes; ++r) {
    for (int a = 0; a < n; ++a) {
      V(r * n + a) = op.volume(r);
      for (int b = 0; b < n; ++b) {
        if (A(a, b) != 0.0) trip.emplace_back(r * n + a, r * n + b, op.volume(r) * A(a, b));
      }
    }
  }
  Eigen::SparseMatrix<double> S(dim, dim);
  S.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> Vm(dim, dim);
  {
    std::vector<Eigen::Triplet<double>> vt;
    for (int r = 0; r < dim; ++r) vt.emplace_back(r, r, V(r));
    Vm.setFromTriplets(vt.begin(), vt.end());
  }

  auto boundary = [&](double t) -> Eigen::VectorXd { return B * h.eval(t).real(); };
  auto source = [&](double t) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(dim);
    const Eigen::VectorXd bh = boundary(t);
    // Weak: Dirichlet datum enters through the face conductance at x_{1/2}.
    // Strong: prescribed flux x^alpha w_x = B h leaves the first cell.
    const double w = weak ? op.conductance[0] : -1.0;
    for (int a = 0; a < n; ++a) f(a) = w * bh(a);
    return f;
  };

  Eigen::VectorXd u(dim);
  for (int r = 0; r < nodes; ++r) u.segment(r * n, n) = w0.values.col(r + first);
  const double dt = T / steps;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> be, bdf;
  be.compute(Eigen::SparseMatrix<double>(Vm - dt * S));
  bdf.compute(Eigen::SparseMatrix<double>(3.0 * Vm - 2.0 * dt * S));
  if (be.info() != Eigen::Success || bdf.info() != Eigen::Success) {
    throw NumericalError("fd_forward_oracle: factorization failed");
  }
  Eigen::VectorXd prev = u;
  u = be.solve(V.cwiseProduct(u) + dt * source(dt));
  for (int s = 2; s <= steps; ++s) {
    Eigen::VectorXd rhs = 4.0 * V.cwiseProduct(u) - V.cwiseProduct(prev) + 2.0 * dt * source(s * dt);
    prev = u;
    u = bdf.solve(rhs);
    if (!u.allFinite()) {
      std::ostringstream os;
      os << "fd_forward_oracle: non-finite state at step " << s;
      throw NumericalError(os.str());
    }
  }

  MeshFunction out;
  out.x = w0.x;
  out.values = Eigen::MatrixXd::Zero(n, M + 1);
  for (int r = 0; r < nodes; ++r) out.values.col(r + first) = u.segment(r * n, n);
  if (weak) out.values.col(0) = boundary(T);
  return out;
}

}  // namespace degctrl
