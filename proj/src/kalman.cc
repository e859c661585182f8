#include "degctrl/kalman.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include "degctrl/errors.h"

namespace degctrl {
namespace {

bool all_finite(const Mat& M) { return M.allFinite(); }

}  // namespace

CoupledSystem make_system(const Mat& A, const Mat& B, double mu_shift) {
  if (A.rows() == 0 || A.rows() != A.cols()) throw DomainError("coupling matrix must be square and nonempty");
  if (B.rows() != A.rows() || B.cols() == 0) throw DomainError("control matrix must be n x m with m >= 1");
  if (!all_finite(A) || !all_finite(B)) throw DomainError("system matrices must be finite");
  if (!(mu_shift >= 0.0) || !std::isfinite(mu_shift)) throw DomainError("mu_shift must be finite and >= 0");
  CoupledSystem s;
  s.n = static_cast<int>(A.rows());
  s.m = static_cast<int>(B.cols());
  s.A = A;
  s.B = B;
  s.mu_shift = mu_shift;
  return s;
}

std::pair<Mat, Mat> build_blocks(const CoupledSystem& sys, const DegeneracyExponent& e, int k) {
  if (k < 1) throw DomainError("build_blocks: k must be >= 1");
  const auto ms = modes(e, k);
  const int n = sys.n;
  Mat L = Mat::Zero(n * k, n * k);
  Mat Bk(n * k, sys.m);
  for (int j = 0; j < k; ++j) {
    L.block(j * n, j * n, n, n) = sys.A - ms[j].eigenvalue * Mat::Identity(n, n);
    Bk.middleRows(j * n, n) = sys.B;
  }
  return {L, Bk};
}

int kalman_rank(const Mat& L, const Mat& B, double tol) {
  if (!(tol > 0.0)) throw DomainError("kalman_rank: tol must be > 0");
  const int N = static_cast<int>(L.rows());
  if (L.cols() != N || B.rows() != N) throw DomainError("kalman_rank: dimension mismatch");
  if (!L.allFinite() || !B.allFinite()) throw DomainError("kalman_rank: non-finite input");
  if (B.norm() == 0.0) return 0;
  Eigen::BDCSVD<Mat> svd(L);
  const double l_norm = std::max(1.0, svd.singularValues()[0]);

  // Block Arnoldi: every accepted direction is normalized, its image under L is
  // orthogonalized (twice) against the basis and kept only if what remains
  // exceeds tol relative to ||L||.
  Mat Q(N, 0);
  std::deque<std::pair<Vec, double>> queue;
  for (int q = 0; q < B.cols(); ++q) {
    const double nrm = B.col(q).norm();
    if (nrm > 0.0) queue.emplace_back(B.col(q) / nrm, 1.0);
  }
  while (!queue.empty() && Q.cols() < N) {
    auto [v, ref] = queue.front();
    queue.pop_front();
    for (int pass = 0; pass < 2 && Q.cols() > 0; ++pass) v -= Q * (Q.adjoint() * v);
    const double nrm = v.norm();
    if (!std::isfinite(nrm)) throw NumericalError("kalman_rank: non-finite Krylov vector");
    if (nrm <= tol * ref) continue;
    Q.conservativeResize(N, Q.cols() + 1);
    Q.col(Q.cols() - 1) = v / nrm;
    queue.emplace_back(L * Q.col(Q.cols() - 1), l_norm);
  }
  return static_cast<int>(Q.cols());
}

int hautus_deficit(const CoupledSystem& sys, const DegeneracyExponent& e, int k, double tol) {
  const auto ms = modes(e, k);
  const SpectralStructure ss = spectral_structure(sys.A);
  const int n = sys.n;
  std::vector<cplx> eig;  // distinct eigenvalues of L_k
  for (int j = 0; j < k; ++j)
    for (const cplx& nu : ss.eigenvalues) {
      const cplx s = nu - ms[j].eigenvalue;
      bool dup = false;
      for (const cplx& t : eig) dup = dup || std::abs(s - t) <= 1e-8 * (1.0 + std::abs(s));
      if (!dup) eig.push_back(s);
    }
  int deficit = 0;
  for (const cplx& s : eig) {
    std::vector<int> blocks;
    for (int j = 0; j < k; ++j) {
      bool hit = false;
      for (const cplx& nu : ss.eigenvalues)
        hit = hit || std::abs(s - (nu - ms[j].eigenvalue)) <= 1e-8 * (1.0 + std::abs(s));
      if (hit) blocks.push_back(j);
    }
    // Blocks where s is not an eigenvalue are invertible and contribute full rank.
    const int b = static_cast<int>(blocks.size());
    Mat R = Mat::Zero(n * b, n * b + sys.m);
    for (int i = 0; i < b; ++i) {
      R.block(i * n, i * n, n, n) =
          sys.A - (ms[blocks[i]].eigenvalue + s) * Mat::Identity(n, n);
      R.block(i * n, n * b, n, sys.m) = sys.B;
    }
    deficit += n * b - numerical_rank(R, tol);
  }
  return deficit;
}

ControllabilityVerdict check_controllability(const CoupledSystem& sys, const DegeneracyExponent& e,
                                             int K_max, double tol) {
  if (K_max < 1) throw DomainError("check_controllability: K_max must be >= 1");
  ControllabilityVerdict v;
  v.K_max = K_max;
  v.overall = true;
  for (int k = 1; k <= K_max; ++k) {
    const auto [L, Bk] = build_blocks(sys, e, k);
    const int r = kalman_rank(L, Bk, tol);
    const bool ok = r == sys.n * k;
    const bool hautus_ok = hautus_deficit(sys, e, k, tol) == 0;
    if (ok != hautus_ok) {
      std::ostringstream os;
      os << "check_controllability: Kalman (rank " << r << " of " << sys.n * k
         << ") and Hautus tests disagree at k=" << k << "; the problem is too ill-conditioned for tol="
         << tol;
      throw NumericalError(os.str());
    }
    v.per_k.push_back(ok);
    v.rank.push_back(r);
    v.expected.push_back(sys.n * k);
    if (!ok && v.overall) {
      v.overall = false;
      v.first_failure = k;
    }
  }
  std::ostringstream os;
  os << "rank condition verified for k = 1.." << K_max << " only";
  v.note = os.str();
  return v;
}

cplx RearrangedSpectrum::tail(int i) const {
  if (i < 1) throw DomainError("RearrangedSpectrum::tail: i must be >= 1");
  const int j = (i - 1) / p + 1;
  const int l = i - (i - 1) / p * p;
  const int k = K0 + j;
  if (k > static_cast<int>(lambdas.size())) throw DomainError("RearrangedSpectrum::tail: index beyond K_max");
  return lambdas[k - 1] - mu[l - 1];
}

int RearrangedSpectrum::tail_tau(int i) const {
  const int l = i - (i - 1) / p * p;
  return tau[l - 1];
}

std::vector<cplx> RearrangedSpectrum::sequence() const {
  std::vector<cplx> s = gammas;
  const int n_tail = p * (static_cast<int>(lambdas.size()) - K0);
  for (int i = 1; i <= n_tail; ++i) s.push_back(tail(i));
  return s;
}

std::vector<int> RearrangedSpectrum::sequence_tau() const {
  std::vector<int> s = gamma_tau;
  const int n_tail = p * (static_cast<int>(lambdas.size()) - K0);
  for (int i = 1; i <= n_tail; ++i) s.push_back(tail_tau(i));
  return s;
}

RearrangedSpectrum rearrange(const CoupledSystem& sys, const DegeneracyExponent& e, int K_max) {
  if (K_max < 2) throw DomainError("rearrange: K_max must be >= 2");
  RearrangedSpectrum rs;
  rs.exponent = e;
  rs.K_max = K_max;
  const auto ms = modes(e, K_max);
  for (const auto& m : ms) rs.lambdas.push_back(m.eigenvalue);

  // Eigenvalues of the shifted A^*: conjugates of those of A - mu_shift.
  const SpectralStructure ss = spectral_structure(sys.shifted_A().adjoint());
  rs.mu = ss.eigenvalues;
  rs.tau = ss.chain;
  rs.p = ss.size();
  rs.eta = ss.max_chain();
  const int p = rs.p;
  const auto node = [&](int k, int l) { return rs.lambdas[k - 1] - rs.mu[l]; };
  for (int k = 1; k <= K_max; ++k)
    for (int l = 0; l < p; ++l)
      if (node(k, l).real() <= 0.0) {
        std::ostringstream os;
        os << "rearrange: exponent lambda_" << k << " - mu_" << l + 1
           << " has nonpositive real part; increase mu_shift";
        throw DomainError(os.str());
      }

  // k0: last index involved in a collision, plus one.
  const auto close = [](cplx a, cplx b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
  int k0 = 1;
  for (int k = 1; k <= K_max; ++k)
    for (int l = 0; l < p; ++l)
      for (int k2 = k; k2 <= K_max; ++k2)
        for (int l2 = 0; l2 < p; ++l2) {
          if (k2 == k && l2 <= l) continue;
          if (close(node(k, l), node(k2, l2))) k0 = std::max(k0, k2 + 1);
        }
  // k1: ordering |lambda_k - mu_l| <= |lambda_k - mu_{l+1}| from k1 on.
  int k1 = 1;
  for (int k = 1; k <= K_max; ++k)
    for (int l = 0; l + 1 < p; ++l)
      if (std::abs(node(k, l)) > std::abs(node(k, l + 1)) * (1.0 + 1e-14)) k1 = k + 1;
  // k2: |lambda_k - mu_i| <= |lambda_{k+1} - mu_j| from k2 on.
  int k2 = 1;
  for (int k = 1; k < K_max; ++k) {
    double hi = 0.0, lo = INFINITY;
    for (int l = 0; l < p; ++l) {
      hi = std::max(hi, std::abs(node(k, l)));
      lo = std::min(lo, std::abs(node(k + 1, l)));
    }
    if (hi > lo) k2 = k + 1;
  }
  rs.k0 = k0;
  rs.k1 = k1;
  rs.k2 = k2;
  rs.K0 = std::max({k0, k1, k2});
  if (rs.K0 >= K_max) {
    std::ostringstream os;
    os << "rearrange: no valid K0 below K_max=" << K_max << " (k0=" << k0 << ", k1=" << k1
       << ", k2=" << k2 << "); increase K_max";
    throw ConfigError(os.str());
  }

  // Distinct low exponents with their chain lengths.
  struct G { cplx v; int tau; };
  std::vector<G> g;
  for (int k = 1; k <= rs.K0; ++k)
    for (int l = 0; l < p; ++l) {
      const cplx v = node(k, l);
      bool merged = false;
      for (auto& x : g)
        if (close(x.v, v)) {
          x.tau = std::max(x.tau, rs.tau[l]);
          merged = true;
        }
      if (!merged) g.push_back({v, rs.tau[l]});
    }
  std::stable_sort(g.begin(), g.end(), [](const G& a, const G& b) { return std::abs(a.v) < std::abs(b.v); });
  for (const auto& x : g) {
    rs.gammas.push_back(x.v);
    rs.gamma_tau.push_back(x.tau);
  }
  rs.p_tilde = static_cast<int>(g.size());
  return rs;
}

HypothesisReport verify_sequence(const std::vector<cplx>& L, int q) {
  HypothesisReport r;
  const int N = static_cast<int>(L.size());
  r.count = N;
  r.q = std::max(q, 1);
  if (N < 2) throw DomainError("verify_sequence: need at least two exponents");

  r.min_separation = INFINITY;
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) r.min_separation = std::min(r.min_separation, std::abs(L[a] - L[b]));
  double scale = 0.0;
  for (const cplx& z : L) scale = std::max(scale, std::abs(z));
  r.distinct = r.min_separation > 1e-9 * std::max(1.0, scale);

  r.min_real = INFINITY;
  r.beta = 0.0;
  for (const cplx& z : L) {
    r.min_real = std::min(r.min_real, z.real());
    if (z.real() > 0.0) r.beta = std::max(r.beta, std::abs(z.imag()) / std::sqrt(z.real()));
  }
  r.positive_real = r.min_real > 0.0;
  r.imag_bound = r.positive_real && std::isfinite(r.beta);

  r.monotone_modulus = true;
  for (int k = 0; k + 1 < N; ++k)
    if (std::abs(L[k]) > std::abs(L[k + 1]) * (1.0 + 1e-12)) r.monotone_modulus = false;

  r.rho = INFINITY;
  r.near_separation = INFINITY;
  for (int k = 1; k <= N; ++k)
    for (int m = 1; m < k; ++m) {
      const double d = std::abs(L[k - 1] - L[m - 1]);
      if (k - m >= r.q) {
        r.rho = std::min(r.rho, d / (static_cast<double>(k) * k - static_cast<double>(m) * m));
      } else {
        r.near_separation = std::min(r.near_separation, d);
      }
    }
  if (!std::isfinite(r.rho)) r.rho = 0.0;
  r.gap = r.rho > 0.0 && r.near_separation > 0.0 && r.distinct;

  // Counting function: least-squares slope of index vs sqrt(modulus), then the
  // offset varpi needed for -varpi + p1 sqrt(r) <= N(r) <= varpi + p2 sqrt(r).
  double sxx = 0.0, sxy = 0.0;
  for (int k = 1; k <= N; ++k) {
    const double s = std::sqrt(std::abs(L[k - 1]));
    sxx += s * s;
    sxy += s * k;
  }
  const double slope = sxy / sxx;
  r.p1 = r.p2 = slope;
  std::vector<double> mod(N);
  for (int k = 0; k < N; ++k) mod[k] = std::abs(L[k]);
  std::vector<double> sorted = mod;
  std::sort(sorted.begin(), sorted.end());
  r.varpi = 0.0;
  for (int k = 0; k < N; ++k) {
    const double rr = sorted[k];
    const double s = std::sqrt(rr);
    const int at = counting_function(sorted, rr);
    const int below = k;  // value just below the breakpoint
    r.varpi = std::max({r.varpi, std::abs(at - slope * s), std::abs(below - slope * s)});
  }
  r.counting = slope > 0.0 && std::isfinite(r.varpi);
  return r;
}

HypothesisReport verify_hypotheses(const RearrangedSpectrum& rs, int K_max) {
  if (K_max <= rs.K0 || K_max > static_cast<int>(rs.lambdas.size())) {
    throw DomainError("verify_hypotheses: K_max must lie in (K0, rearranged K_max]");
  }
  std::vector<cplx> L = rs.gammas;
  for (int i = 1; i <= rs.p * (K_max - rs.K0); ++i) L.push_back(rs.tail(i));
  return verify_sequence(L, rs.p);
}

}  // namespace degctrl
