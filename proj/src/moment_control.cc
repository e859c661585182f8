#include "degctrl/moment_control.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "degctrl/errors.h"
#include "degctrl/parallel.h"

namespace degctrl {
namespace {

qreal qabs(const qcplx& z) { return abs(z); }

// Series threshold: beyond |sT| > p + kSeriesMargin the upward recurrence is stable.
constexpr int kSeriesMargin = 20;

qcplx integral_series(int p, const qcplx& s, const qreal& T) {
  // gamma(p+1, sT) / s^{p+1} = T^{p+1} e^{-sT} sum_i (sT)^i / ((p+1)...(p+i+1))
  const qcplx x = s * T;
  qcplx term = qcplx(qreal(1) / (p + 1));
  qcplx sum = term;
  for (int i = 1; i < 2000; ++i) {
    term *= x / qreal(p + i + 1);
    sum += term;
    if (qabs(term) <= qreal(1e-36) * qabs(sum) && i > qabs(x)) break;
  }
  qreal Tp1 = 1;
  for (int i = 0; i <= p; ++i) Tp1 *= T;
  return Tp1 * exp(-x) * sum;
}

qcplx integral_recurrence(int p, const qcplx& s, const qreal& T) {
  const qcplx e = exp(-s * T);
  qcplx I = (qcplx(1) - e) / s;
  qreal Tj = 1;
  for (int j = 1; j <= p; ++j) {
    Tj *= T;
    I = (qreal(j) * I - Tj * e) / s;
  }
  return I;
}

struct Index {
  int node;
  int power;
};

std::vector<Index> flatten(const std::vector<MomentNode>& nodes) {
  std::vector<Index> out;
  for (int a = 0; a < static_cast<int>(nodes.size()); ++a)
    for (int s = 0; s < nodes[a].max_power; ++s) out.push_back({a, s});
  return out;
}

QMat full_gram(const std::vector<MomentNode>& nodes, const std::vector<Index>& idx, double T) {
  const int N = static_cast<int>(idx.size());
  QMat G(N, N);
  for (int j = 0; j < N; ++j) {
    for (int c = 0; c < N; ++c) {
      const qcplx s = to_quad(nodes[idx[c].node].Lambda) + to_quad(std::conj(nodes[idx[j].node].Lambda));
      G(j, c) = power_exp_integral(idx[j].power + idx[c].power, s, qreal(T));
    }
  }
  return G;
}

// cond_1 of a square matrix through an LU inverse; +inf if singular.
qreal cond1(const QMat& G, QMat* inverse) {
  Eigen::FullPivLU<QMat> lu(G);
  if (!lu.isInvertible()) return std::numeric_limits<qreal>::infinity();
  QMat inv = lu.inverse();
  const qreal c = norm1(G) * norm1(inv);
  if (inverse) *inverse = std::move(inv);
  return c;
}

qreal factorial(int s) {
  qreal f = 1;
  for (int i = 2; i <= s; ++i) f *= i;
  return f;
}

}  // namespace

qcplx power_exp_integral(int p, const qcplx& s, const qreal& T) {
  if (p < 0) throw DomainError("power_exp_integral: p must be >= 0");
  if (!(T >= 0)) throw DomainError("power_exp_integral: T must be >= 0");
  if (isinf(T)) return power_exp_integral_inf(p, s);
  if (s == qcplx(0)) {
    qreal Tp1 = 1;
    for (int i = 0; i <= p; ++i) Tp1 *= T;
    return qcplx(Tp1 / (p + 1));
  }
  if (qabs(s) * T <= p + kSeriesMargin) return integral_series(p, s, T);
  return integral_recurrence(p, s, T);
}

qcplx power_exp_integral_inf(int p, const qcplx& s) {
  if (!(s.real() > 0)) throw DomainError("power_exp_integral: infinite horizon needs Re s > 0");
  qcplx sp = s;
  for (int i = 0; i < p; ++i) sp *= s;
  return qcplx(factorial(p)) / sp;
}

cplx gram_entry(cplx La, int a, cplx Lb, int b, double T) {
  if (a < 0 || b < 0) throw DomainError("gram_entry: powers must be >= 0");
  const qcplx s = to_quad(La) + to_quad(std::conj(Lb));
  if (std::isinf(T)) {
    if (!(s.real() > 0)) throw DomainError("gram_entry: infinite horizon needs Re(La + conj Lb) > 0");
    return to_double(power_exp_integral_inf(a + b, s));
  }
  return to_double(power_exp_integral(a + b, s, qreal(T)));
}

int MomentSystem::size() const {
  int n = 0;
  for (const auto& nd : nodes) n += nd.max_power;
  return n;
}

cplx BiorthoFamily::eval(int i, double t) const {
  const auto idx = flatten(nodes);
  cplx acc = 0.0;
  for (size_t c = 0; c < idx.size(); ++c) {
    acc += coefficients(c, i) * std::pow(t, idx[c].power) * std::exp(-nodes[idx[c].node].Lambda * t);
  }
  return acc;
}

double BiorthoFamily::norm(int i) const {
  // ||Psi_i||^2 = C_i^* G C_i = (G^{-1})_{ii} for the minimal family.
  const QVec c = coefficients_q.col(i);
  const qcplx v = (c.adjoint() * gram_q * c)(0, 0);
  return std::sqrt(std::max(0.0, static_cast<double>(v.real())));
}

BiorthoFamily build_biortho(const MomentSystem& ms, double cond_cap) {
  if (!(cond_cap > 1.0)) throw DomainError("build_biortho: cond_cap must exceed 1");
  if (ms.nodes.empty()) throw DomainError("build_biortho: no nodes");
  if (!(ms.T > 0.0)) throw DomainError("build_biortho: T must be positive");
  for (size_t a = 0; a < ms.nodes.size(); ++a) {
    if (ms.nodes[a].max_power < 1) throw DomainError("build_biortho: max_power must be >= 1");
    if (!(ms.nodes[a].Lambda.real() > 0.0)) {
      throw DomainError("build_biortho: exponents need positive real part");
    }
    for (size_t b = 0; b < a; ++b) {
      if (ms.nodes[a].Lambda == ms.nodes[b].Lambda) throw DomainError("build_biortho: repeated node");
    }
  }
  const auto idx = flatten(ms.nodes);
  BiorthoFamily fam;
  fam.nodes = ms.nodes;
  fam.T = ms.T;
  fam.gram_q = full_gram(ms.nodes, idx, ms.T);
  QMat inv;
  const qreal cond = cond1(fam.gram_q, &inv);
  if (!(cond <= qreal(cond_cap))) {
    // Largest leading block (whole nodes) under the cap.
    int best = 0, rows = 0;
    for (size_t a = 0; a < ms.nodes.size(); ++a) {
      rows += ms.nodes[a].max_power;
      if (cond1(fam.gram_q.topLeftCorner(rows, rows), nullptr) <= qreal(cond_cap)) {
        best = static_cast<int>(a) + 1;
      } else {
        break;
      }
    }
    std::ostringstream os;
    os << "build_biortho: cond(G) = " << static_cast<double>(cond) << " exceeds cap " << cond_cap
       << "; at most " << best << " nodes pass";
    throw ConditioningError(os.str(), static_cast<double>(cond), best);
  }
  fam.coefficients_q = inv;
  const QMat R = fam.gram_q * inv - QMat::Identity(idx.size(), idx.size());
  qreal res = 0;
  for (Eigen::Index j = 0; j < R.cols(); ++j)
    for (Eigen::Index i = 0; i < R.rows(); ++i) res = std::max(res, qabs(R(i, j)));
  fam.residual = static_cast<double>(res);
  fam.cond_estimate = static_cast<double>(cond);
  fam.gram = to_double(fam.gram_q);
  fam.coefficients = to_double(inv);
  return fam;
}

Vec moment_rhs(const ModalState1D& w0, double T) {
  if (!(T > 0.0)) throw DomainError("moment_rhs: T must be positive");
  const int n = w0.n();
  const Mat Aeff = w0.sys.shifted_A();
  Vec r(n * w0.K());
  for (int k = 0; k < w0.K(); ++k) {
    const double g = w0.modes[k].gain(w0.exponent);
    if (g == 0.0) throw NumericalError("moment_rhs: zero observation trace");
    const Mat L = Aeff - w0.modes[k].eigenvalue * Mat::Identity(n, n);
    r.segment(k * n, n) = -(expm(L * T) * w0.coeffs.col(k)) / g;
  }
  return r;
}

QVec ExpSumControl::eval_q(double t) const {
  QVec out = QVec::Zero(m);
  if (t < 0.0 || t > tau || size() == 0) return out;
  const qreal s = qreal(tau) - qreal(t);
  const qreal scale = exp(qreal(mu) * qreal(t));
  for (int c = 0; c < size(); ++c) {
    qreal sp = 1;
    for (int i = 0; i < r + sigma[c]; ++i) sp *= s;
    const qcplx basis = sp * exp(-beta[c] * s) * scale;
    for (int q = 0; q < m; ++q) out(q) += y(c, q) * basis;
  }
  return out;
}

Vec ExpSumControl::eval(double t) const {
  const QVec v = eval_q(t);
  Vec out(m);
  for (int q = 0; q < m; ++q) out(q) = to_double(v(q));
  return out;
}

SampledControl ExpSumControl::sample(int intervals) const {
  SampledControl h = SampledControl::zeros(T, intervals + 1, m);
  for (int i = 0; i <= intervals; ++i) h.values.col(i) = eval(h.grid[i]);
  return h;
}

double ExpSumControl::l2_norm() const {
  if (size() == 0) return 0.0;
  // |h(t)|^2 = e^{2 mu (tau - s)} |G(s)|^2, s = tau - t.
  qreal acc = 0;
  for (int q = 0; q < m; ++q) {
    for (int c = 0; c < size(); ++c) {
      for (int d = 0; d < size(); ++d) {
        const qcplx s = beta[c] + conj(beta[d]) + qcplx(2 * qreal(mu));
        acc += (y(c, q) * conj(y(d, q)) *
                power_exp_integral(2 * r + sigma[c] + sigma[d], s, qreal(tau))).real();
      }
    }
  }
  acc *= exp(2 * qreal(mu) * qreal(tau));
  return std::sqrt(std::max(0.0, static_cast<double>(acc)));
}

QVec ExpSumControl::moment(int p, const qcplx& E) const {
  QVec out = QVec::Zero(m);
  for (int c = 0; c < size(); ++c) {
    const qcplx I = power_exp_integral(p + r + sigma[c], E + beta[c], qreal(tau));
    for (int q = 0; q < m; ++q) out(q) += y(c, q) * I;
  }
  return out;
}

QVec control_drive(const ExpSumControl& h, const CoupledSystem& sys, const SpectralStructure& ss,
                   double lambda) {
  QVec drive = QVec::Zero(sys.n);
  if (h.size() == 0) return drive;
  for (int l = 0; l < ss.size(); ++l) {
    Mat term = ss.P[l] * sys.B;
    for (int s = 0; s < ss.chain[l]; ++s) {
      if (s > 0) term = ss.N[l] * term / static_cast<double>(s);
      drive += to_quad(term) * h.moment(s, to_quad(cplx(lambda) - ss.eigenvalues[l]));
    }
  }
  return drive * qcplx(exp(qreal(h.mu) * qreal(h.tau)));
}

Vec exact_mode_response(const ExpSumControl& h, const CoupledSystem& sys,
                        const SpectralStructure& ss, double lambda, cplx g, const Vec& c0,
                        double t_end) {
  if (t_end < h.tau) throw DomainError("exact_mode_response: t_end must be >= tau");
  const Mat L = sys.A - lambda * Mat::Identity(sys.n, sys.n);
  Vec c = expm(L * t_end) * c0;
  if (h.size() == 0) return c;
  const Vec drive = to_double(QMat(control_drive(h, sys, ss, lambda)));
  c += g * (expm(L * (t_end - h.tau)) * drive);
  return c;
}

namespace {

struct Layout {
  std::vector<MomentNode> nodes;
  std::vector<Index> idx;
  QMat S;  // (n K) x (|idx| m)
};

// Nodes Lambda_{k,l} = lambda_k - nu_l (merged when equal) and the moment
// equations sum_{l,sigma} N^sigma P_l B / sigma! x_{(k,l),sigma} = r_k.
Layout build_layout(const CoupledSystem& sys, const SpectralStructure& ss,
                    const std::vector<double>& lambda) {
  const int n = sys.n, m = sys.m, K = static_cast<int>(lambda.size());
  Layout lay;
  std::vector<std::vector<int>> node_of(K, std::vector<int>(ss.size()));
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < ss.size(); ++l) {
      const cplx E = lambda[k] - ss.eigenvalues[l];
      if (!(E.real() > 0.0)) {
        std::ostringstream os;
        os << "moment exponent " << E.real() << (E.imag() >= 0 ? "+" : "") << E.imag()
           << "i has nonpositive real part; increase mu_shift";
        throw DomainError(os.str());
      }
      int found = -1;
      for (size_t a = 0; a < lay.nodes.size(); ++a) {
        if (std::abs(lay.nodes[a].Lambda - E) <= 1e-10 * (1.0 + std::abs(E))) found = static_cast<int>(a);
      }
      if (found < 0) {
        lay.nodes.push_back({E, ss.chain[l]});
        found = static_cast<int>(lay.nodes.size()) - 1;
      } else {
        lay.nodes[found].max_power = std::max(lay.nodes[found].max_power, ss.chain[l]);
      }
      node_of[k][l] = found;
    }
  }
  lay.idx = flatten(lay.nodes);
  std::vector<int> offset(lay.nodes.size() + 1, 0);
  for (size_t a = 0; a < lay.nodes.size(); ++a) offset[a + 1] = offset[a] + lay.nodes[a].max_power;
  lay.S = QMat::Zero(n * K, static_cast<Eigen::Index>(lay.idx.size()) * m);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < ss.size(); ++l) {
      Mat term = ss.P[l] * sys.B;
      for (int s = 0; s < ss.chain[l]; ++s) {
        if (s > 0) term = ss.N[l] * term / static_cast<double>(s);
        const int col = (offset[node_of[k][l]] + s) * m;
        lay.S.block(k * n, col, n, m) += to_quad(term);
      }
    }
  }
  return lay;
}

double retained_ratio(const ModalState1D& final_state, const ModalState1D& w0) {
  const double n0 = norm_hm1_1d(w0);
  return n0 > 0.0 ? norm_hm1_1d(final_state) / n0 : 0.0;
}

}  // namespace

MomentSolve solve_moment_problem(const CoupledSystem& sys, const SpectralStructure& ss,
                                 const std::vector<double>& lambda, const std::vector<double>& gain,
                                 const Mat& c0, double T, double tau, int weight_power,
                                 double cond_cap) {
  const int n = sys.n, m = sys.m, K = static_cast<int>(lambda.size());
  if (static_cast<int>(gain.size()) != K || c0.cols() != K || c0.rows() != n) {
    throw DomainError("solve_moment_problem: inconsistent sizes");
  }
  if (!(tau > 0.0 && tau <= T)) throw DomainError("solve_moment_problem: need 0 < tau <= T");
  MomentSolve out;
  ExpSumControl& ctl = out.control;
  ctl.T = T;
  ctl.tau = tau;
  ctl.mu = sys.mu_shift;
  ctl.r = weight_power;
  ctl.m = m;
  if (K == 0 || c0.norm() == 0.0) {
    ctl.y = QMat::Zero(0, m);
    return out;
  }
  const Layout lay = build_layout(sys, ss, lambda);
  const int N = static_cast<int>(lay.idx.size());
  ctl.beta.resize(N);
  ctl.sigma.resize(N);
  for (int c = 0; c < N; ++c) {
    ctl.beta[c] = to_quad(std::conj(lay.nodes[lay.idx[c].node].Lambda));
    ctl.sigma[c] = lay.idx[c].power;
  }

  // r_k = -e^{(A_eff - lambda_k) tau} c_k / g_k: the state must vanish at tau.
  const Mat Aeff = sys.shifted_A();
  QVec R(n * K);
  for (int k = 0; k < K; ++k) {
    if (gain[k] == 0.0) throw NumericalError("solve_moment_problem: zero observation trace");
    const Mat L = Aeff - lambda[k] * Mat::Identity(n, n);
    R.segment(k * n, n) = to_quad(Mat(-(expm(L * tau) * c0.col(k)) / gain[k]));
  }
  const QMat SS = lay.S * lay.S.adjoint();
  Eigen::FullPivLU<QMat> lu_s(SS);
  if (!lu_s.isInvertible()) throw ControllabilityError("moment equations are rank deficient");
  const QVec x = lay.S.adjoint() * lu_s.solve(R);
  const QVec defect = lay.S * x - R;
  qreal dmax = 0, rmax = 0;
  for (Eigen::Index i = 0; i < R.size(); ++i) {
    dmax = std::max(dmax, qabs(defect(i)));
    rmax = std::max(rmax, qabs(R(i)));
  }
  out.moment_residual = rmax > 0 ? static_cast<double>(dmax / rmax) : 0.0;

  // W(i, c) = int_0^tau s^{sigma_i} e^{-E_i s} s^{r + sigma_c} e^{-beta_c s} ds.
  QMat W(N, N);
  for (int i = 0; i < N; ++i) {
    const qcplx E = to_quad(lay.nodes[lay.idx[i].node].Lambda);
    for (int c = 0; c < N; ++c) {
      W(i, c) = power_exp_integral(lay.idx[i].power + ctl.r + ctl.sigma[c], E + ctl.beta[c], qreal(tau));
    }
  }
  QMat Winv;
  const qreal cond = cond1(W, &Winv);
  out.cond = static_cast<double>(cond);
  if (!(cond <= qreal(cond_cap))) {
    std::ostringstream os;
    os << "moment Gram cond " << out.cond << " exceeds cap " << cond_cap << " with " << K
       << " modes; reduce the truncation";
    throw ConditioningError(os.str(), out.cond, -1);
  }
  ctl.y = QMat::Zero(N, m);
  for (int q = 0; q < m; ++q) {
    QVec xq(N);
    for (int c = 0; c < N; ++c) xq(c) = x(c * m + q);
    ctl.y.col(q) = Winv * xq;
  }
  return out;
}

SynthesisResult synthesize_control(const ModalState1D& w0, double T, const SynthesisOptions& opt) {
  if (!(T > 0.0)) throw DomainError("synthesize_control: T must be positive");
  if (!(opt.theta > 0.0 && opt.theta <= 1.0)) throw DomainError("synthesize_control: theta must lie in (0, 1]");
  if (opt.weight_power < 0) throw DomainError("synthesize_control: weight_power must be >= 0");
  const CoupledSystem& sys = w0.sys;
  const int K = w0.K();

  const ControllabilityVerdict verdict = check_controllability(sys, w0.exponent, K);
  if (!verdict.overall) {
    const int f = verdict.first_failure;
    std::ostringstream os;
    os << "Kalman condition fails at k = " << f << " (rank " << verdict.rank[f - 1] << " < "
       << verdict.expected[f - 1] << ")";
    throw ControllabilityError(os.str());
  }

  const SpectralStructure ss = spectral_structure(sys.shifted_A());
  std::vector<double> lambda(K), gain(K);
  double lambda_max = 1.0;
  for (int k = 0; k < K; ++k) {
    lambda[k] = w0.modes[k].eigenvalue;
    gain[k] = w0.modes[k].gain(w0.exponent);
    for (int l = 0; l < ss.size(); ++l) {
      lambda_max = std::max(lambda_max, std::abs(lambda[k] - ss.eigenvalues[l]) + std::abs(sys.mu_shift));
    }
  }
  int intervals = std::max(opt.min_samples - 1,
                           static_cast<int>(std::ceil(T * lambda_max / opt.sample_resolution)));

  SynthesisResult res;
  for (int attempt = 0; attempt <= opt.max_refinements; ++attempt) {
    // tau sits on a sample so that the kink of h at tau is a grid point.
    const int tau_index = std::max(1, static_cast<int>(std::lround(opt.theta * intervals)));
    const double tau = T * tau_index / intervals;
    MomentSolve ms = solve_moment_problem(sys, ss, lambda, gain, w0.coeffs, T, tau,
                                          opt.weight_power, opt.cond_cap);
    res.exact = std::move(ms.control);
    res.cond = ms.cond;
    res.moment_residual = ms.moment_residual;

    ModalState1D exact_final = w0;
    for (int k = 0; k < K; ++k) {
      exact_final.coeffs.col(k) =
          exact_mode_response(res.exact, sys, ss, lambda[k], gain[k], w0.coeffs.col(k), T);
    }
    res.exact_ratio = retained_ratio(exact_final, w0);
    res.h = res.exact.sample(intervals);
    res.samples = intervals + 1;
    res.l2_norm = res.exact.l2_norm();
    const SpectralMode next = mode(w0.exponent, K + 1);
    res.tail_bound = std::exp(-(next.eigenvalue - sys.A.norm()) * (T - tau));
    if (!opt.verify || w0.coeffs.norm() == 0.0) {
      res.sampled_ratio = res.exact_ratio;
      return res;
    }
    res.sampled_ratio = retained_ratio(modal_forward(w0, res.h, T), w0);
    if (res.sampled_ratio <= opt.tolerance && res.exact_ratio <= opt.tolerance) return res;
    intervals *= 2;
  }
  std::ostringstream os;
  os << "synthesize_control: retained-mode ratio " << res.sampled_ratio << " (exact "
     << res.exact_ratio << ") above tolerance " << opt.tolerance << " after refinement";
  throw NumericalError(os.str());
}

std::vector<CostPoint> cost_curve(const ModalState1D& w0, const std::vector<double>& T_list,
                                  const SynthesisOptions& opt) {
  for (double T : T_list) {
    if (!(T > 0.0)) throw DomainError("cost_curve: all horizons must be positive");
  }
  std::vector<CostPoint> out(T_list.size());
  parallel_for(static_cast<int>(T_list.size()), [&](int i) {
    CostPoint& p = out[i];
    p.T = T_list[i];
    try {
      p.norm = synthesize_control(w0, p.T, opt).l2_norm;
      p.ok = true;
    } catch (const ConditioningError& e) {
      p.norm = std::numeric_limits<double>::quiet_NaN();
      p.note = e.what();
    }
  });
  return out;
}

}  // namespace degctrl
