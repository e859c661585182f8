#include "degctrl/lr_controller.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include "degctrl/errors.h"
#include "degctrl/parallel.h"
#include "degctrl/solver_1d.h"

namespace degctrl {

ModalState2D make_state_2d(const CoupledSystem& sys, const DegeneracyExponent& ex,
                           const DegeneracyExponent& ey, int K, int J) {
  if (K < 1 || J < 1) throw DomainError("make_state_2d: K and J must be >= 1");
  ModalState2D u;
  u.ex = ex;
  u.ey = ey;
  u.sys = sys;
  u.xmodes = modes(ex, K);
  u.ymodes = modes(ey, J);
  u.coeffs = Mat::Zero(sys.n, K * J);
  return u;
}

namespace {

double weighted_norm(const ModalState2D& u, double power, int J_max) {
  double acc = 0.0;
  for (int k = 1; k <= u.K(); ++k) {
    for (int j = 1; j <= std::min(J_max, u.J()); ++j) {
      acc += std::pow(u.eigenvalue(k, j), power) * u.col(k, j).squaredNorm();
    }
  }
  return std::sqrt(acc);
}

}  // namespace

double norm_l2_2d(const ModalState2D& u) { return u.coeffs.norm(); }
double norm_h1_2d(const ModalState2D& u) { return weighted_norm(u, 1.0, u.J()); }
double norm_hm1_2d(const ModalState2D& u) { return weighted_norm(u, -1.0, u.J()); }
double projected_norm_hm1_2d(const ModalState2D& u, int J) { return weighted_norm(u, -1.0, J); }

double LRSchedule::tail_time() const {
  if (intervals.empty()) return T;
  const LRInterval& last = intervals.back();
  return std::max(0.0, T - (last.a + 2.0 * last.T));
}

LRSchedule make_schedule(double T, double rho, int beta, int K_stop) {
  if (!(T > 0.0)) throw DomainError("make_schedule: T must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("make_schedule: rho must lie in (0, 1)");
  if (beta < 1) throw DomainError("make_schedule: beta must be >= 1");
  if (K_stop < 1 || K_stop > 30) throw DomainError("make_schedule: K_stop must lie in [1, 30]");
  LRSchedule s;
  s.T = T;
  s.rho = rho;
  s.beta = beta;
  s.K_stop = K_stop;
  s.alpha_hat = beta * T * (1.0 - std::pow(2.0, -rho)) / 2.0;
  const double T0 = s.alpha_hat / beta;
  double a = 0.0;
  for (int k = 0; k < K_stop; ++k) {
    LRInterval iv;
    iv.a = a;
    iv.T = T0 * std::pow(2.0, -k * rho);
    iv.gamma = beta * (1 << k);
    s.intervals.push_back(iv);
    a += 2.0 * iv.T;
  }
  // 2 sum_{k >= 0} T_k = 2 T0 / (1 - 2^{-rho}).
  s.identity_error = std::abs(2.0 * T0 / (1.0 - std::pow(2.0, -rho)) - T);
  return s;
}

int default_beta(double T, double rho0) {
  if (!(T > 0.0) || !(rho0 > 0.0)) throw DomainError("default_beta: need T > 0 and rho0 > 0");
  return std::max(1, static_cast<int>(std::ceil(rho0 / T - 1e-12)));
}

int auto_k_stop(double rho, int beta, double target) {
  if (!(target > 0.0 && target < 1.0)) throw DomainError("auto_k_stop: target must lie in (0, 1)");
  for (int k = 1; k <= 30; ++k) {
    if (-beta * std::pow(2.0, k * (2.0 - rho)) <= std::log(target)) return k;
  }
  return 30;
}

SpectralFit spectral_inequality_fit(const DegeneracyExponent& ey, double a, double b,
                                    const std::vector<int>& J_list) {
  if (J_list.empty()) throw DomainError("spectral_inequality_fit: empty J list");
  for (size_t i = 1; i < J_list.size(); ++i) {
    if (J_list[i] <= J_list[i - 1]) throw DomainError("spectral_inequality_fit: J list must increase");
  }
  SpectralFit fit;
  fit.J = J_list;
  const std::vector<SpectralMode> md = modes(ey, J_list.back());
  fit.sigma_min = leading_sigma_min(ey, a, b, J_list);
  for (size_t i = 0; i < J_list.size(); ++i) {
    fit.lambda.push_back(md[J_list[i] - 1].eigenvalue);
    fit.m.push_back(-std::log(fit.sigma_min[i]));
  }
  const int P = static_cast<int>(J_list.size());
  double mmax = 1.0;
  for (int i = 0; i < P; ++i) {
    const double r = std::sqrt(fit.lambda[i]);
    fit.C = std::max(fit.C, fit.m[i] / (r + 1.0));
    mmax = std::max(mmax, fit.m[i]);
  }
  if (P >= 2) {
    Eigen::MatrixXd X(P, 2);
    Eigen::VectorXd y(P);
    for (int i = 0; i < P; ++i) {
      X(i, 0) = std::sqrt(fit.lambda[i]);
      X(i, 1) = 1.0;
      y(i) = fit.m[i];
    }
    const Eigen::VectorXd c = X.colPivHouseholderQr().solve(y);
    fit.slope = c(0);
    fit.intercept = c(1);
  } else {
    fit.slope = fit.m[0] / std::sqrt(fit.lambda[0]);
  }
  for (int i = 0; i < P; ++i) {
    const double pred = fit.slope * std::sqrt(fit.lambda[i]) + fit.intercept;
    fit.residual.push_back(std::abs(fit.m[i] - pred) / mmax);
    fit.max_residual = std::max(fit.max_residual, fit.residual.back());
  }
  return fit;
}

namespace {

// Rows of the effective-input map: identity for j <= gamma, G[j, :gamma] G_gamma^{-1} beyond.
QMat input_map(const RestrictionGram& gram, int J, int gamma, QMat* Ginv) {
  const QMat Gg = gram.Gq.topLeftCorner(gamma, gamma);
  *Ginv = Eigen::FullPivLU<QMat>(Gg).inverse();
  QMat W = QMat::Zero(J, gamma);
  for (int j = 0; j < gamma; ++j) W(j, j) = qcplx(1);
  if (J > gamma) W.bottomRows(J - gamma) = gram.Gq.block(gamma, 0, J - gamma, gamma) * *Ginv;
  return W;
}

// int_0^tau g_j(t)^* g_i(t) dt summed over channels.
qcplx cross_integral(const ExpSumControl& gj, const ExpSumControl& gi) {
  qcplx acc = 0;
  const qreal two_mu = 2 * qreal(gj.mu);
  for (int q = 0; q < gj.m; ++q) {
    for (int c = 0; c < gj.size(); ++c) {
      for (int d = 0; d < gi.size(); ++d) {
        const qcplx s = conj(gj.beta[c]) + gi.beta[d] + qcplx(two_mu);
        acc += conj(gj.y(c, q)) * gi.y(d, q) *
               power_exp_integral(gj.r + gi.r + gj.sigma[c] + gi.sigma[d], s, qreal(gj.tau));
      }
    }
  }
  return acc * qcplx(exp(two_mu * qreal(gj.tau)));
}

}  // namespace

Mat StepResult::control_at(double t, const std::vector<double>& y, const DegeneracyExponent& ey,
                           const std::vector<SpectralMode>& ymodes,
                           const RestrictionGram& gram) const {
  const int m = u_next.sys.m;
  Mat out = Mat::Zero(m, y.size());
  if (gamma == 0 || g.empty()) return out;
  // h(t) = G_gamma^{-1} g(t) per channel.
  QMat gv(gamma, m);
  for (int j = 0; j < gamma; ++j) gv.row(j) = g[j].eval_q(t).transpose();
  const Mat h = to_double(QMat(Ginv * gv));
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] < gram.a || y[i] > gram.b || y[i] <= 0.0) continue;
    for (int j = 0; j < gamma; ++j) {
      out.col(i) += eigenfunction_eval(ey, ymodes[j], y[i]) * h.row(j).transpose();
    }
  }
  return out;
}

StepResult control_step(const ModalState2D& u, double a, double T, int gamma,
                        const RestrictionGram& gram, const StepOptions& opt) {
  if (!(T > 0.0)) throw DomainError("control_step: T must be positive");
  if (gamma < 0) throw DomainError("control_step: gamma must be >= 0");
  if (gram.J < u.J()) throw DomainError("control_step: restriction Gram smaller than J");
  const CoupledSystem& sys = u.sys;
  const int K = u.K(), J = u.J(), n = u.n();
  const int gam = std::min(gamma, J);
  const double theta = opt.synth.theta;
  const double tau = theta * T;

  StepResult res;
  res.gamma = gam;
  res.a = a;
  res.T = T;
  res.tau = tau;
  res.norm_before = norm_hm1_2d(u);
  res.u_next = u;
  if (gam == 0) {
    res.u_next = free_evolve(u, T);
    res.norm_after = norm_hm1_2d(res.u_next);
    return res;
  }

  const ControllabilityVerdict verdict = check_controllability(sys, u.ex, K);
  if (!verdict.overall) {
    std::ostringstream os;
    os << "control_step: Kalman condition fails at k = " << verdict.first_failure;
    throw ControllabilityError(os.str());
  }
  const SpectralStructure ss = spectral_structure(sys.shifted_A());
  const QMat W = input_map(gram, J, gam, &res.Ginv);

  std::vector<double> gain(K);
  for (int k = 1; k <= K; ++k) gain[k - 1] = u.xmodes[k - 1].gain(u.ex);
  const double reference = opt.reference > 0.0 ? opt.reference : res.norm_before;
  // Per-mode share of the residual allowance in H^{-1}.
  const double budget = opt.tolerance * reference / std::sqrt(static_cast<double>(K * gam));

  // Free part e^{(A - lambda) T} c for every mode, reused across attempts.
  std::vector<Mat> decay(K * J), tail(K * J);
  parallel_for(K * J, [&](int idx) {
    const int k = idx / J + 1, j = idx % J + 1;
    const Mat L = sys.A - u.eigenvalue(k, j) * Mat::Identity(n, n);
    decay[idx] = expm(L * T);
    tail[idx] = expm(L * (T - tau));
  });

  // Modes that the passive part of the window would not damp below the allowance.
  res.controlled.assign(gam, {});
  for (int j = 1; j <= gam; ++j) {
    for (int k = 1; k <= K; ++k) {
      const double lam = u.eigenvalue(k, j);
      if (lam * (1.0 - theta) * T >= opt.skip_exponent) continue;
      const double free_part = (decay[u.index(k, j)] * u.col(k, j)).norm() / std::sqrt(lam);
      if (free_part > budget) res.controlled[j - 1].push_back(k);
    }
  }

  for (int attempt = 0; attempt <= K; ++attempt) {
    res.g.assign(gam, ExpSumControl{});
    std::vector<double> conds(gam, 0.0);
    parallel_for(gam, [&](int jj) {
      const int j = jj + 1;
      const std::vector<int>& ks = res.controlled[jj];
      if (ks.empty()) {
        res.g[jj].T = T;
        res.g[jj].tau = tau;
        res.g[jj].m = sys.m;
        return;
      }
      std::vector<double> lam, gn;
      Mat c0(n, ks.size());
      for (size_t i = 0; i < ks.size(); ++i) {
        lam.push_back(u.eigenvalue(ks[i], j));
        gn.push_back(gain[ks[i] - 1]);
        c0.col(i) = u.col(ks[i], j);
      }
      MomentSolve ms = solve_moment_problem(sys, ss, lam, gn, c0, T, tau, opt.synth.weight_power,
                                            opt.synth.cond_cap);
      res.g[jj] = std::move(ms.control);
      conds[jj] = ms.cond;
    });
    res.cond = *std::max_element(conds.begin(), conds.end());

    // Exact response of every retained mode to its effective input sum_j' W(j, j') g_j'.
    parallel_for(K * J, [&](int idx) {
      const int k = idx / J + 1, j = idx % J + 1;
      const double lam = u.eigenvalue(k, j);
      QVec drive = QVec::Zero(n);
      for (int jp = 1; jp <= gam; ++jp) {
        const qcplx w = W(j - 1, jp - 1);
        if (w == qcplx(0) || res.g[jp - 1].size() == 0) continue;
        drive += w * control_drive(res.g[jp - 1], sys, ss, lam);
      }
      const Vec d = to_double(QMat(drive));
      res.u_next.coeffs.col(idx) = decay[idx] * u.coeffs.col(idx) + gain[k - 1] * (tail[idx] * d);
    });

    const double proj = projected_norm_hm1_2d(res.u_next, gam);
    res.projected_ratio = res.norm_before > 0.0 ? proj / res.norm_before : 0.0;
    if (proj <= opt.tolerance * reference) break;

    // Target the low-frequency modes that the free window did not damp enough.
    bool added = false;
    for (int j = 1; j <= gam; ++j) {
      std::vector<int>& ks = res.controlled[j - 1];
      for (int k = 1; k <= K; ++k) {
        if (std::find(ks.begin(), ks.end(), k) != ks.end()) continue;
        if (res.u_next.col(k, j).norm() / std::sqrt(u.eigenvalue(k, j)) > budget) {
          ks.push_back(k);
          added = true;
        }
      }
      std::sort(ks.begin(), ks.end());
    }
    if (!added) {
      std::ostringstream os;
      os << "control_step: projected residual " << proj << " above " << opt.tolerance * reference
         << " with all offending modes targeted";
      throw NumericalError(os.str());
    }
  }
  if (projected_norm_hm1_2d(res.u_next, gam) > opt.tolerance * reference) {
    throw NumericalError("control_step: projected residual did not reach tolerance");
  }

  // ||q||^2 = int g^* G_gamma^{-1} g dt.
  qcplx acc = 0;
  for (int i = 0; i < gam; ++i) {
    for (int j = 0; j < gam; ++j) {
      if (res.g[i].size() == 0 || res.g[j].size() == 0) continue;
      acc += res.Ginv(i, j) * cross_integral(res.g[i], res.g[j]);
    }
  }
  res.control_norm = std::sqrt(std::max(0.0, static_cast<double>(acc.real())));
  res.norm_after = norm_hm1_2d(res.u_next);
  return res;
}

ModalState2D free_evolve(const ModalState2D& u, double dt) {
  if (dt < 0.0) throw DomainError("free_evolve: dt must be >= 0");
  ModalState2D out = u;
  if (dt == 0.0) return out;
  const int n = u.n(), J = u.J();
  parallel_for(u.K() * J, [&](int idx) {
    const int k = idx / J + 1, j = idx % J + 1;
    const Mat L = u.sys.A - u.eigenvalue(k, j) * Mat::Identity(n, n);
    out.coeffs.col(idx) = expm(L * dt) * u.coeffs.col(idx);
  });
  return out;
}

ModalState2D dissipate(const ModalState2D& u, double dt, int J, double tol, double reference) {
  if (dt < 0.0) throw DomainError("dissipate: dt must be >= 0");
  const double ref = reference < 0.0 ? norm_hm1_2d(u) : reference;
  const int Jc = std::min(J, u.J());
  const double low = projected_norm_hm1_2d(u, Jc);
  if (low > tol * ref) {
    std::vector<std::pair<double, int>> bad;
    for (int k = 1; k <= u.K(); ++k) {
      for (int j = 1; j <= Jc; ++j) {
        bad.push_back({u.col(k, j).norm() / std::sqrt(u.eigenvalue(k, j)), u.index(k, j)});
      }
    }
    std::sort(bad.rbegin(), bad.rend());
    std::ostringstream os;
    os << "dissipate: low-frequency part " << low << " exceeds " << tol << " * " << ref
       << "; largest modes";
    for (size_t i = 0; i < std::min<size_t>(5, bad.size()); ++i) {
      os << " (" << bad[i].second / u.J() + 1 << "," << bad[i].second % u.J() + 1 << ")";
    }
    throw DomainError(os.str());
  }
  return free_evolve(u, dt);
}

LRReport run_lr(const ModalState2D& u0, const LRSchedule& schedule, const RestrictionGram& gram,
                const LROptions& opt) {
  LRReport rep;
  rep.initial_norm = norm_hm1_2d(u0);
  rep.tail_time = schedule.tail_time();
  ModalState2D u = u0;
  double control_sq = 0.0;
  try {
    for (const LRInterval& iv : schedule.intervals) {
      LRStepRecord rec;
      rec.a = iv.a;
      rec.T = iv.T;
      rec.gamma = std::min(iv.gamma, u.J());
      rec.norm_before = norm_hm1_2d(u);
      if (opt.controls_enabled) {
        StepOptions sopt = opt.step;
        if (sopt.reference <= 0.0) sopt.reference = rep.initial_norm;
        StepResult step = control_step(u, iv.a, iv.T, iv.gamma, gram, sopt);
        u = step.u_next;
        rec.control_norm = step.control_norm;
        rec.cond = step.cond;
        rep.steps.push_back(std::move(step));
        rec.norm_after_control = norm_hm1_2d(u);
        u = dissipate(u, iv.T, rec.gamma, opt.step.tolerance, rep.initial_norm);
      } else {
        u = free_evolve(u, iv.T);
        rec.norm_after_control = norm_hm1_2d(u);
        u = free_evolve(u, iv.T);
      }
      rec.norm_after_dissipation = norm_hm1_2d(u);
      control_sq += rec.control_norm * rec.control_norm;
      rep.records.push_back(rec);
    }
    u = free_evolve(u, rep.tail_time);
    rep.completed = true;
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  rep.final_norm = norm_hm1_2d(u);
  rep.final_ratio = rep.initial_norm > 0.0 ? rep.final_norm / rep.initial_norm : 0.0;
  rep.total_control_norm = std::sqrt(control_sq);
  return rep;
}

FdNorms2D fd_free_evolution_2d(const ModalState2D& u0, double duration, int Mx, int My, int steps) {
  if (!(duration > 0.0) || steps < 1) throw DomainError("fd_free_evolution_2d: need duration > 0, steps >= 1");
  if (u0.sys.A.imag().norm() > 0.0) throw DomainError("fd_free_evolution_2d: A must be real");
  using SpMat = Eigen::SparseMatrix<double>;
  const int n = u0.n();
  const FvOperator1D ox = fv_operator_1d(u0.ex, fd_mesh(u0.ex, Mx));
  const FvOperator1D oy = fv_operator_1d(u0.ey, fd_mesh(u0.ey, My));
  const int nx = ox.size(), ny = oy.size();
  auto diag = [](const Eigen::VectorXd& v) {
    SpMat D(v.size(), v.size());
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index i = 0; i < v.size(); ++i) t.emplace_back(i, i, v(i));
    D.setFromTriplets(t.begin(), t.end());
    return D;
  };
  SpMat In(n, n);
  In.setIdentity();
  SpMat As = u0.sys.A.real().sparseView();
  const SpMat Vx = diag(ox.volume), Vy = diag(oy.volume);
  const SpMat V2 = Eigen::kroneckerProduct(Vx, Vy).eval();
  const SpMat K2 = SpMat(Eigen::kroneckerProduct(ox.stiffness, Vy)) + SpMat(Eigen::kroneckerProduct(Vx, oy.stiffness));
  const SpMat V = Eigen::kroneckerProduct(V2, In).eval();
  const SpMat S = SpMat(Eigen::kroneckerProduct(V2, As)) - SpMat(Eigen::kroneckerProduct(K2, In));

  // Unknown (ix, iy, a) -> (ix ny + iy) n + a.
  Eigen::MatrixXd phx(u0.K(), nx), phy(u0.J(), ny);
  for (int k = 0; k < u0.K(); ++k)
    for (int i = 0; i < nx; ++i) phx(k, i) = eigenfunction_eval_closed(u0.ex, u0.xmodes[k], ox.x[i + ox.first]);
  for (int j = 0; j < u0.J(); ++j)
    for (int i = 0; i < ny; ++i) phy(j, i) = eigenfunction_eval_closed(u0.ey, u0.ymodes[j], oy.x[i + oy.first]);
  Eigen::VectorXd w(static_cast<Eigen::Index>(nx) * ny * n);
  w.setZero();
  for (int k = 0; k < u0.K(); ++k) {
    for (int j = 0; j < u0.J(); ++j) {
      const Eigen::VectorXd c = u0.col(k + 1, j + 1).real();
      if (c.norm() == 0.0) continue;
      for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
          w.segment((static_cast<Eigen::Index>(ix) * ny + iy) * n, n) += phx(k, ix) * phy(j, iy) * c;
    }
  }

  // Tensor trapezoid weights on the full mesh; boundary nodes carry zero or
  // (strong regime) are unknowns themselves.
  auto trap = [](const std::vector<double>& x) {
    std::vector<double> t(x.size(), 0.0);
    for (size_t i = 0; i + 1 < x.size(); ++i) {
      t[i] += 0.5 * (x[i + 1] - x[i]);
      t[i + 1] += 0.5 * (x[i + 1] - x[i]);
    }
    return t;
  };
  const std::vector<double> tx = trap(ox.x), ty = trap(oy.x);
  auto l2 = [&](const Eigen::VectorXd& v) {
    double acc = 0.0;
    for (int ix = 0; ix < nx; ++ix)
      for (int iy = 0; iy < ny; ++iy)
        acc += tx[ix + ox.first] * ty[iy + oy.first] *
               v.segment((static_cast<Eigen::Index>(ix) * ny + iy) * n, n).squaredNorm();
    return std::sqrt(acc);
  };

  FdNorms2D out;
  out.initial = l2(w);
  const double dt = duration / steps;
  Eigen::SparseLU<SpMat> be, bdf;
  be.compute(SpMat(V - dt * S));
  bdf.compute(SpMat(3.0 * V - 2.0 * dt * S));
  if (be.info() != Eigen::Success || bdf.info() != Eigen::Success) {
    throw NumericalError("fd_free_evolution_2d: factorization failed");
  }
  Eigen::VectorXd prev = w;
  w = be.solve(V * w);
  for (int s = 2; s <= steps; ++s) {
    Eigen::VectorXd rhs = 4.0 * (V * w) - V * prev;
    prev = w;
    w = bdf.solve(rhs);
    if (!w.allFinite()) throw NumericalError("fd_free_evolution_2d: non-finite state");
  }
  out.final = l2(w);
  return out;
}

}  // namespace degctrl
