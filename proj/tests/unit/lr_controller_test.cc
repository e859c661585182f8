#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "degctrl/errors.h"
#include "degctrl/lr_controller.h"
#include "degctrl/quadrature.h"

namespace degctrl {
namespace {

constexpr double kPi = std::numbers::pi;

CoupledSystem scalar() { return make_system(Mat::Zero(1, 1), Mat::Ones(1, 1)); }

TEST(Norms2D, SingleModeAndWeightSwap) {
  const auto e = make_exponent(0.5);
  ModalState2D u = make_state_2d(scalar(), e, e, 3, 4);
  u.col(2, 3)(0) = 1.0;
  const double lam = u.eigenvalue(2, 3);
  EXPECT_NEAR(norm_h1_2d(u), std::sqrt(lam), 1e-13);
  EXPECT_NEAR(norm_hm1_2d(u), 1.0 / std::sqrt(lam), 1e-15);

  ModalState2D v = make_state_2d(scalar(), e, e, 3, 4);
  for (int k = 1; k <= 3; ++k)
    for (int j = 1; j <= 4; ++j) v.col(k, j)(0) = std::sin(k + 2.0 * j);
  ModalState2D w = v;
  for (int k = 1; k <= 3; ++k)
    for (int j = 1; j <= 4; ++j) w.col(k, j) *= v.eigenvalue(k, j);
  EXPECT_NEAR(norm_hm1_2d(w), norm_h1_2d(v), 1e-12 * norm_h1_2d(v));
}

TEST(Norms2D, ClassicalProductSine) {
  // sin(pi x) sin(pi y) has |grad|^2 / |u|^2 = 2 pi^2.
  const auto e = make_exponent(0.0);
  ModalState2D u = make_state_2d(scalar(), e, e, 2, 2);
  u.col(1, 1)(0) = 0.5;  // (sqrt2 sin)(sqrt2 sin) / 2
  const double l2 = integrate([](double x) { return std::pow(std::sin(kPi * x), 2); }, 0, 1);
  const double h1 = 2 * kPi * kPi * l2 * l2;
  EXPECT_NEAR(norm_l2_2d(u) * norm_l2_2d(u), l2 * l2, 1e-12);
  EXPECT_NEAR(norm_h1_2d(u) * norm_h1_2d(u), h1, 1e-10);
}

TEST(Schedule, PlugInValues) {
  const LRSchedule s = make_schedule(1.0, 0.5, 2, 6);
  EXPECT_NEAR(s.alpha_hat, 1 - std::pow(2.0, -0.5), 1e-15);
  EXPECT_NEAR(s.intervals[0].T, 0.1464466094067262, 1e-15);
  EXPECT_NEAR(s.intervals[1].a, 0.2928932188134524, 1e-15);
  EXPECT_EQ(s.intervals[3].gamma, 16);
  for (size_t k = 1; k < s.intervals.size(); ++k) {
    EXPECT_LT(s.intervals[k].T, s.intervals[k - 1].T);
    EXPECT_GT(s.intervals[k].gamma, s.intervals[k - 1].gamma);
    EXPECT_NEAR(s.intervals[k].a, s.intervals[k - 1].a + 2 * s.intervals[k - 1].T, 1e-15);
  }
  EXPECT_NEAR(s.tail_time(), 1.0 - s.intervals.back().a - 2 * s.intervals.back().T, 1e-15);
  EXPECT_THROW(make_schedule(1.0, 1.0, 2), DomainError);
  EXPECT_THROW(make_schedule(1.0, 0.5, 0), DomainError);
}

TEST(Schedule, SeriesSumsToHorizon) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uT(0.05, 10.0), ur(0.05, 0.95);
  for (int draw = 0; draw < 100; ++draw) {
    const double T = uT(rng), rho = ur(rng);
    const int beta = 1 + static_cast<int>(rng() % 8);
    const LRSchedule s = make_schedule(T, rho, beta, 30);
    double sum = 0.0;
    for (const auto& iv : s.intervals) sum += iv.T;
    for (int k = 30;; ++k) {
      const double t = s.intervals[0].T * std::pow(2.0, -k * rho);
      if (t < 1e-19 * T) break;
      sum += t;
    }
    EXPECT_NEAR(2 * sum, T, 1e-12 * std::max(1.0, T));
  }
}

TEST(Schedule, Defaults) {
  EXPECT_EQ(default_beta(1.0), 2);
  EXPECT_EQ(default_beta(0.3), 7);
  const int k = auto_k_stop(0.5, 2, 1e-10);
  EXPECT_LE(-2 * std::pow(2.0, k * 1.5), std::log(1e-10));
  EXPECT_GT(-2 * std::pow(2.0, (k - 1) * 1.5), std::log(1e-10));
}

TEST(RestrictionGram, FullWindowIsIdentity) {
  const RestrictionGram g = restriction_gram(make_exponent(0.5), 0.0, 1.0, 8);
  EXPECT_LT((g.G - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(g.sigma_min, 1.0, 1e-14);
}

TEST(RestrictionGram, ClassicalEntry) {
  // int_0.3^0.7 2 sin^2(pi y) dy = 0.4 + sin(0.4 pi) / pi
  const RestrictionGram g = restriction_gram(make_exponent(0.0), 0.3, 0.7, 2);
  EXPECT_NEAR(g.G(0, 0), 0.4 + std::sin(0.4 * kPi) / kPi, 1e-15);
  EXPECT_NEAR(g.G(0, 0), 0.70273069145626274809, 1e-15);
  EXPECT_NEAR(g.G(0, 1), 0.0, 1e-15);
}

// Reference values from tests/oracles/derive_values.py.
TEST(RestrictionGram, SmallestEigenvalueMatchesReference) {
  struct Case {
    double alpha;
    int J;
    double sigma;
  };
  const Case cases[] = {{0.5, 3, 0.016968986883997163268}, {0.5, 6, 6.3054780189541088625e-6},
                        {1.5, 3, 4.4785781548996134504e-6}, {1.5, 6, 6.1370127283097854814e-14}};
  for (const Case& c : cases) {
    const RestrictionGram g = restriction_gram(make_exponent(c.alpha), 0.3, 0.7, c.J);
    EXPECT_NEAR(g.sigma_min / c.sigma, 1.0, 1e-12) << "alpha=" << c.alpha << " J=" << c.J;
    EXPECT_LT((g.G - g.G.transpose()).norm(), 1e-16);
  }
}

TEST(RestrictionGram, EntriesMatchQuadrature) {
  const auto e = make_exponent(1.5);
  const RestrictionGram g = restriction_gram(e, 0.3, 0.7, 5);
  const auto m2 = mode(e, 2), m5 = mode(e, 5);
  EXPECT_NEAR(g.G(1, 4), eigenfunction_product_integral(e, m2, m5, 0.3, 0.7), 1e-12);
}

TEST(RestrictionGram, SigmaMinDecreasesWithJ) {
  const std::vector<int> Js{1, 2, 4, 8, 16, 24};
  const auto s = leading_sigma_min(make_exponent(0.5), 0.3, 0.7, Js);
  for (size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i], s[i - 1]);
  EXPECT_NEAR(s[3], restriction_gram(make_exponent(0.5), 0.3, 0.7, 8).sigma_min, 1e-14 * s[3] + 1e-300);
}

TEST(SpectralFit, BoundsEveryPoint) {
  const std::vector<int> Js{1, 2, 5, 10, 20};
  for (double alpha : {0.0, 0.5, 1.5}) {
    const SpectralFit f = spectral_inequality_fit(make_exponent(alpha), 0.3, 0.7, Js);
    for (size_t i = 0; i < Js.size(); ++i) {
      EXPECT_LE(f.m[i], f.C * std::sqrt(f.lambda[i]) + f.C + 1e-12);
    }
    EXPECT_GT(f.slope, 0.0);
  }
}

TEST(SpectralFit, FullWindowAndMonotonicity) {
  const std::vector<int> Js{1, 4, 8};
  const auto e = make_exponent(0.5);
  const SpectralFit full = spectral_inequality_fit(e, 0.0, 1.0, Js);
  EXPECT_LT(full.C, 1e-12);
  const SpectralFit narrow = spectral_inequality_fit(e, 0.3, 0.7, Js);
  const SpectralFit wide = spectral_inequality_fit(e, 0.2, 0.8, Js);
  EXPECT_LE(wide.C, narrow.C);
}

TEST(Dissipate, ExactFactorsAndFiltering) {
  const auto e = make_exponent(0.5);
  ModalState2D u = make_state_2d(scalar(), e, e, 5, 6);
  u.col(2, 4)(0) = 1.0;
  const double dt = 0.03;
  const ModalState2D v = dissipate(u, dt, 3);
  EXPECT_NEAR(v.col(2, 4)(0).real(), std::exp(-u.eigenvalue(2, 4) * dt), 1e-15);
  EXPECT_EQ((dissipate(u, 0.0, 3).coeffs - u.coeffs).norm(), 0.0);
  EXPECT_THROW(dissipate(u, dt, 4), DomainError);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  ModalState2D r = make_state_2d(scalar(), e, e, 8, 10);
  const int J = 4;
  for (int k = 1; k <= 8; ++k)
    for (int j = J + 1; j <= 10; ++j) r.col(k, j)(0) = nd(rng);
  const ModalState2D rr = dissipate(r, dt, J);
  const double bound = std::exp(-r.ymodes[J].eigenvalue * dt);
  EXPECT_LE(norm_hm1_2d(rr) / norm_hm1_2d(r), bound * (1 + 1e-9));
}

TEST(Dissipate, AgreesWithFiniteVolumes) {
  const auto e = make_exponent(0.5);
  ModalState2D u = make_state_2d(scalar(), e, e, 3, 3);
  u.col(1, 2)(0) = 1.0;
  u.col(3, 1)(0) = 0.5;
  const double dt = 0.05;
  const ModalState2D v = free_evolve(u, dt);
  const FdNorms2D fd = fd_free_evolution_2d(u, dt, 300, 300, 400);
  EXPECT_NEAR(fd.initial / norm_l2_2d(u), 1.0, 1e-2);
  EXPECT_NEAR(fd.final / norm_l2_2d(v), 1.0, 1e-2);
}

TEST(ControlStep, NothingToControlAboveCutoff) {
  const auto e = make_exponent(0.5);
  ModalState2D u = make_state_2d(scalar(), e, e, 4, 6);
  u.col(1, 5)(0) = 1.0;
  const RestrictionGram g = restriction_gram(e, 0.3, 0.7, 6);
  const StepResult r = control_step(u, 0.0, 0.1, 3, g);
  EXPECT_EQ(r.control_norm, 0.0);
  EXPECT_LT((r.u_next.coeffs - free_evolve(u, 0.1).coeffs).norm(), 1e-15);
}

TEST(ControlStep, SingleModeIsDriven) {
  const auto e = make_exponent(0.5);
  ModalState2D u = make_state_2d(scalar(), e, e, 6, 6);
  u.col(1, 1)(0) = 1.0;
  const RestrictionGram g = restriction_gram(e, 0.3, 0.7, 6);
  const StepResult r = control_step(u, 0.0, 0.2, 2, g);
  EXPECT_LE(r.projected_ratio, 1e-6);
  EXPECT_GT(r.control_norm, 0.0);
  // The control vanishes off omega.
  const Mat q = r.control_at(0.05, {0.1, 0.5, 0.9}, e, u.ymodes, g);
  EXPECT_EQ(q(0, 0), cplx(0.0));
  EXPECT_NE(q(0, 1), cplx(0.0));
  EXPECT_EQ(q(0, 2), cplx(0.0));
}

TEST(ControlStep, FullWindowUsesOneDimensionalControls) {
  const auto e = make_exponent(0.5);
  ModalState2D u = make_state_2d(scalar(), e, e, 4, 3);
  for (int k = 1; k <= 4; ++k) u.col(k, 2)(0) = 1.0 / k;
  const RestrictionGram g = restriction_gram(e, 0.0, 1.0, 3);
  const StepResult r = control_step(u, 0.0, 0.3, 3, g);
  EXPECT_LE(r.projected_ratio, 1e-6);
  EXPECT_LT((to_double(r.Ginv) - Mat::Identity(3, 3)).norm(), 1e-13);
  EXPECT_EQ(r.g[0].size(), 0);
  EXPECT_EQ(r.g[2].size(), 0);
}

LRReport small_run(const ModalState2D& u0) {
  const RestrictionGram g = restriction_gram(u0.ey, 0.3, 0.7, u0.J());
  return run_lr(u0, make_schedule(1.0, 0.5, 2, 3), g);
}

TEST(RunLR, ZeroStateStaysZero) {
  const auto e = make_exponent(0.5);
  const LRReport r = small_run(make_state_2d(scalar(), e, e, 6, 6));
  EXPECT_TRUE(r.completed) << r.error;
  EXPECT_EQ(r.final_ratio, 0.0);
  EXPECT_EQ(r.total_control_norm, 0.0);
}

TEST(RunLR, DecreasesAcrossPhases) {
  const auto e = make_exponent(0.5);
  ModalState2D a = make_state_2d(scalar(), e, e, 6, 6);
  for (int k = 1; k <= 6; ++k)
    for (int j = 1; j <= 6; ++j) a.col(k, j)(0) = 1.0 / (k * j);
  const LRReport ra = small_run(a);
  ASSERT_TRUE(ra.completed) << ra.error;
  EXPECT_LE(ra.final_ratio, 1e-4);
  for (const auto& rec : ra.records) EXPECT_LT(rec.norm_after_dissipation, rec.norm_before);

}

TEST(ControlStep, LinearInState) {
  // Few x-modes, so every (k, j <= gamma) mode is targeted for all three states.
  const auto e = make_exponent(0.5);
  ModalState2D a = make_state_2d(scalar(), e, e, 3, 4), b = a;
  for (int k = 1; k <= 3; ++k) {
    for (int j = 1; j <= 4; ++j) {
      a.col(k, j)(0) = 1.0 / (k * j);
      b.col(k, j)(0) = std::cos(k - j) / (k + j);
    }
  }
  ModalState2D sum = a;
  sum.coeffs += b.coeffs;
  const RestrictionGram g = restriction_gram(e, 0.3, 0.7, 4);
  const auto sa = control_step(a, 0.0, 0.15, 2, g);
  const auto sb = control_step(b, 0.0, 0.15, 2, g);
  const auto ss = control_step(sum, 0.0, 0.15, 2, g);
  ASSERT_EQ(sa.controlled, ss.controlled);
  ASSERT_EQ(sb.controlled, ss.controlled);
  const std::vector<double> ys{0.35, 0.5, 0.65};
  for (double t : {0.01, 0.05, 0.1}) {
    const Mat qa = sa.control_at(t, ys, e, a.ymodes, g), qb = sb.control_at(t, ys, e, a.ymodes, g);
    const Mat qs = ss.control_at(t, ys, e, a.ymodes, g);
    EXPECT_LT((qa + qb - qs).norm(), 1e-9 * (1 + qs.norm()));
  }
  EXPECT_LT((sa.u_next.coeffs + sb.u_next.coeffs - ss.u_next.coeffs).norm(), 1e-12);
}

}  // namespace
}  // namespace degctrl
