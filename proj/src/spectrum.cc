#include "degctrl/spectrum.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "degctrl/errors.h"
#include "degctrl/quadrature.h"
#include "degctrl/special_functions.h"

namespace degctrl {
namespace {

constexpr double kPi = std::numbers::pi;

// j^nu / (2^nu Gamma(nu + 1)): the leading coefficient of J_nu(j s) at s = 0.
double leading_coefficient(double nu, double j) {
  return std::pow(0.5 * j, nu) / gamma(nu + 1.0);
}

SpectralMode build_mode(const DegeneracyExponent& e, int k, double j) {
  SpectralMode m;
  m.k = k;
  m.zero = j;
  m.eigenvalue = e.kappa * e.kappa * j * j;
  const double jp = std::abs(bessel_j_prime(e.nu, j));
  m.norm_factor = std::sqrt(2.0 - e.alpha) / jp;
  const double lead = leading_coefficient(e.nu, j);
  if (e.regime == Regime::kWeak) {
    m.obs_trace = (1.0 - e.alpha) * m.norm_factor * lead;
  } else {
    m.obs_trace = std::sqrt(2.0 * e.kappa) / jp * lead;
  }
  return m;
}

}  // namespace

DegeneracyExponent make_exponent(double alpha) {
  if (!(alpha >= 0.0 && alpha < 2.0)) {
    std::ostringstream os;
    os << "degeneracy exponent must lie in [0, 2), got " << alpha;
    throw DomainError(os.str());
  }
  DegeneracyExponent e;
  e.alpha = alpha;
  e.regime = alpha < 1.0 ? Regime::kWeak : Regime::kStrong;
  e.nu = std::abs(1.0 - alpha) / (2.0 - alpha);
  e.kappa = (2.0 - alpha) / 2.0;
  return e;
}

double input_sign(const DegeneracyExponent& e) {
  return e.regime == Regime::kWeak ? 1.0 : -1.0;
}

SpectralMode mode(const DegeneracyExponent& e, int k) {
  if (k < 1) throw DomainError("mode: k must be >= 1");
  return build_mode(e, k, bessel_zero(e.nu, k));
}

std::vector<SpectralMode> modes(const DegeneracyExponent& e, int K) {
  if (K < 0) throw DomainError("modes: K must be >= 0");
  const std::vector<double> z = bessel_zeros(e.nu, K);
  std::vector<SpectralMode> out;
  out.reserve(K);
  for (int k = 1; k <= K; ++k) out.push_back(build_mode(e, k, z[k - 1]));
  return out;
}

double eigenfunction_eval(const DegeneracyExponent& e, const SpectralMode& m, double x) {
  if (!(x > 0.0 && x <= 1.0)) {
    throw DomainError("eigenfunction_eval: x must lie in (0, 1]");
  }
  return m.norm_factor * std::pow(x, 0.5 * (1.0 - e.alpha)) *
         bessel_j(e.nu, m.zero * std::pow(x, e.kappa));
}

double eigenfunction_eval(const DegeneracyExponent& e, int k, double x) {
  return eigenfunction_eval(e, mode(e, k), x);
}

double eigenfunction_eval_closed(const DegeneracyExponent& e, const SpectralMode& m,
                                 double x) {
  if (x == 0.0) return e.regime == Regime::kWeak ? 0.0 : m.obs_trace;
  return eigenfunction_eval(e, m, x);
}

double eigenfunction_product_integral(const DegeneracyExponent& e, const SpectralMode& a,
                                      const SpectralMode& b, double lo, double hi,
                                      double tol) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) {
    throw DomainError("eigenfunction_product_integral: need 0 <= lo <= hi <= 1");
  }
  // With s = x^kappa: x^{1-alpha} dx = s ds / kappa.
  const double s0 = std::pow(lo, e.kappa), s1 = std::pow(hi, e.kappa);
  auto f = [&](double s) {
    return s * bessel_j(e.nu, a.zero * s) * bessel_j(e.nu, b.zero * s);
  };
  return a.norm_factor * b.norm_factor / e.kappa * integrate(f, s0, s1, tol);
}

GapReport gap_check(const DegeneracyExponent& e, int K) {
  if (K < 2) throw DomainError("gap_check: K must be >= 2");
  GapReport r;
  r.K = K;
  r.rho1 = kPi * kPi * e.kappa * e.kappa / 4.0;
  r.rho2 = 2.0 * kPi * kPi * e.kappa * e.kappa;
  const auto ms = modes(e, K);
  r.min_ratio = INFINITY;
  r.max_ratio = 0.0;
  for (int k = 2; k <= K; ++k) {
    for (int m = 1; m < k; ++m) {
      const double d = static_cast<double>(k) * k - static_cast<double>(m) * m;
      const double gap = std::abs(ms[k - 1].eigenvalue - ms[m - 1].eigenvalue);
      r.min_ratio = std::min(r.min_ratio, gap / d);
      r.max_ratio = std::max(r.max_ratio, gap / d);
      if (gap < r.rho1 * d || gap > r.rho2 * d) {
        r.violations.push_back({k, m, gap, r.rho1 * d, r.rho2 * d});
      }
    }
  }
  return r;
}

int counting_function(const std::vector<double>& moduli, double r) {
  if (!std::is_sorted(moduli.begin(), moduli.end())) {
    throw DomainError("counting_function: list must be sorted");
  }
  return static_cast<int>(std::upper_bound(moduli.begin(), moduli.end(), r) - moduli.begin());
}

std::vector<double> graded_mesh(const DegeneracyExponent& e, int M) {
  if (M < 2) throw DomainError("graded_mesh: M must be >= 2");
  std::vector<double> x(M + 1);
  const double p = 2.0 / (2.0 - e.alpha);
  for (int i = 0; i <= M; ++i) x[i] = std::pow(static_cast<double>(i) / M, p);
  x[M] = 1.0;
  return x;
}

std::vector<double> sturm_liouville_fd_oracle(const DegeneracyExponent& e, int K, int M) {
  if (M < 200) throw DomainError("sturm_liouville_fd_oracle: mesh size must be >= 200");
  if (K < 1) throw DomainError("sturm_liouville_fd_oracle: K must be >= 1");
  const auto x = graded_mesh(e, M);
  const int first = e.regime == Regime::kWeak ? 1 : 0;
  const int n = M - first;  // unknowns first..M-1
  if (K > n) throw DomainError("sturm_liouville_fd_oracle: K exceeds the mesh size");
  std::vector<double> face(M);  // conductance of face i+1/2
  for (int i = 0; i < M; ++i) {
    const double h = x[i + 1] - x[i];
    face[i] = std::pow(0.5 * (x[i] + x[i + 1]), e.alpha) / h;
  }
  Eigen::VectorXd vol(n), diag(n), sub(std::max(n - 1, 1));
  for (int r = 0; r < n; ++r) {
    const int i = first + r;
    vol[r] = i == 0 ? 0.5 * x[1] : 0.5 * (x[i + 1] - x[i - 1]);
    diag[r] = face[i] + (i > 0 ? face[i - 1] : 0.0);
  }
  for (int r = 0; r + 1 < n; ++r) {
    const int i = first + r;
    sub[r] = -face[i] / std::sqrt(vol[r] * vol[r + 1]);
  }
  for (int r = 0; r < n; ++r) diag[r] /= vol[r];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("sturm_liouville_fd_oracle: eigensolver failed");
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + K);
  return out;
}

double energy_ratio_by_quadrature(const DegeneracyExponent& e, const SpectralMode& m) {
  // x^alpha phi'(x)^2 dx = (c^2 / kappa) s^{-1} [(1-alpha)/2 J(js) + kappa j s J'(js)]^2 ds
  const double c = m.norm_factor;
  auto f = [&](double s) {
    const double js = m.zero * s;
    const double br = 0.5 * (1.0 - e.alpha) * bessel_j(e.nu, js) +
                      e.kappa * js * bessel_j_prime(e.nu, js);
    return br * br / s;
  };
  boost::math::quadrature::tanh_sinh<double> q;
  const double v = q.integrate(f, 0.0, 1.0, 1e-12);
  return c * c / e.kappa * v / m.eigenvalue;
}

}  // namespace degctrl
