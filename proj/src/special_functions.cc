#include "degctrl/special_functions.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "degctrl/errors.h"

namespace degctrl {
namespace {

constexpr double kPi = std::numbers::pi;

void check_order(double nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw DomainError("Bessel order must be finite and >= 0");
  }
}

// Above this order the classical zero brackets stop isolating a single zero.
constexpr double kBracketOrderLimit = 3.0;

}  // namespace

double gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("gamma: argument must be finite and > 0");
  }
  if (x < 0.5) {
    return kPi / (std::sin(kPi * x) * gamma(1.0 - x));
  }
  static constexpr double g = 7.0;
  static constexpr double c[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = x - 1.0;
  double a = c[0];
  for (int i = 1; i < 9; ++i) a += c[i] / (z + i);
  const double t = z + g + 0.5;
  // t^(z+0.5) e^-t split in two halves to delay overflow near x = 171.
  const double half = std::pow(t, 0.5 * (z + 0.5));
  return std::sqrt(2.0 * kPi) * half * (half * std::exp(-t)) * a;
}

namespace internal {

double bessel_j_series(double nu, double x) {
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const double h = 0.5 * x;
  const double h2 = h * h;
  double term = std::pow(h, nu) / gamma(nu + 1.0);
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= -h2 / (k * (k + nu));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

double bessel_j_hankel(double nu, double x) {
  // P ~ sum (-1)^k a_{2k}/x^{2k},  Q ~ sum (-1)^k a_{2k+1}/x^{2k+1},
  // a_k = prod_{i<=k} (mu - (2i-1)^2) / (k! 8^k).
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double term = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (8.0 * k * x);
    if (term == 0.0) break;
    const double mag = std::abs(term);
    // Past the turning point the expansion diverges; stop at its minimum.
    if (k > nu + 2 && mag > prev) break;
    prev = mag;
    // Sign pattern for k = 1,2,3,4,...: Q+, P-, Q-, P+, ...
    const int r = k % 4;
    if (r == 1) q += term;
    else if (r == 2) p -= term;
    else if (r == 3) q -= term;
    else p += term;
    if (k >= 8 && mag < 1e-17) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace internal

double bessel_j(double nu, double x) {
  check_order(nu);
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_j: argument must be finite and >= 0");
  }
  if (x <= internal::kBesselCrossover || x <= nu) {
    return internal::bessel_j_series(nu, x);
  }
  if (nu < 2.0) return internal::bessel_j_hankel(nu, x);
  // Large order, x > nu: forward recurrence is stable below the turning point.
  const double nu0 = nu - std::floor(nu);
  double jm = internal::bessel_j_hankel(nu0, x);
  double j = internal::bessel_j_hankel(nu0 + 1.0, x);
  const int steps = static_cast<int>(std::floor(nu)) - 1;
  double order = nu0 + 1.0;
  for (int i = 0; i < steps; ++i) {
    const double jp = 2.0 * order / x * j - jm;
    jm = j;
    j = jp;
    order += 1.0;
  }
  return steps >= 0 ? j : jm;
}

double bessel_j_prime(double nu, double x) {
  check_order(nu);
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("bessel_j_prime: argument must be finite and >= 0");
  }
  if (x == 0.0) {
    if (nu < 1.0) throw DomainError("bessel_j_prime: singular at x = 0 for nu < 1");
    return nu == 1.0 ? 0.5 : 0.0;
  }
  if (nu >= 1.0) return bessel_j(nu - 1.0, x) - nu / x * bessel_j(nu, x);
  return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x);
}

ZeroBracket zero_bracket(double nu, int k) {
  check_order(nu);
  if (k < 1) throw DomainError("zero_bracket: k must be >= 1");
  const double a = (k + 0.5 * nu - 0.25) * kPi;
  const double b = (k + 0.25 * nu - 0.125) * kPi;
  ZeroBracket z;
  z.k = k;
  z.lower = nu <= 0.5 ? a : b;
  z.upper = nu <= 0.5 ? b : a;
  return z;
}

namespace {

// Root of J_nu in [a, b] given a sign change: bisection, then Newton.
double refine_root(double nu, double a, double b) {
  const double a0 = a, b0 = b;
  double fa = bessel_j(nu, a);
  while (b - a > 1e-4) {
    const double m = 0.5 * (a + b);
    const double fm = bessel_j(nu, m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  // Near the root the sign of J can be decided by rounding noise, so Newton
  // is only confined to the original bracket.
  double x = 0.5 * (a + b);
  for (int it = 0; it < 50; ++it) {
    const double f = bessel_j(nu, x);
    if (f == 0.0) break;
    const double xn = x - f / bessel_j_prime(nu, x);
    if (!(xn > a0 && xn < b0)) break;
    const bool done = std::abs(xn - x) <= 4e-16 * x;
    x = xn;
    if (done) break;
  }
  return x;
}

[[noreturn]] void no_root(double nu, int k, double a, double b, double fa, double fb) {
  std::ostringstream os;
  os.precision(17);
  os << "bessel_zero: no sign change for nu=" << nu << ", k=" << k << " in [" << a
     << ", " << b << "], J(a)=" << fa << ", J(b)=" << fb;
  throw NumericalError(os.str());
}

double zero_from_bracket(double nu, int k) {
  const ZeroBracket z = zero_bracket(nu, k);
  const double pad = 0.05 * kPi;
  const double a = z.lower - pad;
  const double b = z.upper + pad;
  const double fa = bessel_j(nu, a), fb = bessel_j(nu, b);
  if ((fa < 0.0) == (fb < 0.0)) no_root(nu, k, a, b, fa, fb);
  return refine_root(nu, a, b);
}

}  // namespace

std::vector<double> bessel_zeros(double nu, int count) {
  check_order(nu);
  std::vector<double> out;
  if (count <= 0) return out;
  out.reserve(count);
  if (nu <= kBracketOrderLimit) {
    for (int k = 1; k <= count; ++k) out.push_back(zero_from_bracket(nu, k));
    return out;
  }
  // Zeros are separated by more than pi for nu > 1/2 and j_{nu,1} > nu.
  const double h = 0.25;
  double a = nu;
  double fa = bessel_j(nu, a);
  while (static_cast<int>(out.size()) < count) {
    const double b = a + h;
    const double fb = bessel_j(nu, b);
    if (fb == 0.0) {
      out.push_back(b);
      a = b + 1e-9;
      fa = bessel_j(nu, a);
      continue;
    }
    if ((fa < 0.0) != (fb < 0.0)) out.push_back(refine_root(nu, a, b));
    a = b;
    fa = fb;
  }
  return out;
}

double bessel_zero(double nu, int k) {
  check_order(nu);
  if (k < 1) throw DomainError("bessel_zero: k must be >= 1");
  if (nu <= kBracketOrderLimit) return zero_from_bracket(nu, k);
  return bessel_zeros(nu, k).back();
}

}  // namespace degctrl
