#pragma once

#include <vector>

namespace degctrl {

/// Gamma function for x > 0 (Lanczos approximation, g = 7).
double gamma(double x);

/// Bessel function of the first kind J_nu(x), nu >= 0, x >= 0.
double bessel_j(double nu, double x);

/// dJ_nu/dx. Throws DomainError at x = 0 when nu < 1.
double bessel_j_prime(double nu, double x);

/// Interval guaranteed (for the orders where the classical bounds hold) to
/// contain the k-th positive zero of J_nu.
///   nu in [0,1/2]: [(k + nu/2 - 1/4)pi, (k + nu/4 - 1/8)pi]
///   nu >= 1/2:     the same two endpoints, swapped.
/// At nu = 1/2 both endpoints coincide at k*pi.
struct ZeroBracket {
  int k = 0;
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x, double slack = 0.0) const {
    return x >= lower - slack && x <= upper + slack;
  }
};

ZeroBracket zero_bracket(double nu, int k);

/// k-th positive zero j_{nu,k} of J_nu, k >= 1.
double bessel_zero(double nu, int k);

/// The first `count` positive zeros of J_nu in increasing order.
std::vector<double> bessel_zeros(double nu, int count);

namespace internal {
// Exposed for tests of the two evaluation branches.
double bessel_j_series(double nu, double x);
double bessel_j_hankel(double nu, double x);
constexpr double kBesselCrossover = 12.0;
}  // namespace internal

}  // namespace degctrl
