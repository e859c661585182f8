#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "degctrl/errors.h"
#include "degctrl/lr_controller.h"

namespace degctrl {
namespace {

// sigma_min reaches 1e-100 for alpha = 1.5 at J = 40.
constexpr int kDigits = 150;
using hp = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<kDigits>>;

// Row-major dense symmetric matrix.
struct HMat {
  int n = 0;
  std::vector<hp> a;
  explicit HMat(int size) : n(size), a(static_cast<size_t>(size) * size) {}
  hp& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  const hp& operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
  HMat leading(int m) const {
    HMat out(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out(i, j) = (*this)(i, j);
    return out;
  }
};

// Lommel antiderivative of s J_nu(a s) J_nu(b s), given J_nu and J_nu' at a s and b s.
hp lommel(const hp& nu, const hp& a, const hp& b, const hp& s, const hp& Ja, const hp& dJa,
          const hp& Jb, const hp& dJb) {
  if (s == 0) return 0;
  if (a == b) {
    const hp as = a * s;
    return s * s / 2 * (dJa * dJa + (1 - nu * nu / (as * as)) * Ja * Ja);
  }
  return s * (b * Ja * dJb - a * dJa * Jb) / (a * a - b * b);
}

HMat high_precision_gram(const DegeneracyExponent& ey, double a, double b, int J) {
  if (!(a >= 0.0 && a < b && b <= 1.0)) throw DomainError("restriction_gram: need 0 <= a < b <= 1");
  if (J < 1) throw DomainError("restriction_gram: J must be >= 1");
  const hp alpha = hp(ey.alpha);
  const hp nu = abs(1 - alpha) / (2 - alpha);
  const hp kappa = (2 - alpha) / 2;

  // In s = y^kappa: int psi_i psi_j dy = (c_i c_j / kappa) int s J_nu(j_i s) J_nu(j_j s) ds,
  // which has a closed form.
  const hp lo = a == 0.0 ? hp(0) : pow(hp(a), kappa);
  const hp hi = pow(hp(b), kappa);
  std::vector<hp> zero(J), coef(J), Jlo(J), dJlo(J), Jhi(J), dJhi(J);
  for (int j = 0; j < J; ++j) {
    zero[j] = boost::math::cyl_bessel_j_zero(nu, j + 1);
    coef[j] = sqrt(2 - alpha) / abs(boost::math::cyl_bessel_j_prime(nu, zero[j]));
    Jhi[j] = boost::math::cyl_bessel_j(nu, zero[j] * hi);
    dJhi[j] = boost::math::cyl_bessel_j_prime(nu, zero[j] * hi);
    if (lo > 0) {
      Jlo[j] = boost::math::cyl_bessel_j(nu, zero[j] * lo);
      dJlo[j] = boost::math::cyl_bessel_j_prime(nu, zero[j] * lo);
    }
  }
  HMat G(J);
  for (int i = 0; i < J; ++i) {
    for (int j = 0; j <= i; ++j) {
      const hp up = lommel(nu, zero[i], zero[j], hi, Jhi[i], dJhi[i], Jhi[j], dJhi[j]);
      const hp down = lommel(nu, zero[i], zero[j], lo, Jlo[i], dJlo[i], Jlo[j], dJlo[j]);
      G(i, j) = G(j, i) = coef[i] * coef[j] / kappa * (up - down);
    }
  }
  return G;
}

// Cyclic Jacobi rotations; accurate in the relative sense for the small
// eigenvalues of a positive definite matrix.
hp smallest_eigenvalue(HMat G) {
  const int n = G.n;
  for (int sweep = 0; sweep < 60; ++sweep) {
    hp off = 0, diag = 0;
    for (int i = 0; i < n; ++i) {
      diag += G(i, i) * G(i, i);
      for (int j = i + 1; j < n; ++j) off += G(i, j) * G(i, j);
    }
    if (off <= diag * pow(hp(10), -2 * kDigits + 20)) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const hp apq = G(p, q);
        if (apq == 0) continue;
        const hp theta = (G(q, q) - G(p, p)) / (2 * apq);
        const hp t = (theta >= 0 ? hp(1) : hp(-1)) / (abs(theta) + sqrt(theta * theta + 1));
        const hp c = 1 / sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          const hp gkp = G(k, p), gkq = G(k, q);
          G(k, p) = c * gkp - s * gkq;
          G(k, q) = s * gkp + c * gkq;
        }
        for (int k = 0; k < n; ++k) {
          const hp gpk = G(p, k), gqk = G(q, k);
          G(p, k) = c * gpk - s * gqk;
          G(q, k) = s * gpk + c * gqk;
        }
      }
    }
  }
  hp smin = G(0, 0);
  for (int i = 1; i < n; ++i) smin = std::min(smin, G(i, i));
  if (!(smin > pow(hp(10), 20 - kDigits))) {
    throw NumericalError("restriction_gram: smallest eigenvalue below the working precision");
  }
  return smin;
}

}  // namespace

RestrictionGram restriction_gram(const DegeneracyExponent& ey, double a, double b, int J) {
  const HMat G = high_precision_gram(ey, a, b, J);
  const hp smin = smallest_eigenvalue(G);
  RestrictionGram out;
  out.a = a;
  out.b = b;
  out.J = J;
  out.G.resize(J, J);
  out.Gq.resize(J, J);
  for (int i = 0; i < J; ++i) {
    for (int j = 0; j < J; ++j) {
      out.G(i, j) = static_cast<double>(G(i, j));
      out.Gq(i, j) = qcplx(qreal(G(i, j).convert_to<qreal>()), qreal(0));
    }
  }
  out.sigma_min = static_cast<double>(smin);
  out.neg_log_sigma_min = static_cast<double>(-log(smin));
  return out;
}

std::vector<double> leading_sigma_min(const DegeneracyExponent& ey, double a, double b,
                                      const std::vector<int>& J_list) {
  if (J_list.empty()) return {};
  const int Jmax = *std::max_element(J_list.begin(), J_list.end());
  if (*std::min_element(J_list.begin(), J_list.end()) < 1) {
    throw DomainError("leading_sigma_min: J must be >= 1");
  }
  const HMat G = high_precision_gram(ey, a, b, Jmax);
  std::vector<double> out;
  for (int J : J_list) out.push_back(static_cast<double>(smallest_eigenvalue(G.leading(J))));
  return out;
}

}  // namespace degctrl
