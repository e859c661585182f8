#pragma once

#include <functional>

namespace degctrl {

/// Adaptive Gauss-Kronrod (61 point) integral of f over [a, b].
/// Throws NumericalError if the error estimate stays above tol * max(1, |I|).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12, int max_depth = 30);

/// Integral over [0, inf) via tanh-sinh on the half line.
double integrate_half_line(const std::function<double(double)>& f, double tol = 1e-12);

}  // namespace degctrl
