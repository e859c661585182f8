#include "degctrl/quadrature.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "degctrl/errors.h"

namespace degctrl {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;

struct Panel {
  double value = 0.0, error = 0.0;
};

Panel panel(const std::function<double(double)>& f, double a, double b) {
  Panel p;
  p.value = Rule::integrate(f, a, b, 0, 0.0, &p.error);
  return p;
}

// Bisects until each panel meets its share of the absolute budget.
Panel refine(const std::function<double(double)>& f, double a, double b, const Panel& whole,
             double budget, int depth) {
  if (whole.error <= budget || depth == 0) return whole;
  const double m = 0.5 * (a + b);
  const Panel l = refine(f, a, m, panel(f, a, m), 0.5 * budget, depth - 1);
  const Panel r = refine(f, m, b, panel(f, m, b), 0.5 * budget, depth - 1);
  return {l.value + r.value, l.error + r.error};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 int max_depth) {
  if (a == b) return 0.0;
  const Panel coarse = panel(f, a, b);
  // The budget is absolute, so integrals that vanish to round-off terminate.
  const double budget = tol * std::max(1.0, std::abs(coarse.value));
  const Panel p = refine(f, a, b, coarse, budget, max_depth);
  if (!std::isfinite(p.value) || p.error > 100.0 * tol * std::max(1.0, std::abs(p.value))) {
    std::ostringstream os;
    os << "integrate: error estimate " << p.error << " on [" << a << ", " << b << "]";
    throw NumericalError(os.str());
  }
  return p.value;
}

double integrate_half_line(const std::function<double(double)>& f, double tol) {
  boost::math::quadrature::exp_sinh<double> q;
  double err = 0.0;
  const double v = q.integrate(f, 0.0, std::numeric_limits<double>::infinity(), tol, &err);
  if (!std::isfinite(v)) throw NumericalError("integrate_half_line: non-finite result");
  return v;
}

}  // namespace degctrl
