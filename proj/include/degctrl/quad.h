#pragma once

// Quadruple-precision scalars and matrices. Gram matrices of clustered
// exponentials lose roughly log10(cond) digits, which binary64 cannot afford
// beyond a dozen nodes.

#include <complex>

#include <Eigen/Dense>
#include <boost/multiprecision/complex128.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

namespace degctrl {

using qreal = boost::multiprecision::float128;
using qcplx = boost::multiprecision::complex128;
using QMat = Eigen::Matrix<qcplx, Eigen::Dynamic, Eigen::Dynamic>;
using QVec = Eigen::Matrix<qcplx, Eigen::Dynamic, 1>;

inline qcplx to_quad(const std::complex<double>& z) { return qcplx(qreal(z.real()), qreal(z.imag())); }

inline std::complex<double> to_double(const qcplx& z) {
  return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

inline QMat to_quad(const Eigen::MatrixXcd& m) {
  QMat out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = to_quad(m(i, j));
  return out;
}

inline Eigen::MatrixXcd to_double(const QMat& m) {
  Eigen::MatrixXcd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = to_double(m(i, j));
  return out;
}

/// Maximum absolute column sum.
inline qreal norm1(const QMat& m) {
  qreal best = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    qreal s = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += abs(m(i, j));
    if (s > best) best = s;
  }
  return best;
}

}  // namespace degctrl
