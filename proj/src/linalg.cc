#include "degctrl/linalg.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <unsupported/Eigen/MatrixFunctions>

#include "degctrl/errors.h"

namespace degctrl {

int SpectralStructure::max_chain() const {
  int m = 0;
  for (int c : chain) m = std::max(m, c);
  return m;
}

Mat SpectralStructure::exp(double t) const {
  const int n = static_cast<int>(P.front().rows());
  Mat out = Mat::Zero(n, n);
  for (int l = 0; l < size(); ++l) {
    Mat term = P[l];
    Mat acc = P[l];
    double fact = 1.0;
    for (int s = 1; s < chain[l]; ++s) {
      term = N[l] * term;
      fact *= s;
      acc += std::pow(t, s) / fact * term;
    }
    out += std::exp(eigenvalues[l] * t) * acc;
  }
  return out;
}

SpectralStructure spectral_structure(const Mat& A, double cluster_tol) {
  const int n = static_cast<int>(A.rows());
  if (n == 0 || A.cols() != n) throw DomainError("spectral_structure: square matrix required");
  Eigen::ComplexEigenSolver<Mat> ces(A, false);
  if (ces.info() != Eigen::Success) throw NumericalError("spectral_structure: eigensolver failed");
  const Vec ev = ces.eigenvalues();
  const double scale = 1.0 + A.norm();
  const double tol = cluster_tol * scale;

  // Single-linkage clustering of nearby eigenvalues.
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  std::function<int(int)> root = [&](int i) { return label[i] == i ? i : label[i] = root(label[i]); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(ev[i] - ev[j]) <= tol) label[root(i)] = root(j);

  struct Cluster { cplx mean; int size; };
  std::vector<Cluster> clusters;
  std::vector<int> seen(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = root(i);
    if (seen[r] < 0) {
      seen[r] = static_cast<int>(clusters.size());
      clusters.push_back({0.0, 0});
    }
    Cluster& c = clusters[seen[r]];
    c.mean += ev[i];
    c.size += 1;
  }
  for (auto& c : clusters) c.mean /= static_cast<double>(c.size);
  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    if (a.mean.real() != b.mean.real()) return a.mean.real() > b.mean.real();
    return std::abs(a.mean) > std::abs(b.mean);
  });

  // Generalized eigenspaces: null spaces of (A - mu)^a.
  Mat V(n, n);
  int col = 0;
  for (const auto& c : clusters) {
    Mat M = A - c.mean * Mat::Identity(n, n);
    Mat Mp = Mat::Identity(n, n);
    for (int i = 0; i < c.size; ++i) Mp = Mp * M;
    Eigen::JacobiSVD<Mat> svd(Mp, Eigen::ComputeFullV);
    V.middleCols(col, c.size) = svd.matrixV().rightCols(c.size);
    col += c.size;
  }
  Eigen::FullPivLU<Mat> lu(V);
  if (!lu.isInvertible()) throw NumericalError("spectral_structure: generalized eigenvectors are dependent");
  const Mat W = lu.inverse();

  SpectralStructure s;
  col = 0;
  Mat recon = Mat::Zero(n, n);
  for (const auto& c : clusters) {
    Mat P = V.middleCols(col, c.size) * W.middleRows(col, c.size);
    Mat N = (A - c.mean * Mat::Identity(n, n)) * P;
    int tau = c.size;
    Mat Np = N;
    double sc = scale;
    for (int t = 1; t <= c.size; ++t) {
      if (Np.norm() <= 1e-9 * sc) {
        tau = t;
        break;
      }
      Np = Np * N;
      sc *= scale;
    }
    s.eigenvalues.push_back(c.mean);
    s.algebraic.push_back(c.size);
    s.chain.push_back(tau);
    s.P.push_back(P);
    s.N.push_back(N);
    recon += c.mean * P + N;
    col += c.size;
  }
  s.reconstruction_error = (recon - A).norm() / scale;
  if (s.reconstruction_error > 1e-8) {
    throw NumericalError("spectral_structure: decomposition does not reproduce the matrix");
  }
  return s;
}

Mat expm(const Mat& A) { return A.exp(); }

int numerical_rank(const Mat& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * sv[0]) ++r;
  return r;
}

}  // namespace degctrl
