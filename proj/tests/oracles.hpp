#pragma once

// Reference computations written with plain loops, kept apart from the
// library code paths they check.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

inline Mat random_symmetric(std::mt19937_64& rng, int d) {
  Mat m = random_matrix(rng, d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) m(j, i) = m(i, j);
  return m;
}

inline Mat random_psd(std::mt19937_64& rng, int d) {
  const Mat g = random_matrix(rng, d, d);
  Mat p = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) p(i, j) += g(i, l) * g(j, l);
  return p;
}

inline double trace_of_product(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * b(i, j);
  return s;
}

inline double frobenius(const Mat& a) { return std::sqrt(trace_of_product(a, a)); }

inline Mat multiply(const Mat& a, const Mat& b) {
  Mat c = Mat::Zero(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j)
      for (int l = 0; l < a.cols(); ++l) c(i, j) += a(i, l) * b(l, j);
  return c;
}

/// Largest singular value by power iteration on A^T A.
inline double spectral(const Mat& a) {
  Vec v = Vec::Ones(a.cols());
  double s = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Vec w = a.transpose() * (a * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    s = std::sqrt(nw);
  }
  return s;
}

}  // namespace oracle
