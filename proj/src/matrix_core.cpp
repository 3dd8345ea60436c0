#include "dhinf/matrix_core.hpp"

#include <cmath>

namespace dhinf {

SymMat::SymMat(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError("SymMat requires a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMat SymMat::identity(int dim, double scale) {
  return SymMat(Mat(scale * Mat::Identity(dim, dim)));
}

SymMat SymMat::operator+(const SymMat& o) const {
  if (dim() != o.dim()) throw DimensionError("SymMat addition dimension mismatch");
  SymMat r;
  r.m_ = m_ + o.m_;
  return r;
}

SymMat SymMat::operator-(const SymMat& o) const {
  if (dim() != o.dim()) throw DimensionError("SymMat subtraction dimension mismatch");
  SymMat r;
  r.m_ = m_ - o.m_;
  return r;
}

SymMat SymMat::operator*(double s) const {
  SymMat r;
  r.m_ = m_ * s;
  return r;
}

Vec vec(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat unvec(const Vec& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw DimensionError("unvec: length does not match dimensions");
  }
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

double trace_inner(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("trace_inner: dimension mismatch");
  }
  return (a.array() * b.array()).sum();
}

EigenPair sym_eigen(const SymMat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s.mat());
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite()) {
    throw NumericalError("symmetric eigendecomposition failed to converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

SymMat project_psd(const SymMat& s) {
  const EigenPair ep = sym_eigen(s);
  const Vec clamped = ep.values.cwiseMax(0.0);
  return SymMat(Mat(ep.vectors * clamped.asDiagonal() * ep.vectors.transpose()));
}

double max_eigenvalue(const SymMat& s) { return sym_eigen(s).values.maxCoeff(); }

double min_eigenvalue(const SymMat& s) { return sym_eigen(s).values.minCoeff(); }

Norms norms(const Mat& m) {
  Norms r;
  r.frobenius = std::sqrt(trace_inner(m, m));
  if (m.size() > 0) {
    Eigen::JacobiSVD<Mat> svd(m);
    r.spectral = svd.singularValues()(0);
  }
  return r;
}

SymMat sqrt_psd(const SymMat& s) {
  const EigenPair ep = sym_eigen(s);
  const Vec root = ep.values.cwiseMax(0.0).cwiseSqrt();
  return SymMat(Mat(ep.vectors * root.asDiagonal() * ep.vectors.transpose()));
}

int svec_size(int dim) { return dim * (dim + 1) / 2; }

int dim_from_svec_size(int size) {
  const int d = static_cast<int>(std::lround((std::sqrt(8.0 * size + 1.0) - 1.0) / 2.0));
  if (svec_size(d) != size) throw DimensionError("invalid packed symmetric length");
  return d;
}

Vec svec(const SymMat& s) {
  const int n = s.dim();
  Vec v(svec_size(n));
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      v(idx++) = s(i, j);
    }
  }
  return v;
}

SymMat smat(const Vec& v, int dim) {
  if (v.size() != svec_size(dim)) throw DimensionError("smat: length mismatch");
  Mat m(dim, dim);
  int idx = 0;
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i <= j; ++i) {
      m(i, j) = v(idx);
      m(j, i) = v(idx);
      ++idx;
    }
  }
  return SymMat(m);
}

}  // namespace dhinf
