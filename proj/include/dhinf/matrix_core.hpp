#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace dhinf {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense symmetric matrix. Construction symmetrizes the input as (S + S^T)/2,
/// so every stored instance is exactly symmetric.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(const Mat& m);
  explicit SymMat(int dim) : m_(Mat::Zero(dim, dim)) {}

  static SymMat identity(int dim, double scale = 1.0);
  static SymMat zero(int dim) { return SymMat(dim); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator*(double s) const;
  SymMat operator-() const { return *this * -1.0; }
  bool operator==(const SymMat& o) const { return m_ == o.m_; }

 private:
  Mat m_;
};

inline SymMat operator*(double s, const SymMat& m) { return m * s; }

struct EigenPair {
  Vec values;  // ascending
  Mat vectors; // columns are orthonormal eigenvectors
};

struct Norms {
  double frobenius = 0.0;
  double spectral = 0.0;
};

/// Column-stacking vectorization.
Vec vec(const Mat& m);
Mat unvec(const Vec& v, int rows, int cols);

/// tr(a^T b).
double trace_inner(const Mat& a, const Mat& b);

/// Throws NumericalError when the decomposition fails or does not reconstruct
/// the input to 1e-10 * max(1, ||s||).
EigenPair sym_eigen(const SymMat& s);

/// Frobenius-nearest positive semidefinite matrix (negative eigenvalues clamped).
SymMat project_psd(const SymMat& s);

double max_eigenvalue(const SymMat& s);
double min_eigenvalue(const SymMat& s);

Norms norms(const Mat& m);

/// Principal square root of a PSD matrix.
SymMat sqrt_psd(const SymMat& s);

// Packed symmetric layout: upper triangle, column by column, entries copied
// unscaled so that smat(svec(s)) == s bit for bit.
int svec_size(int dim);
Vec svec(const SymMat& s);
SymMat smat(const Vec& v, int dim);
int dim_from_svec_size(int size);

}  // namespace dhinf
