#pragma once

#include <map>
#include <string>
#include <vector>

#include "dhinf/layout.hpp"
#include "dhinf/matrix_core.hpp"

namespace dhinf {

/// Matrix-valued affine function of the decision vector:
///   value(x) = constant + sum_i x_i * coeff_i
/// Coefficients are kept sparse (only variables that appear).
class AffineExpr {
 public:
  AffineExpr(int rows, int cols) : constant_(Mat::Zero(rows, cols)) {}

  static AffineExpr constant(const Mat& value);
  static AffineExpr zeros(int rows, int cols) { return AffineExpr(rows, cols); }
  /// The named variable itself (a 1x1 expression for scalars).
  static AffineExpr variable(const VarLayout& layout, const std::string& name);
  /// scale * s * I_dim for a scalar variable s.
  static AffineExpr scalar_identity(const VarLayout& layout, const std::string& name, int dim,
                                    double scale = 1.0);
  /// Dense block assembly; all blocks in a block-row share a row count and all
  /// blocks in a block-column share a column count.
  static AffineExpr blocks(const std::vector<std::vector<AffineExpr>>& grid);

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  const Mat& constant_part() const { return constant_; }
  const std::map<int, Mat>& terms() const { return terms_; }

  AffineExpr operator+(const AffineExpr& o) const;
  AffineExpr operator-(const AffineExpr& o) const;
  AffineExpr operator*(double s) const;
  AffineExpr operator*(const Mat& right) const;
  AffineExpr transpose() const;

  Mat evaluate(const Vec& x) const;

 private:
  void add_term(int var, const Mat& coeff);

  Mat constant_;
  std::map<int, Mat> terms_;

  friend AffineExpr operator*(const Mat& left, const AffineExpr& e);
};

AffineExpr operator*(const Mat& left, const AffineExpr& e);
inline AffineExpr operator*(double s, const AffineExpr& e) { return e * s; }

}  // namespace dhinf
