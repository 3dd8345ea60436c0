#include "dhinf/affine.hpp"

namespace dhinf {

AffineExpr AffineExpr::constant(const Mat& value) {
  AffineExpr e(static_cast<int>(value.rows()), static_cast<int>(value.cols()));
  e.constant_ = value;
  return e;
}

AffineExpr AffineExpr::variable(const VarLayout& layout, const std::string& name) {
  const VarEntry& v = layout.entry(name);
  AffineExpr e(v.rows, v.cols);
  for (int j = 0; j < v.cols; ++j) {
    for (int i = 0; i < v.rows; ++i) {
      if (v.kind == VarKind::Symmetric && i > j) continue;
      Mat c = Mat::Zero(v.rows, v.cols);
      c(i, j) = 1.0;
      if (v.kind == VarKind::Symmetric) c(j, i) = 1.0;
      e.add_term(layout.index(name, i, j), c);
    }
  }
  return e;
}

AffineExpr AffineExpr::scalar_identity(const VarLayout& layout, const std::string& name, int dim,
                                       double scale) {
  const VarEntry& v = layout.entry(name);
  if (v.kind != VarKind::Scalar) throw LayoutError("'" + name + "' is not a scalar variable");
  AffineExpr e(dim, dim);
  e.add_term(v.offset, scale * Mat::Identity(dim, dim));
  return e;
}

AffineExpr AffineExpr::blocks(const std::vector<std::vector<AffineExpr>>& grid) {
  if (grid.empty() || grid.front().empty()) throw DimensionError("empty block grid");
  const size_t br = grid.size();
  const size_t bc = grid.front().size();
  std::vector<int> row_off(br + 1, 0);
  std::vector<int> col_off(bc + 1, 0);
  for (size_t i = 0; i < br; ++i) {
    if (grid[i].size() != bc) throw DimensionError("ragged block grid");
    row_off[i + 1] = row_off[i] + grid[i][0].rows();
  }
  for (size_t j = 0; j < bc; ++j) col_off[j + 1] = col_off[j] + grid[0][j].cols();

  AffineExpr out(row_off[br], col_off[bc]);
  for (size_t i = 0; i < br; ++i) {
    for (size_t j = 0; j < bc; ++j) {
      const AffineExpr& b = grid[i][j];
      const int r = row_off[i + 1] - row_off[i];
      const int c = col_off[j + 1] - col_off[j];
      if (b.rows() != r || b.cols() != c) throw DimensionError("block grid dimension mismatch");
      out.constant_.block(row_off[i], col_off[j], r, c) = b.constant_;
      for (const auto& [var, coeff] : b.terms_) {
        auto it = out.terms_.find(var);
        if (it == out.terms_.end()) {
          it = out.terms_.emplace(var, Mat::Zero(out.rows(), out.cols())).first;
        }
        it->second.block(row_off[i], col_off[j], r, c) += coeff;
      }
    }
  }
  return out;
}

void AffineExpr::add_term(int var, const Mat& coeff) {
  auto it = terms_.find(var);
  if (it == terms_.end()) {
    terms_.emplace(var, coeff);
  } else {
    it->second += coeff;
  }
}

AffineExpr AffineExpr::operator+(const AffineExpr& o) const {
  if (rows() != o.rows() || cols() != o.cols()) throw DimensionError("affine sum shape mismatch");
  AffineExpr r = *this;
  r.constant_ += o.constant_;
  for (const auto& [var, c] : o.terms_) r.add_term(var, c);
  return r;
}

AffineExpr AffineExpr::operator-(const AffineExpr& o) const { return *this + o * -1.0; }

AffineExpr AffineExpr::operator*(double s) const {
  AffineExpr r = *this;
  r.constant_ *= s;
  for (auto& [var, c] : r.terms_) c *= s;
  return r;
}

AffineExpr AffineExpr::operator*(const Mat& right) const {
  if (cols() != right.rows()) throw DimensionError("affine right product shape mismatch");
  AffineExpr r(rows(), static_cast<int>(right.cols()));
  r.constant_ = constant_ * right;
  for (const auto& [var, c] : terms_) r.terms_.emplace(var, c * right);
  return r;
}

AffineExpr operator*(const Mat& left, const AffineExpr& e) {
  if (left.cols() != e.rows()) throw DimensionError("affine left product shape mismatch");
  AffineExpr r(static_cast<int>(left.rows()), e.cols());
  r.constant_ = left * e.constant_;
  for (const auto& [var, c] : e.terms_) r.terms_.emplace(var, left * c);
  return r;
}

AffineExpr AffineExpr::transpose() const {
  AffineExpr r(cols(), rows());
  r.constant_ = constant_.transpose();
  for (const auto& [var, c] : terms_) r.terms_.emplace(var, c.transpose());
  return r;
}

Mat AffineExpr::evaluate(const Vec& x) const {
  Mat v = constant_;
  for (const auto& [var, c] : terms_) v += x(var) * c;
  return v;
}

}  // namespace dhinf
