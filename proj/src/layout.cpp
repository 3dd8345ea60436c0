#include "dhinf/layout.hpp"

#include <utility>

namespace dhinf {

void VarLayout::add(VarEntry e) {
  if (contains(e.name)) throw LayoutError("layout collision: variable '" + e.name + "' already exists");
  e.offset = size_;
  size_ += e.count;
  lookup_[e.name] = static_cast<int>(entries_.size());
  entries_.push_back(std::move(e));
}

void VarLayout::add_scalar(const std::string& name, double lower) {
  VarEntry e;
  e.name = name;
  e.kind = VarKind::Scalar;
  e.lower = lower;
  add(std::move(e));
}

void VarLayout::add_matrix(const std::string& name, int rows, int cols) {
  if (rows < 1 || cols < 1) throw LayoutError("matrix variable '" + name + "' needs positive dims");
  VarEntry e;
  e.name = name;
  e.kind = VarKind::Matrix;
  e.rows = rows;
  e.cols = cols;
  e.count = rows * cols;
  add(std::move(e));
}

void VarLayout::add_symmetric(const std::string& name, int dim) {
  if (dim < 1) throw LayoutError("symmetric variable '" + name + "' needs positive dim");
  VarEntry e;
  e.name = name;
  e.kind = VarKind::Symmetric;
  e.rows = dim;
  e.cols = dim;
  e.count = svec_size(dim);
  add(std::move(e));
}

const VarEntry& VarLayout::entry(const std::string& name) const {
  const auto it = lookup_.find(name);
  if (it == lookup_.end()) throw LayoutError("unknown variable '" + name + "'");
  return entries_[it->second];
}

int VarLayout::index(const std::string& name, int i, int j) const {
  const VarEntry& e = entry(name);
  if (i < 0 || j < 0 || i >= e.rows || j >= e.cols) {
    throw LayoutError("index out of range for variable '" + name + "'");
  }
  switch (e.kind) {
    case VarKind::Scalar:
      return e.offset;
    case VarKind::Matrix:
      return e.offset + j * e.rows + i;
    case VarKind::Symmetric: {
      const int r = std::min(i, j);
      const int c = std::max(i, j);
      return e.offset + c * (c + 1) / 2 + r;
    }
  }
  return -1;
}

Mat VarLayout::extract(const Vec& x, const std::string& name) const {
  const VarEntry& e = entry(name);
  Mat m(e.rows, e.cols);
  for (int j = 0; j < e.cols; ++j) {
    for (int i = 0; i < e.rows; ++i) m(i, j) = x(index(name, i, j));
  }
  return m;
}

double VarLayout::extract_scalar(const Vec& x, const std::string& name) const {
  return x(index(name));
}

void VarLayout::insert(Vec& x, const std::string& name, const Mat& value) const {
  const VarEntry& e = entry(name);
  if (value.rows() != e.rows || value.cols() != e.cols) {
    throw DimensionError("insert: value has wrong shape for '" + name + "'");
  }
  for (int j = 0; j < e.cols; ++j) {
    for (int i = 0; i < e.rows; ++i) {
      if (e.kind == VarKind::Symmetric && i > j) continue;
      x(index(name, i, j)) = value(i, j);
    }
  }
}

void VarLayout::insert_scalar(Vec& x, const std::string& name, double value) const {
  x(index(name)) = value;
}

Vec VarLayout::lower_bounds() const {
  Vec lb = Vec::Constant(size_, -std::numeric_limits<double>::infinity());
  for (const auto& e : entries_) {
    if (e.kind == VarKind::Scalar) lb(e.offset) = e.lower;
  }
  return lb;
}

}  // namespace dhinf
