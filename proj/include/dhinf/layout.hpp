#pragma once

#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhinf/matrix_core.hpp"

namespace dhinf {

class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class VarKind { Scalar, Matrix, Symmetric };

struct VarEntry {
  std::string name;
  VarKind kind = VarKind::Scalar;
  int rows = 1;
  int cols = 1;
  int offset = 0;
  int count = 1;
  double lower = -std::numeric_limits<double>::infinity();  // scalars only
};

/// Maps named matrix variables onto a flat decision vector. General matrices
/// occupy rows*cols slots in column-major order; symmetric matrices occupy
/// their upper triangle (i <= j), column by column.
class VarLayout {
 public:
  void add_scalar(const std::string& name,
                  double lower = -std::numeric_limits<double>::infinity());
  void add_matrix(const std::string& name, int rows, int cols);
  void add_symmetric(const std::string& name, int dim);

  bool contains(const std::string& name) const { return lookup_.count(name) > 0; }
  const VarEntry& entry(const std::string& name) const;
  const std::vector<VarEntry>& entries() const { return entries_; }
  int size() const { return size_; }

  /// Flat index of entry (i, j). Symmetric variables fold (i, j) onto i <= j.
  int index(const std::string& name, int i = 0, int j = 0) const;

  Mat extract(const Vec& x, const std::string& name) const;
  double extract_scalar(const Vec& x, const std::string& name) const;
  void insert(Vec& x, const std::string& name, const Mat& value) const;
  void insert_scalar(Vec& x, const std::string& name, double value) const;

  /// Per-variable lower bounds (-inf where unbounded).
  Vec lower_bounds() const;

 private:
  void add(VarEntry e);

  std::vector<VarEntry> entries_;
  std::map<std::string, int> lookup_;
  int size_ = 0;
};

}  // namespace dhinf
