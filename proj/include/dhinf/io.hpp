#pragma once

#include <stdexcept>
#include <string>

#include "dhinf/lmi.hpp"

namespace dhinf {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One matrix row per line, comma separated, 17 significant digits.
void write_matrix_csv(const std::string& path, const Mat& m);
Mat read_matrix_csv(const std::string& path);

/// K<k>.csv, L<k>.csv, P.csv and beta.csv inside `dir` (created if needed).
void save_gains(const std::string& dir, const Gains& g);
/// Throws IoError for missing files and DimensionError for shapes that do
/// not fit the model.
Gains load_gains(const std::string& dir, const NetworkModel& model);

}  // namespace dhinf
