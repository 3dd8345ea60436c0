#include "dhinf/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace dhinf {

namespace fs = std::filesystem;

void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError(path + ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows[0].size()) throw IoError(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": empty matrix");
  Mat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void save_gains(const std::string& dir, const Gains& g) {
  fs::create_directories(dir);
  const fs::path d(dir);
  for (std::size_t k = 0; k < g.K.size(); ++k) {
    write_matrix_csv((d / ("K" + std::to_string(k + 1) + ".csv")).string(), g.K[k]);
    write_matrix_csv((d / ("L" + std::to_string(k + 1) + ".csv")).string(), g.L[k]);
  }
  write_matrix_csv((d / "P.csv").string(), g.P.mat());
  write_matrix_csv((d / "beta.csv").string(), Mat::Constant(1, 1, g.beta));
}

Gains load_gains(const std::string& dir, const NetworkModel& model) {
  const fs::path d(dir);
  if (!fs::is_directory(d)) throw IoError("gains directory " + dir + " does not exist");
  const int n = model.n();
  Gains g;
  for (int k = 1; k <= model.size(); ++k) {
    Mat K = read_matrix_csv((d / ("K" + std::to_string(k) + ".csv")).string());
    Mat L = read_matrix_csv((d / ("L" + std::to_string(k) + ".csv")).string());
    if (K.rows() != n || K.cols() != n) throw DimensionError("K" + std::to_string(k) + " must be n x n");
    if (L.rows() != n || L.cols() != model.node(k).r()) {
      throw DimensionError("L" + std::to_string(k) + " must be n x r_k");
    }
    g.K.push_back(std::move(K));
    g.L.push_back(std::move(L));
  }
  const Mat P = read_matrix_csv((d / "P.csv").string());
  if (P.rows() != n || P.cols() != n) throw DimensionError("P must be n x n");
  g.P = SymMat(P);
  const Mat beta = read_matrix_csv((d / "beta.csv").string());
  if (beta.size() != 1) throw DimensionError("beta.csv must hold one value");
  g.beta = beta(0, 0);
  return g;
}

}  // namespace dhinf
