#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dhinf/matrix_core.hpp"

namespace dhinf {

/// xdot = A x + B xi
struct Plant {
  Mat A;
  Mat B;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  void validate() const;
};

/// y_k = C x + D xi + Dbar eta_k. Indices are 1-based, as in the configs.
struct SensorNode {
  int index = 1;
  Mat C;
  Mat D;
  Mat Dbar;
  double alpha = 1.0;

  int r() const { return static_cast<int>(C.rows()); }
  int s() const { return static_cast<int>(Dbar.cols()); }
  void validate(const Plant& plant) const;
};

/// Directed graph on nodes 1..N; an edge (j, k) means j sends to k.
class CommGraph {
 public:
  CommGraph() = default;
  CommGraph(int node_count, std::vector<std::pair<int, int>> edges);

  static CommGraph directed_cycle(int node_count);
  static CommGraph undirected_cycle(int node_count);

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  bool has_edge(int from, int to) const;

  /// N_k: nodes k receives from.
  const std::vector<int>& in_neighbors(int k) const;
  /// M_k: nodes k sends to.
  const std::vector<int>& out_neighbors(int k) const;
  int in_degree(int k) const { return static_cast<int>(in_neighbors(k).size()); }
  int out_degree(int k) const { return static_cast<int>(out_neighbors(k).size()); }

  bool balanced() const;
  bool strongly_connected() const;
  bool symmetric() const;
  int max_in_degree() const;

 private:
  void check_index(int k) const;

  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

struct Neighborhoods {
  std::vector<int> in;   // N_k
  std::vector<int> out;  // M_k
};

Neighborhoods neighborhoods(const CommGraph& g, int k);

/// Quantities of one node that do not depend on decision variables.
struct DerivedNode {
  SymMat E;      // D D^T + Dbar Dbar^T
  Mat E_inv;
  Mat Atilde;    // A + alpha I - B D^T E^-1 C
  Mat Btilde;    // [B (I - D^T E^-1 D)   -B D^T E^-1 Dbar]
  int p = 0;     // in-degree
  int q = 0;     // out-degree
};

class DegenerateNoiseError : public std::runtime_error {
 public:
  DegenerateNoiseError(int node, const std::string& what)
      : std::runtime_error(what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

/// Throws DegenerateNoiseError when E_k is not positive definite.
DerivedNode derive(const Plant& plant, const SensorNode& node, const CommGraph& g);

struct AssumptionReport {
  bool connected = false;  // strong connectivity
  bool balanced = false;
  std::vector<bool> controllable;  // per node, in node order
  std::vector<int> controllability_rank;

  bool all_controllable() const;
  bool passed() const { return connected && balanced && all_controllable(); }
};

/// Numerical rank from singular values with relative tolerance.
int numerical_rank(const Mat& m, double rel_tol = 1e-8);
Mat controllability_matrix(const Mat& A, const Mat& B);

AssumptionReport check_assumptions(const Plant& plant, const std::vector<SensorNode>& nodes,
                                   const CommGraph& g);

/// Appends eps * I columns to B (zero columns to every D_k) and eps * I
/// columns to every Dbar_k. Used when controllability fails.
void pad_disturbances(Plant& plant, std::vector<SensorNode>& nodes, double eps);

}  // namespace dhinf
