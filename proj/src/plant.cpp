#include "dhinf/plant.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace dhinf {

void Plant::validate() const {
  if (A.rows() < 1 || A.rows() != A.cols()) throw DimensionError("plant: A must be square");
  if (B.rows() != A.rows()) throw DimensionError("plant: B row count must equal n");
}

void SensorNode::validate(const Plant& plant) const {
  const std::string tag = "node " + std::to_string(index) + ": ";
  if (C.cols() != plant.n()) throw DimensionError(tag + "C must have n columns");
  if (D.rows() != C.rows() || D.cols() != plant.m()) {
    throw DimensionError(tag + "D must be r x m");
  }
  if (Dbar.rows() != C.rows()) throw DimensionError(tag + "Dbar must have r rows");
  if (!(alpha > 0.0)) throw std::invalid_argument(tag + "alpha must be positive");
}

CommGraph::CommGraph(int node_count, std::vector<std::pair<int, int>> edges)
    : n_(node_count), edges_(std::move(edges)), in_(node_count), out_(node_count) {
  if (node_count < 1) throw std::invalid_argument("graph needs at least one node");
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  for (const auto& [j, k] : edges_) {
    if (j < 1 || j > n_ || k < 1 || k > n_) {
      throw std::invalid_argument("edge (" + std::to_string(j) + "," + std::to_string(k) +
                                  ") references a node outside 1.." + std::to_string(n_));
    }
    if (j == k) throw std::invalid_argument("self-loop at node " + std::to_string(j));
    out_[j - 1].push_back(k);
    in_[k - 1].push_back(j);
  }
  for (auto& v : in_) std::sort(v.begin(), v.end());
  for (auto& v : out_) std::sort(v.begin(), v.end());
}

CommGraph CommGraph::directed_cycle(int node_count) {
  std::vector<std::pair<int, int>> e;
  if (node_count > 1) {
    for (int k = 1; k <= node_count; ++k) e.emplace_back(k, k % node_count + 1);
  }
  return CommGraph(node_count, e);
}

CommGraph CommGraph::undirected_cycle(int node_count) {
  std::vector<std::pair<int, int>> e;
  if (node_count > 1) {
    for (int k = 1; k <= node_count; ++k) {
      const int next = k % node_count + 1;
      e.emplace_back(k, next);
      e.emplace_back(next, k);
    }
  }
  return CommGraph(node_count, e);
}

void CommGraph::check_index(int k) const {
  if (k < 1 || k > n_) {
    throw std::out_of_range("node index " + std::to_string(k) + " outside 1.." +
                            std::to_string(n_));
  }
}

bool CommGraph::has_edge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(from, to));
}

const std::vector<int>& CommGraph::in_neighbors(int k) const {
  check_index(k);
  return in_[k - 1];
}

const std::vector<int>& CommGraph::out_neighbors(int k) const {
  check_index(k);
  return out_[k - 1];
}

bool CommGraph::balanced() const {
  for (int k = 0; k < n_; ++k) {
    if (in_[k].size() != out_[k].size()) return false;
  }
  return true;
}

bool CommGraph::symmetric() const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [this](const auto& e) { return has_edge(e.second, e.first); });
}

bool CommGraph::strongly_connected() const {
  auto reaches_all = [this](const std::vector<std::vector<int>>& adj) {
    std::vector<bool> seen(n_, false);
    std::queue<int> todo;
    todo.push(0);
    seen[0] = true;
    int count = 1;
    while (!todo.empty()) {
      const int u = todo.front();
      todo.pop();
      for (int v : adj[u]) {
        if (!seen[v - 1]) {
          seen[v - 1] = true;
          ++count;
          todo.push(v - 1);
        }
      }
    }
    return count == n_;
  };
  return reaches_all(out_) && reaches_all(in_);
}

int CommGraph::max_in_degree() const {
  int d = 0;
  for (const auto& v : in_) d = std::max(d, static_cast<int>(v.size()));
  return d;
}

Neighborhoods neighborhoods(const CommGraph& g, int k) {
  return {g.in_neighbors(k), g.out_neighbors(k)};
}

DerivedNode derive(const Plant& plant, const SensorNode& node, const CommGraph& g) {
  plant.validate();
  node.validate(plant);
  DerivedNode d;
  const Mat E = node.D * node.D.transpose() + node.Dbar * node.Dbar.transpose();
  d.E = SymMat(E);
  Eigen::LLT<Mat> llt(d.E.mat());
  if (llt.info() != Eigen::Success) {
    throw DegenerateNoiseError(node.index, "measurement noise degenerate at node " +
                                               std::to_string(node.index) +
                                               ": E_k is not positive definite");
  }
  d.E_inv = llt.solve(Mat::Identity(node.r(), node.r()));
  const int n = plant.n();
  const int m = plant.m();
  d.Atilde = plant.A + node.alpha * Mat::Identity(n, n) -
             plant.B * node.D.transpose() * d.E_inv * node.C;
  d.Btilde.resize(n, m + node.s());
  d.Btilde.leftCols(m) =
      plant.B * (Mat::Identity(m, m) - node.D.transpose() * d.E_inv * node.D);
  d.Btilde.rightCols(node.s()) = -plant.B * node.D.transpose() * d.E_inv * node.Dbar;
  d.p = g.in_degree(node.index);
  d.q = g.out_degree(node.index);
  return d;
}

bool AssumptionReport::all_controllable() const {
  return std::all_of(controllable.begin(), controllable.end(), [](bool b) { return b; });
}

int numerical_rank(const Mat& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = rel_tol * sv(0);
  return static_cast<int>((sv.array() > cutoff).count());
}

Mat controllability_matrix(const Mat& A, const Mat& B) {
  const int n = static_cast<int>(A.rows());
  const int w = static_cast<int>(B.cols());
  Mat ctrb(n, n * w);
  Mat block = B;
  for (int i = 0; i < n; ++i) {
    ctrb.middleCols(i * w, w) = block;
    block = A * block;
  }
  return ctrb;
}

AssumptionReport check_assumptions(const Plant& plant, const std::vector<SensorNode>& nodes,
                                   const CommGraph& g) {
  AssumptionReport r;
  r.connected = g.strongly_connected();
  r.balanced = g.balanced();
  for (const auto& node : nodes) {
    const DerivedNode d = derive(plant, node, g);
    const int rank = numerical_rank(controllability_matrix(d.Atilde, d.Btilde), 1e-8);
    r.controllability_rank.push_back(rank);
    r.controllable.push_back(rank == plant.n());
  }
  return r;
}

void pad_disturbances(Plant& plant, std::vector<SensorNode>& nodes, double eps) {
  const int n = plant.n();
  const int m = plant.m();
  Mat B(n, m + n);
  B << plant.B, eps * Mat::Identity(n, n);
  plant.B = B;
  for (auto& node : nodes) {
    const int r = node.r();
    Mat D = Mat::Zero(r, m + n);
    D.leftCols(m) = node.D;
    node.D = D;
    Mat Dbar(r, node.s() + r);
    Dbar << node.Dbar, eps * Mat::Identity(r, r);
    node.Dbar = Dbar;
  }
}

}  // namespace dhinf
