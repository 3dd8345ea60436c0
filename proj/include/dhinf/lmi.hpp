#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dhinf/layout.hpp"
#include "dhinf/plant.hpp"
#include "dhinf/sdp.hpp"

namespace dhinf {

/// Plant, sensors and graph together with the per-node derived matrices.
struct NetworkModel {
  Plant plant;
  std::vector<SensorNode> nodes;  // nodes[k-1] has index k
  CommGraph graph;
  std::vector<DerivedNode> derived;

  static NetworkModel build(Plant plant, std::vector<SensorNode> nodes, CommGraph graph);

  int size() const { return static_cast<int>(nodes.size()); }
  int n() const { return plant.n(); }
  const SensorNode& node(int k) const { return nodes.at(k - 1); }
  const DerivedNode& derived_of(int k) const { return derived.at(k - 1); }
};

struct LmiParams {
  double rho = 1e4;
  /// Margin of the stability and coupling inequalities.
  double delta = 1e-4;
  /// Copies of X are constrained to X >= delta_pd I.
  double delta_pd = 1e-6;

  bool operator==(const LmiParams&) const = default;
};

// Variable names shared by the centralized and the per-node layouts. A node's
// local copy X_j^k is stored under the same name as the global X_j.
std::string x_name(int j);
std::string f_name(int k);
inline const char* beta_name() { return "beta"; }

/// The three inequalities of node k (stability, couplings, feasible set),
/// written against `layout`. When the layout has no "beta" variable,
/// `fixed_beta` supplies the constant value. The stability block carries the
/// margin -delta*diag(X_k, 0), the couplings block -delta*I.
std::vector<AffineBlock> build_node_lmis(const NetworkModel& model, int k, const VarLayout& layout,
                                         const LmiParams& params,
                                         std::optional<double> fixed_beta = std::nullopt);

/// Centralized LMIs of node k over variables (beta, X_1..X_N, F_1..F_N).
std::vector<AffineBlock> build_centralized(const NetworkModel& model, int k, const VarLayout& layout,
                                           const LmiParams& params,
                                           std::optional<double> fixed_beta = std::nullopt);

/// Decoupled LMIs of node k over its local tuple (F_k, beta^k, copies of X).
std::vector<AffineBlock> build_decoupled(const NetworkModel& model, int k, const VarLayout& layout,
                                         const LmiParams& params,
                                         std::optional<double> fixed_beta = std::nullopt);

/// X >= delta_pd I for every listed symmetric variable.
std::vector<AffineBlock> positivity_blocks(const VarLayout& layout, const std::vector<int>& copies,
                                           double delta_pd);

VarLayout centralized_layout(const NetworkModel& model, bool variable_beta);

struct CentralizedProblem {
  VarLayout layout;
  ConicProblem problem;
};

/// minimize -beta subject to all nodes' inequalities (or feasibility only when
/// beta is fixed).
CentralizedProblem centralized_problem(const NetworkModel& model, const LmiParams& params,
                                       std::optional<double> fixed_beta = std::nullopt);

struct Gains {
  std::vector<Mat> K;
  std::vector<Mat> L;
  SymMat P;
  double beta = 0.0;
};

/// K_k = X_k^-1 F_k, L_k = (X_k^-1 C_k^T + B D_k^T) E_k^-1, P = mean of X_k.
/// Throws NumericalError when some X_k has condition number above 1e12.
Gains extract_gains(const std::vector<SymMat>& X, const std::vector<Mat>& F,
                    const NetworkModel& model);

struct BoundCheck {
  bool ok = false;
  double f_norm = 0.0;
  double bound = 0.0;
};

/// ||F_k||_F < sqrt(n rho) ||X_k^{1/2}||_F^2, a consequence of the feasible-set
/// inequality F^T X^-1 F < rho X.
BoundCheck theorem1_bounds(const SymMat& X, const Mat& F, double rho);

struct CentralizedResult {
  ConicSolution solution;
  double beta = 0.0;
  /// Smallest beta found infeasible (equal to beta when the direct solve
  /// converged or beta was fixed; +inf when no infeasible value was met).
  double beta_upper = 0.0;
  int feasibility_solves = 0;
  std::vector<SymMat> X;
  std::vector<Mat> F;
};

/// Maximizing beta: a direct solve of the max-beta problem for at most
/// `estimate_iter` iterations; if it has not converged, its beta seeds a
/// bracket-and-bisect search over fixed-beta feasibility problems, stopped
/// once the bracket is narrower than rel_tol * beta.
struct BetaSearch {
  int estimate_iter = 5000;
  double rel_tol = 1e-3;
  double floor = 1e-3;
  int max_solves = 60;
};

/// With fixed_beta only the feasibility problem is solved. The returned
/// solution of a beta search is the best certified feasible point.
CentralizedResult solve_centralized(const NetworkModel& model, const LmiParams& params,
                                    std::optional<double> fixed_beta, const SolverOptions& opts,
                                    const BetaSearch& search = {});

}  // namespace dhinf
