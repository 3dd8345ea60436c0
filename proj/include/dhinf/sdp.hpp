#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "dhinf/affine.hpp"
#include "dhinf/layout.hpp"
#include "dhinf/matrix_core.hpp"

namespace dhinf {

/// Constraint G0 + sum_i x_i G_i <= 0 (negative semidefinite). Only variables
/// with a nonzero coefficient are listed; terms are sorted by variable index.
struct AffineBlock {
  std::string label;
  SymMat g0;
  std::vector<std::pair<int, SymMat>> terms;

  int dim() const { return g0.dim(); }
  SymMat evaluate(const Vec& x) const;
  /// Throws DimensionError unless the expression is square.
  static AffineBlock from_expr(std::string label, const AffineExpr& e);
};

/// minimize 1/2 x^T P x + q^T x + constant
/// subject to every block <= 0 and x >= lower (entries may be -inf).
struct ConicProblem {
  int nvars = 0;
  SymMat P;
  Vec q;
  double constant = 0.0;
  std::vector<AffineBlock> blocks;
  Vec lower;

  /// Checks dimensions, symmetric coefficients, and P >= -1e-10 I.
  void validate() const;
  double objective(const Vec& x) const;
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };

std::string to_string(SolveStatus s);

struct ConicSolution {
  Vec x;
  SolveStatus status = SolveStatus::MaxIter;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double worst_violation = 0.0;
  double objective = 0.0;
  int iterations = 0;
};

struct SolverOptions {
  int max_iter = 50000;
  double feas_tol = 1e-6;
  double eps_abs = 1e-6;  // convergence tolerance on scaled residuals
  double eps_rel = 1e-6;
  double rho = 0.1;
  double sigma = 1e-6;
  double relaxation = 1.6;
  int adapt_interval = 100;
  double adapt_ratio = 5.0;
  /// Blocks are solved as G0 + shift*I <= 0 so that residual-level errors of
  /// the splitting land inside the original constraint.
  double interior_shift = 1e-5;
  int check_interval = 10;
  /// Infeasible is reported when no feasible point has been seen, the best
  /// violation improved by less than 5% over the last `infeasible_window`
  /// iterations and the primal residual is above `infeasible_floor`.
  int infeasible_window = 2000;
  double infeasible_floor = 1e-3;
  int scaling_passes = 15;
  /// Print residuals to std::clog every `verbose` iterations (0 = silent).
  int verbose = 0;

  bool operator==(const SolverOptions&) const = default;
};

struct FeasibilityReport {
  bool ok = false;
  double worst_violation = 0.0;
  int worst_block = -1;  // -1 when the worst entry is a lower bound (or no constraints)
};

/// worst_violation = max over blocks of the largest eigenvalue of the block,
/// and over bounded variables of (lower - x).
FeasibilityReport check_feasible(const Vec& x, const ConicProblem& prob, double tol);

/// Operator-splitting (ADMM) solver for ConicProblem. The object keeps its
/// iterate between calls, so consecutive solves with updated linear costs
/// are warm-started automatically.
class ConicSolver {
 public:
  ConicSolver(ConicProblem prob, SolverOptions opts = {});

  const ConicProblem& problem() const { return prob_; }
  const SolverOptions& options() const { return opts_; }

  void set_linear_cost(const Vec& q, double constant);
  /// Primal start; slack and multipliers are kept.
  void set_start(const Vec& x);
  ConicSolution solve();

  double rho() const { return rho_; }

 private:
  struct Segment {
    int block;
    int row;
    int dim;
  };

  void build_rows();
  void equilibrate();
  void rebuild_scaled();
  void factor();
  void project(Vec& v) const;
  Vec unscaled_x(const Vec& xs) const { return xs.cwiseProduct(var_scale_); }

  ConicProblem prob_;
  SolverOptions opts_;
  int n_ = 0;
  int m_ = 0;

  std::vector<Segment> segments_;
  std::vector<std::pair<int, int>> bound_rows_;  // (row, var)
  std::vector<std::pair<int, int>> row_index_;   // per block row: (i, j) within the block

  Eigen::SparseMatrix<double> A_;     // unscaled constraint map
  Vec g0_;                            // unscaled svec(G0), bound rows hold lower bounds
  Eigen::SparseMatrix<double> As_;    // scaled
  Eigen::SparseMatrix<double> AsT_;
  Mat Ps_;
  Mat AtA_;
  Vec qs_;
  Vec g0s_;                           // scaled, shifted block offsets / scaled bounds

  Vec var_scale_;
  std::vector<Vec> block_scale_;
  Vec bound_scale_;
  double cost_scale_ = 1.0;

  Eigen::LLT<Mat> kkt_;
  double rho_ = 0.1;

  Vec x_;
  Vec z_;
  Vec y_;
};

ConicSolution solve(const ConicProblem& prob, const SolverOptions& opts = {});

/// Objective written against named matrix variables:
///   sum tr(coeff^T V) + sum weight/2 ||target - V||_F^2 + constant.
/// Scalars are treated as 1x1 matrices.
struct QuadraticObjective {
  struct Linear {
    std::string var;
    Mat coeff;
  };
  struct Proximal {
    std::string var;
    Mat target;
    double weight = 0.0;
  };
  std::vector<Linear> linear;
  std::vector<Proximal> proximal;
  double constant = 0.0;

  double evaluate(const VarLayout& layout, const Vec& x) const;
};

/// Canonical form. Symmetric variables contribute one unknown per upper
/// triangle entry; off-diagonal unknowns carry weight 2 in the cost so that
/// trace inner products and Frobenius norms are preserved.
ConicProblem canonicalize(const QuadraticObjective& objective, std::vector<AffineBlock> blocks,
                          const VarLayout& layout);

/// Plain-text dump: a header line per object with its dimensions followed by
/// row-major entries, one matrix row per line.
void write_problem(std::ostream& os, const ConicProblem& prob);
ConicProblem read_problem(std::istream& is);

}  // namespace dhinf
