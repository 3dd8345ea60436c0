#include "dhinf/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dhinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double max_eig(const Mat& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

// Rows of a block in packed order: (i, j) with i <= j, column by column.
int packed_index(int i, int j) { return j * (j + 1) / 2 + i; }

}  // namespace

SymMat AffineBlock::evaluate(const Vec& x) const {
  Mat v = g0.mat();
  for (const auto& [var, c] : terms) v += x(var) * c.mat();
  return SymMat(v);
}

AffineBlock AffineBlock::from_expr(std::string label, const AffineExpr& e) {
  if (e.rows() != e.cols()) throw DimensionError("block '" + label + "' is not square");
  AffineBlock b;
  b.label = std::move(label);
  b.g0 = SymMat(e.constant_part());
  for (const auto& [var, c] : e.terms()) {
    if (c.cwiseAbs().maxCoeff() == 0.0) continue;
    b.terms.emplace_back(var, SymMat(c));
  }
  return b;
}

void ConicProblem::validate() const {
  if (nvars < 1) throw DimensionError("conic problem needs at least one variable");
  if (P.dim() != nvars || q.size() != nvars || lower.size() != nvars) {
    throw DimensionError("conic problem: P, q, lower must match nvars");
  }
  if (min_eigenvalue(P) < -1e-10) throw std::invalid_argument("conic problem: P is not PSD");
  for (const auto& b : blocks) {
    for (const auto& [var, c] : b.terms) {
      if (var < 0 || var >= nvars) throw DimensionError("block '" + b.label + "' variable out of range");
      if (c.dim() != b.dim()) throw DimensionError("block '" + b.label + "' coefficient dimension");
    }
  }
}

double ConicProblem::objective(const Vec& x) const {
  return 0.5 * x.dot(P.mat() * x) + q.dot(x) + constant;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

FeasibilityReport check_feasible(const Vec& x, const ConicProblem& prob, double tol) {
  FeasibilityReport r;
  r.worst_violation = -kInf;
  for (size_t b = 0; b < prob.blocks.size(); ++b) {
    const double v = max_eig(prob.blocks[b].evaluate(x).mat());
    if (v > r.worst_violation) {
      r.worst_violation = v;
      r.worst_block = static_cast<int>(b);
    }
  }
  for (int i = 0; i < prob.nvars; ++i) {
    if (std::isfinite(prob.lower(i)) && prob.lower(i) - x(i) > r.worst_violation) {
      r.worst_violation = prob.lower(i) - x(i);
      r.worst_block = -1;
    }
  }
  if (r.worst_violation == -kInf) r.worst_violation = 0.0;
  r.ok = r.worst_violation <= tol;
  return r;
}

// ---------------------------------------------------------------------------

ConicSolver::ConicSolver(ConicProblem prob, SolverOptions opts)
    : prob_(std::move(prob)), opts_(opts), n_(prob_.nvars), rho_(opts.rho) {
  prob_.validate();
  build_rows();
  equilibrate();
  rebuild_scaled();
  factor();
  x_ = Vec::Zero(n_);
  z_ = Vec::Zero(m_);
  y_ = Vec::Zero(m_);
  project(z_);
}

void ConicSolver::build_rows() {
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> g0;
  int row = 0;
  for (size_t b = 0; b < prob_.blocks.size(); ++b) {
    const AffineBlock& blk = prob_.blocks[b];
    const int d = blk.dim();
    segments_.push_back({static_cast<int>(b), row, d});
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i <= j; ++i) {
        row_index_.emplace_back(i, j);
        g0.push_back(i == j ? blk.g0(i, j) : M_SQRT2 * blk.g0(i, j));
      }
    }
    for (const auto& [var, c] : blk.terms) {
      for (int j = 0; j < d; ++j) {
        for (int i = 0; i <= j; ++i) {
          const double v = c(i, j);
          if (v != 0.0) trip.emplace_back(row + packed_index(i, j), var, i == j ? v : M_SQRT2 * v);
        }
      }
    }
    row += svec_size(d);
  }
  for (int v = 0; v < n_; ++v) {
    if (std::isfinite(prob_.lower(v))) {
      bound_rows_.emplace_back(row, v);
      row_index_.emplace_back(-1, -1);
      g0.push_back(prob_.lower(v));
      trip.emplace_back(row, v, 1.0);
      ++row;
    }
  }
  m_ = row;
  A_.resize(m_, n_);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();
  g0_ = Eigen::Map<Vec>(g0.data(), static_cast<Eigen::Index>(g0.size()));
}

void ConicSolver::equilibrate() {
  var_scale_ = Vec::Ones(n_);
  block_scale_.clear();
  for (const auto& s : segments_) block_scale_.push_back(Vec::Ones(s.dim));
  bound_scale_ = Vec::Ones(static_cast<Eigen::Index>(bound_rows_.size()));

  const Mat& P = prob_.P.mat();
  // Map each row to its segment for the row-scale lookups below.
  std::vector<int> row_segment(m_, -1);
  for (size_t s = 0; s < segments_.size(); ++s) {
    for (int r = 0; r < svec_size(segments_[s].dim); ++r) row_segment[segments_[s].row + r] = static_cast<int>(s);
  }
  std::vector<int> row_bound(m_, -1);
  for (size_t b = 0; b < bound_rows_.size(); ++b) row_bound[bound_rows_[b].first] = static_cast<int>(b);

  auto rscale = [&](int r) {
    if (row_segment[r] >= 0) {
      const auto [i, j] = row_index_[r];
      const Vec& d = block_scale_[row_segment[r]];
      return d(i) * d(j);
    }
    return bound_scale_(row_bound[r]);
  };

  for (int pass = 0; pass < opts_.scaling_passes; ++pass) {
    Vec col_norm = Vec::Zero(n_);
    Vec row_norm = Vec::Zero(m_);
    for (int c = 0; c < n_; ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, c); it; ++it) {
        const double v = std::abs(it.value()) * rscale(static_cast<int>(it.row())) * var_scale_(c);
        col_norm(c) = std::max(col_norm(c), v);
        row_norm(it.row()) = std::max(row_norm(it.row()), v);
      }
      for (int r = 0; r < n_; ++r) {
        col_norm(c) = std::max(col_norm(c), std::abs(P(r, c)) * var_scale_(r) * var_scale_(c));
      }
    }
    for (int c = 0; c < n_; ++c) {
      if (col_norm(c) > 0.0) var_scale_(c) = std::clamp(var_scale_(c) / std::sqrt(col_norm(c)), 1e-4, 1e4);
    }
    for (size_t s = 0; s < segments_.size(); ++s) {
      const int d = segments_[s].dim;
      Vec idx_norm = Vec::Zero(d);
      for (int j = 0; j < d; ++j) {
        for (int i = 0; i <= j; ++i) {
          const double v = row_norm(segments_[s].row + packed_index(i, j));
          idx_norm(i) = std::max(idx_norm(i), v);
          idx_norm(j) = std::max(idx_norm(j), v);
        }
      }
      for (int a = 0; a < d; ++a) {
        if (idx_norm(a) > 0.0) {
          block_scale_[s](a) = std::clamp(block_scale_[s](a) / std::sqrt(idx_norm(a)), 1e-4, 1e4);
        }
      }
    }
    for (size_t b = 0; b < bound_rows_.size(); ++b) {
      const double v = row_norm(bound_rows_[b].first);
      if (v > 0.0) bound_scale_(b) = std::clamp(bound_scale_(b) / std::sqrt(v), 1e-4, 1e4);
    }
  }

  // Row scales, materialized once.
  Vec rs(m_);
  for (int r = 0; r < m_; ++r) rs(r) = rscale(r);

  As_ = rs.asDiagonal() * A_ * var_scale_.asDiagonal();
  As_.makeCompressed();
  AsT_ = As_.transpose();
  Ps_ = var_scale_.asDiagonal() * P * var_scale_.asDiagonal();
  AtA_ = Mat(AsT_ * As_);

  double pnorm = 0.0;
  for (int c = 0; c < n_; ++c) pnorm += Ps_.col(c).cwiseAbs().maxCoeff();
  pnorm /= n_;
  const double qnorm = inf_norm(prob_.q.cwiseProduct(var_scale_));
  const double denom = std::max(pnorm, qnorm);
  cost_scale_ = denom > 0.0 ? std::clamp(1.0 / denom, 1e-4, 1e4) : 1.0;

  // Scaled, shifted offsets: block rows hold svec(D (G0 + shift I) D), bound
  // rows hold the scaled lower bound.
  g0s_.resize(m_);
  for (int r = 0; r < m_; ++r) {
    double g = g0_(r);
    if (row_segment[r] >= 0) {
      const auto [i, j] = row_index_[r];
      if (i == j) g += opts_.interior_shift;
    }
    g0s_(r) = rs(r) * g;
  }
}

void ConicSolver::rebuild_scaled() {
  Ps_ *= cost_scale_;
  qs_ = cost_scale_ * prob_.q.cwiseProduct(var_scale_);
}

void ConicSolver::factor() {
  Mat K = Ps_ + AtA_ * rho_;
  K.diagonal().array() += opts_.sigma;
  kkt_.compute(K);
  if (kkt_.info() != Eigen::Success) throw NumericalError("splitting solver: KKT factorization failed");
}

void ConicSolver::set_linear_cost(const Vec& q, double constant) {
  if (q.size() != n_) throw DimensionError("set_linear_cost: wrong length");
  prob_.q = q;
  prob_.constant = constant;
  qs_ = cost_scale_ * q.cwiseProduct(var_scale_);
}

void ConicSolver::set_start(const Vec& x) {
  if (x.size() != n_) throw DimensionError("set_start: wrong length");
  x_ = x.cwiseQuotient(var_scale_);
  z_ = As_ * x_;
  project(z_);
}

void ConicSolver::project(Vec& v) const {
  // Block rows: want smat(v) + G0s <= 0.
  for (const auto& s : segments_) {
    if (s.dim == 1) {
      const double w = v(s.row) + g0s_(s.row);
      if (w > 0.0) v(s.row) -= w;
      continue;
    }
    Mat w(s.dim, s.dim);
    for (int j = 0; j < s.dim; ++j) {
      for (int i = 0; i <= j; ++i) {
        const int r = s.row + packed_index(i, j);
        const double val = (i == j) ? v(r) + g0s_(r) : (v(r) + g0s_(r)) / M_SQRT2;
        w(i, j) = val;
        w(j, i) = val;
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(w);
    const Vec& ev = es.eigenvalues();
    if (ev(s.dim - 1) <= 0.0) continue;
    int first_pos = 0;
    while (first_pos < s.dim && ev(first_pos) <= 0.0) ++first_pos;
    const int k = s.dim - first_pos;
    const Mat V = es.eigenvectors().rightCols(k);
    const Mat pos = V * ev.tail(k).asDiagonal() * V.transpose();
    for (int j = 0; j < s.dim; ++j) {
      for (int i = 0; i <= j; ++i) {
        v(s.row + packed_index(i, j)) -= (i == j) ? pos(i, j) : M_SQRT2 * pos(i, j);
      }
    }
  }
  for (const auto& br : bound_rows_) v(br.first) = std::max(v(br.first), g0s_(br.first));
}

ConicSolution ConicSolver::solve() {
  const double alpha = opts_.relaxation;
  ConicSolution best;
  best.status = SolveStatus::MaxIter;
  bool have_best = false;
  bool best_feasible = false;
  std::deque<double> prim_history;  // best violation at each check
  const bool pure_feasibility = prob_.P.mat().isZero(0.0) && qs_.isZero(0.0);
  const int window_checks = std::max(1, opts_.infeasible_window / std::max(1, opts_.check_interval));

  Vec xt(n_);
  Vec zt(m_);
  Vec zr(m_);
  Vec rhs(n_);
  double prim = kInf;
  double dual = kInf;

  for (int it = 1; it <= opts_.max_iter; ++it) {
    rhs = opts_.sigma * x_ - qs_ + AsT_ * (rho_ * z_ - y_);
    xt = kkt_.solve(rhs);
    zt = As_ * xt;
    x_ = alpha * xt + (1.0 - alpha) * x_;
    zr = alpha * zt + (1.0 - alpha) * z_;
    Vec znew = zr + y_ / rho_;
    project(znew);
    y_ += rho_ * (zr - znew);
    z_ = std::move(znew);

    const bool check = (it % opts_.check_interval == 0) || it == opts_.max_iter;
    const bool adapt = opts_.adapt_interval > 0 && (it % opts_.adapt_interval == 0);
    if (!check && !adapt) continue;

    const Vec Ax = As_ * x_;
    const Vec Px = Ps_ * x_;
    const Vec Aty = AsT_ * y_;
    prim = inf_norm(Ax - z_);
    dual = inf_norm(Px + qs_ + Aty);
    if (!std::isfinite(prim) || !std::isfinite(dual)) {
      throw NumericalError("splitting solver diverged (non-finite residuals)");
    }
    const double prim_scale = std::max(inf_norm(Ax), inf_norm(z_));
    const double dual_scale = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(qs_)});

    if (check) {
      const Vec x = unscaled_x(x_);
      const FeasibilityReport fr = check_feasible(x, prob_, opts_.feas_tol);
      const double obj = prob_.objective(x);
      if (opts_.verbose > 0 && it % opts_.verbose == 0) {
        std::clog << "it " << it << " prim " << prim << " dual " << dual << " rho " << rho_
                  << " viol " << fr.worst_violation << " (block " << fr.worst_block << ") obj " << obj
                  << '\n';
      }
      const bool better = !have_best || (fr.ok && !best_feasible) ||
                          (fr.ok && best_feasible && obj < best.objective) ||
                          (!fr.ok && !best_feasible && fr.worst_violation < best.worst_violation);
      if (better) {
        have_best = true;
        best_feasible = fr.ok;
        best.x = x;
        best.objective = obj;
        best.worst_violation = fr.worst_violation;
        best.primal_residual = prim;
        best.dual_residual = dual;
        best.iterations = it;
      }
      // With a constant objective any feasible point is optimal.
      const bool converged = (pure_feasibility && fr.ok) ||
                             (prim <= opts_.eps_abs + opts_.eps_rel * prim_scale &&
                              dual <= opts_.eps_abs + opts_.eps_rel * dual_scale);
      if (converged && fr.ok) {
        ConicSolution sol;
        sol.x = x;
        sol.status = SolveStatus::Optimal;
        sol.primal_residual = prim;
        sol.dual_residual = dual;
        sol.worst_violation = fr.worst_violation;
        sol.objective = obj;
        sol.iterations = it;
        return sol;
      }

      prim_history.push_back(best.worst_violation);
      if (static_cast<int>(prim_history.size()) > window_checks) prim_history.pop_front();
      if (static_cast<int>(prim_history.size()) == window_checks) {
        // The best violation found so far has stalled while the splitting
        // residual stays large.
        const bool stalled = !best_feasible && prim > opts_.infeasible_floor &&
                             prim_history.back() >= 0.95 * prim_history.front();
        if (stalled) {
          ConicSolution sol = best;
          sol.status = SolveStatus::Infeasible;
          sol.iterations = it;
          return sol;
        }
      }
    }

    if (adapt) {
      const double pn = prim;
      const double dn = dual;
      double new_rho = rho_;
      if (pn > opts_.adapt_ratio * dn) {
        new_rho = std::min(rho_ * 2.0, 1e6);
      } else if (dn > opts_.adapt_ratio * pn) {
        new_rho = std::max(rho_ / 2.0, 1e-6);
      }
      if (new_rho != rho_) {
        rho_ = new_rho;
        factor();
        prim_history.clear();
      }
    }
  }
  best.status = SolveStatus::MaxIter;
  best.iterations = opts_.max_iter;
  return best;
}

ConicSolution solve(const ConicProblem& prob, const SolverOptions& opts) {
  ConicSolver solver(prob, opts);
  return solver.solve();
}

// ---------------------------------------------------------------------------

double QuadraticObjective::evaluate(const VarLayout& layout, const Vec& x) const {
  double f = constant;
  for (const auto& t : linear) f += trace_inner(t.coeff, layout.extract(x, t.var));
  for (const auto& t : proximal) {
    const Mat d = t.target - layout.extract(x, t.var);
    f += 0.5 * t.weight * trace_inner(d, d);
  }
  return f;
}

ConicProblem canonicalize(const QuadraticObjective& objective, std::vector<AffineBlock> blocks,
                          const VarLayout& layout) {
  const int n = layout.size();
  Mat P = Mat::Zero(n, n);
  Vec q = Vec::Zero(n);
  double constant = objective.constant;

  auto check_shape = [&](const VarEntry& e, const Mat& m) {
    if (m.rows() != e.rows || m.cols() != e.cols) {
      throw DimensionError("objective term shape mismatch for '" + e.name + "'");
    }
  };

  for (const auto& t : objective.linear) {
    const VarEntry& e = layout.entry(t.var);
    check_shape(e, t.coeff);
    for (int j = 0; j < e.cols; ++j) {
      for (int i = 0; i < e.rows; ++i) {
        // Symmetric unknowns collect both (i, j) and (j, i).
        q(layout.index(t.var, i, j)) += t.coeff(i, j);
      }
    }
  }
  for (const auto& t : objective.proximal) {
    const VarEntry& e = layout.entry(t.var);
    check_shape(e, t.target);
    for (int j = 0; j < e.cols; ++j) {
      for (int i = 0; i < e.rows; ++i) {
        const int k = layout.index(t.var, i, j);
        P(k, k) += t.weight;
        q(k) -= t.weight * t.target(i, j);
        constant += 0.5 * t.weight * t.target(i, j) * t.target(i, j);
      }
    }
  }

  ConicProblem prob;
  prob.nvars = n;
  prob.P = SymMat(P);
  prob.q = q;
  prob.constant = constant;
  prob.blocks = std::move(blocks);
  prob.lower = layout.lower_bounds();
  return prob;
}

// ---------------------------------------------------------------------------

namespace {

void write_matrix(std::ostream& os, const Mat& m) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << m(i, j);
    }
    os << '\n';
  }
}

Mat read_matrix(std::istream& is, int rows, int cols) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      std::string tok;
      if (!(is >> tok)) throw std::runtime_error("problem dump: truncated matrix");
      m(i, j) = std::stod(tok);
    }
  }
  return m;
}

void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) {
    throw std::runtime_error("problem dump: expected '" + word + "', got '" + tok + "'");
  }
}

}  // namespace

void write_problem(std::ostream& os, const ConicProblem& prob) {
  const auto old_prec = os.precision(17);
  os << "conic_problem " << prob.nvars << ' ' << prob.blocks.size() << '\n';
  os << "P " << prob.nvars << ' ' << prob.nvars << '\n';
  write_matrix(os, prob.P.mat());
  os << "q " << prob.nvars << ' ' << 1 << '\n';
  write_matrix(os, prob.q);
  os << "constant 1 1\n" << prob.constant << '\n';
  os << "lower " << prob.nvars << ' ' << 1 << '\n';
  write_matrix(os, prob.lower);
  for (const auto& b : prob.blocks) {
    os << "block " << (b.label.empty() ? "-" : b.label) << ' ' << b.dim() << ' ' << b.terms.size()
       << '\n';
    os << "G0 " << b.dim() << ' ' << b.dim() << '\n';
    write_matrix(os, b.g0.mat());
    for (const auto& [var, c] : b.terms) {
      os << "G " << var << ' ' << b.dim() << ' ' << b.dim() << '\n';
      write_matrix(os, c.mat());
    }
  }
  os.precision(old_prec);
}

ConicProblem read_problem(std::istream& is) {
  ConicProblem prob;
  size_t nblocks = 0;
  int r = 0;
  int c = 0;
  expect(is, "conic_problem");
  is >> prob.nvars >> nblocks;
  expect(is, "P");
  is >> r >> c;
  prob.P = SymMat(read_matrix(is, r, c));
  expect(is, "q");
  is >> r >> c;
  prob.q = read_matrix(is, r, c);
  expect(is, "constant");
  is >> r >> c;
  prob.constant = read_matrix(is, 1, 1)(0, 0);
  expect(is, "lower");
  is >> r >> c;
  prob.lower = read_matrix(is, r, c);
  for (size_t b = 0; b < nblocks; ++b) {
    AffineBlock blk;
    int dim = 0;
    size_t nterms = 0;
    expect(is, "block");
    is >> blk.label >> dim >> nterms;
    if (blk.label == "-") blk.label.clear();
    expect(is, "G0");
    is >> r >> c;
    blk.g0 = SymMat(read_matrix(is, r, c));
    for (size_t t = 0; t < nterms; ++t) {
      int var = 0;
      expect(is, "G");
      is >> var >> r >> c;
      blk.terms.emplace_back(var, SymMat(read_matrix(is, r, c)));
    }
    prob.blocks.push_back(std::move(blk));
  }
  if (!is) throw std::runtime_error("problem dump: malformed input");
  prob.validate();
  return prob;
}

}  // namespace dhinf
