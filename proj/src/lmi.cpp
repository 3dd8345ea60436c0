#include "dhinf/lmi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dhinf/affine.hpp"

namespace dhinf {

NetworkModel NetworkModel::build(Plant plant, std::vector<SensorNode> nodes, CommGraph graph) {
  NetworkModel m;
  m.plant = std::move(plant);
  m.nodes = std::move(nodes);
  m.graph = std::move(graph);
  m.plant.validate();
  if (static_cast<int>(m.nodes.size()) != m.graph.size()) {
    throw std::invalid_argument("node count does not match graph size");
  }
  for (size_t i = 0; i < m.nodes.size(); ++i) {
    if (m.nodes[i].index != static_cast<int>(i) + 1) {
      throw std::invalid_argument("nodes must be listed in index order 1..N");
    }
    m.derived.push_back(derive(m.plant, m.nodes[i], m.graph));
  }
  return m;
}

std::string x_name(int j) { return "X" + std::to_string(j); }
std::string f_name(int k) { return "F" + std::to_string(k); }

std::vector<AffineBlock> build_node_lmis(const NetworkModel& model, int k, const VarLayout& layout,
                                         const LmiParams& params, std::optional<double> fixed_beta) {
  const int n = model.n();
  const SensorNode& node = model.node(k);
  const DerivedNode& d = model.derived_of(k);
  const std::vector<int>& in = model.graph.in_neighbors(k);
  const Mat I = Mat::Identity(n, n);

  for (int j : in) {
    if (!layout.contains(x_name(j))) {
      throw LayoutError("node " + std::to_string(k) + ": layout lacks neighbor variable " + x_name(j));
    }
  }

  const AffineExpr X = AffineExpr::variable(layout, x_name(k));
  const AffineExpr F = AffineExpr::variable(layout, f_name(k));
  auto beta_times_identity = [&](double scale) {
    if (layout.contains(beta_name())) return AffineExpr::scalar_identity(layout, beta_name(), n, scale);
    if (!fixed_beta) throw LayoutError("layout has no beta and no fixed value was given");
    return AffineExpr::constant(scale * *fixed_beta * I);
  };

  std::vector<AffineBlock> out;

  // Stability.
  {
    const int w = static_cast<int>(d.Btilde.cols());
    const Mat CtEC = node.C.transpose() * d.E_inv * node.C;
    const AffineExpr XA = X * d.Atilde;
    const AffineExpr Q = XA + XA.transpose() - AffineExpr::constant(0.5 * (CtEC + CtEC.transpose())) +
                         beta_times_identity(static_cast<double>(d.p + d.q));
    const AffineExpr pF = F * static_cast<double>(d.p);
    const AffineExpr top_left = Q - pF - pF.transpose() + X * params.delta;
    const AffineExpr XB = X * d.Btilde;
    const AffineExpr grid = AffineExpr::blocks(
        {{top_left, XB}, {XB.transpose(), AffineExpr::constant(-Mat::Identity(w, w))}});
    out.push_back(AffineBlock::from_expr("stability[" + std::to_string(k) + "]", grid));
  }

  // Couplings.
  {
    const int p = static_cast<int>(in.size());
    const AffineExpr off = F - beta_times_identity(1.0);
    std::vector<std::vector<AffineExpr>> grid(p + 1, std::vector<AffineExpr>(p + 1, AffineExpr::zeros(n, n)));
    grid[0][0] = X * (-2.0 * node.alpha / (d.q + 1));
    for (int a = 0; a < p; ++a) {
      const int j = in[a];
      const DerivedNode& dj = model.derived_of(j);
      grid[0][a + 1] = off;
      grid[a + 1][0] = off.transpose();
      grid[a + 1][a + 1] = AffineExpr::variable(layout, x_name(j)) * (-2.0 * model.node(j).alpha / (dj.q + 1));
    }
    const int dim = n * (p + 1);
    const AffineExpr block = AffineExpr::blocks(grid) + AffineExpr::constant(params.delta * Mat::Identity(dim, dim));
    out.push_back(AffineBlock::from_expr("couplings[" + std::to_string(k) + "]", block));
  }

  // Feasible set.
  {
    const AffineExpr Ft = F.transpose();
    const AffineExpr grid = AffineExpr::blocks({{X * -params.rho, Ft * -1.0}, {F * -1.0, X * -1.0}});
    out.push_back(AffineBlock::from_expr("feasible_set[" + std::to_string(k) + "]", grid));
  }
  return out;
}

std::vector<AffineBlock> build_centralized(const NetworkModel& model, int k, const VarLayout& layout,
                                           const LmiParams& params, std::optional<double> fixed_beta) {
  return build_node_lmis(model, k, layout, params, fixed_beta);
}

std::vector<AffineBlock> build_decoupled(const NetworkModel& model, int k, const VarLayout& layout,
                                         const LmiParams& params, std::optional<double> fixed_beta) {
  return build_node_lmis(model, k, layout, params, fixed_beta);
}

std::vector<AffineBlock> positivity_blocks(const VarLayout& layout, const std::vector<int>& copies,
                                           double delta_pd) {
  std::vector<AffineBlock> out;
  for (int j : copies) {
    const VarEntry& e = layout.entry(x_name(j));
    const AffineExpr expr = AffineExpr::constant(delta_pd * Mat::Identity(e.rows, e.rows)) -
                            AffineExpr::variable(layout, x_name(j));
    out.push_back(AffineBlock::from_expr("positive[" + std::to_string(j) + "]", expr));
  }
  return out;
}

VarLayout centralized_layout(const NetworkModel& model, bool variable_beta) {
  VarLayout layout;
  if (variable_beta) layout.add_scalar(beta_name(), 0.0);
  for (int k = 1; k <= model.size(); ++k) {
    layout.add_matrix(f_name(k), model.n(), model.n());
    layout.add_symmetric(x_name(k), model.n());
  }
  return layout;
}

CentralizedProblem centralized_problem(const NetworkModel& model, const LmiParams& params,
                                       std::optional<double> fixed_beta) {
  CentralizedProblem cp;
  cp.layout = centralized_layout(model, !fixed_beta.has_value());
  std::vector<AffineBlock> blocks;
  std::vector<int> all;
  for (int k = 1; k <= model.size(); ++k) {
    auto b = build_centralized(model, k, cp.layout, params, fixed_beta);
    blocks.insert(blocks.end(), b.begin(), b.end());
    all.push_back(k);
  }
  auto pd = positivity_blocks(cp.layout, all, params.delta_pd);
  blocks.insert(blocks.end(), pd.begin(), pd.end());

  QuadraticObjective obj;
  if (!fixed_beta) obj.linear.push_back({beta_name(), Mat::Constant(1, 1, -1.0)});
  cp.problem = canonicalize(obj, std::move(blocks), cp.layout);
  return cp;
}

Gains extract_gains(const std::vector<SymMat>& X, const std::vector<Mat>& F,
                    const NetworkModel& model) {
  const int N = model.size();
  if (static_cast<int>(X.size()) != N || static_cast<int>(F.size()) != N) {
    throw DimensionError("extract_gains: expected one X and one F per node");
  }
  Gains g;
  Mat P = Mat::Zero(model.n(), model.n());
  for (int k = 1; k <= N; ++k) {
    const SymMat& Xk = X[k - 1];
    const EigenPair ep = sym_eigen(Xk);
    const double lo = ep.values.minCoeff();
    const double hi = ep.values.maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
      throw NumericalError("X_" + std::to_string(k) + " is numerically singular (condition number above 1e12)");
    }
    const Mat Xinv = ep.vectors * ep.values.cwiseInverse().asDiagonal() * ep.vectors.transpose();
    const SensorNode& node = model.node(k);
    const DerivedNode& d = model.derived_of(k);
    g.K.push_back(Xinv * F[k - 1]);
    g.L.push_back((Xinv * node.C.transpose() + model.plant.B * node.D.transpose()) * d.E_inv);
    P += Xk.mat();
  }
  g.P = SymMat(Mat(P / N));
  return g;
}

BoundCheck theorem1_bounds(const SymMat& X, const Mat& F, double rho) {
  const double n = X.dim();
  const double root_norm = norms(sqrt_psd(X).mat()).frobenius;
  BoundCheck b;
  b.f_norm = norms(F).frobenius;
  b.bound = std::sqrt(n * rho) * root_norm * root_norm;
  b.ok = b.f_norm < b.bound;
  return b;
}

namespace {

CentralizedResult unpack_centralized(const NetworkModel& model, const VarLayout& layout,
                                     ConicSolution sol, double beta) {
  CentralizedResult r;
  r.beta = beta;
  for (int k = 1; k <= model.size(); ++k) {
    r.X.push_back(SymMat(layout.extract(sol.x, x_name(k))));
    r.F.push_back(layout.extract(sol.x, f_name(k)));
  }
  r.solution = std::move(sol);
  return r;
}

}  // namespace

CentralizedResult solve_centralized(const NetworkModel& model, const LmiParams& params,
                                    std::optional<double> fixed_beta, const SolverOptions& opts,
                                    const BetaSearch& search) {
  if (fixed_beta) {
    const CentralizedProblem cp = centralized_problem(model, params, fixed_beta);
    CentralizedResult r = unpack_centralized(model, cp.layout, solve(cp.problem, opts), *fixed_beta);
    r.beta_upper = *fixed_beta;
    r.feasibility_solves = 1;
    return r;
  }

  // Direct attempt on max beta; it doubles as the starting estimate.
  const CentralizedProblem cp = centralized_problem(model, params, std::nullopt);
  SolverOptions direct = opts;
  direct.max_iter = std::min(opts.max_iter, search.estimate_iter);
  ConicSolution est = solve(cp.problem, direct);
  const double beta_hat = std::max(cp.layout.extract_scalar(est.x, beta_name()), search.floor);
  if (est.status == SolveStatus::Optimal) {
    CentralizedResult r = unpack_centralized(model, cp.layout, std::move(est), beta_hat);
    r.beta_upper = r.beta;
    return r;
  }

  // Bracket and bisect on the feasibility problems. Only points passing
  // check_feasible count as feasible, so the returned beta is certified.
  std::optional<CentralizedResult> best;
  Vec start;
  int solves = 0;
  auto attempt = [&](double b) {
    const CentralizedProblem fp = centralized_problem(model, params, b);
    ConicSolver solver(fp.problem, opts);
    if (start.size() == fp.problem.nvars) solver.set_start(start);
    ConicSolution sol = solver.solve();
    ++solves;
    const bool ok = check_feasible(sol.x, fp.problem, opts.feas_tol).ok;
    if (ok) {
      // Any certified point solves a feasibility problem.
      sol.status = SolveStatus::Optimal;
      start = sol.x;
      if (!best || b > best->beta) best = unpack_centralized(model, fp.layout, std::move(sol), b);
    }
    return ok;
  };

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double step = search.rel_tol * beta_hat;
  if (attempt(beta_hat)) {
    lo = beta_hat;
    while (solves < search.max_solves) {
      const double b = lo + step;
      if (!attempt(b)) {
        hi = b;
        break;
      }
      lo = b;
      step *= 2.0;
    }
  } else {
    hi = beta_hat;
    double b = beta_hat;
    while (solves < search.max_solves) {
      b = std::max(search.floor, b - step);
      if (attempt(b)) {
        lo = b;
        break;
      }
      hi = b;
      if (b <= search.floor) break;
      step *= 2.0;
    }
  }
  if (!best) {
    CentralizedResult r = unpack_centralized(model, cp.layout, std::move(est), beta_hat);
    r.solution.status = SolveStatus::Infeasible;
    r.feasibility_solves = solves;
    return r;
  }
  while (std::isfinite(hi) && hi - lo > search.rel_tol * lo && solves < search.max_solves) {
    const double mid = 0.5 * (lo + hi);
    (attempt(mid) ? lo : hi) = mid;
  }
  CentralizedResult r = std::move(*best);
  r.beta_upper = hi;
  r.feasibility_solves = solves;
  return r;
}

}  // namespace dhinf
