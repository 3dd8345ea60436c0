#include <set>
#include <sstream>

#include "doctest.h"
#include "dhinf/config.hpp"
#include "dhinf/sdp.hpp"
#include "oracles.hpp"

using namespace dhinf;

namespace {

AffineBlock scalar_block(double g0, double g1) {
  AffineBlock b;
  b.label = "scalar";
  b.g0 = SymMat(Mat::Constant(1, 1, g0));
  b.terms.push_back({0, SymMat(Mat::Constant(1, 1, g1))});
  return b;
}

ConicProblem scalar_problem(double p, double q) {
  ConicProblem prob;
  prob.nvars = 1;
  prob.P = SymMat(Mat::Constant(1, 1, p));
  prob.q = Vec::Constant(1, q);
  prob.lower = Vec::Constant(1, -std::numeric_limits<double>::infinity());
  prob.blocks.push_back(scalar_block(-1.0, 1.0));  // x - 1 <= 0
  return prob;
}

// Replaces every variable outside `keep` by its value in `x`, folding the
// contribution into the constant term, and renumbers the kept variables.
std::vector<AffineBlock> freeze(const std::vector<AffineBlock>& blocks, const Vec& x, const std::vector<int>& keep) {
  std::map<int, int> renum;
  for (std::size_t i = 0; i < keep.size(); ++i) renum[keep[i]] = static_cast<int>(i);
  std::vector<AffineBlock> out;
  for (const auto& b : blocks) {
    AffineBlock r;
    r.label = b.label;
    Mat g0 = b.g0.mat();
    for (const auto& [v, c] : b.terms) {
      auto it = renum.find(v);
      if (it == renum.end()) {
        g0 += x(v) * c.mat();
      } else {
        r.terms.push_back({it->second, c});
      }
    }
    r.g0 = SymMat(g0);
    out.push_back(std::move(r));
  }
  return out;
}

struct FrozenNode {
  ConicProblem max_beta;
  std::vector<AffineBlock> blocks;  // over (F_1 entries, beta) with beta last
  int nvars = 0;
  Vec start;  // the centralized point (F_1, beta = 100)
};

// Node 1 of the six-sensor example with its X copies frozen at a centralized
// solution for beta = 100; the unknowns are F_1 and beta.
FrozenNode frozen_node_one() {
  const ScenarioConfig cfg = reference_scenario();
  const NetworkModel model = cfg.model();
  const LmiParams params = cfg.synthesis.lmi;
  const CentralizedResult c = solve_centralized(model, params, 100.0, SolverOptions{});
  REQUIRE(c.solution.status == SolveStatus::Optimal);

  VarLayout layout;
  layout.add_scalar(beta_name(), 0.0);
  layout.add_matrix(f_name(1), 6, 6);
  for (int j : {1, 6}) layout.add_symmetric(x_name(j), 6);
  Vec x = Vec::Zero(layout.size());
  for (int j : {1, 6}) layout.insert(x, x_name(j), c.X[j - 1].mat());
  layout.insert(x, f_name(1), c.F[0]);
  layout.insert_scalar(x, beta_name(), 100.0);

  std::vector<int> keep;
  for (int i = 0; i < 36; ++i) keep.push_back(layout.entry(f_name(1)).offset + i);
  keep.push_back(layout.entry(beta_name()).offset);

  FrozenNode out;
  out.blocks = freeze(build_decoupled(model, 1, layout, params), x, keep);
  out.nvars = 37;
  out.start = Vec(37);
  for (int i = 0; i < 37; ++i) out.start(i) = x(keep[i]);
  out.max_beta.nvars = 37;
  out.max_beta.P = SymMat(37);
  out.max_beta.q = Vec::Zero(37);
  out.max_beta.q(36) = -1.0;
  out.max_beta.lower = Vec::Constant(37, -std::numeric_limits<double>::infinity());
  out.max_beta.lower(36) = 0.0;
  out.max_beta.blocks = out.blocks;
  return out;
}

bool feasible_at(const FrozenNode& node, double beta) {
  ConicProblem p;
  p.nvars = 36;
  p.P = SymMat(36);
  p.q = Vec::Zero(36);
  p.lower = Vec::Constant(36, -std::numeric_limits<double>::infinity());
  Vec fixed = Vec::Zero(37);
  fixed(36) = beta;
  std::vector<int> keep;
  for (int i = 0; i < 36; ++i) keep.push_back(i);
  p.blocks = freeze(node.blocks, fixed, keep);
  SolverOptions o;
  o.max_iter = 20000;
  const ConicSolution s = solve(p, o);
  return check_feasible(s.x, p, 1e-6).ok;
}

}  // namespace

TEST_CASE("scalar problems") {
  const ConicSolution a = solve(scalar_problem(2.0, 0.0));
  CHECK(a.status == SolveStatus::Optimal);
  CHECK(std::abs(a.x(0)) <= 1e-5);

  const ConicSolution b = solve(scalar_problem(0.0, -1.0));
  CHECK(b.status == SolveStatus::Optimal);
  CHECK(b.x(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(b.x(0) <= 1.0 + 1e-6);
}

TEST_CASE("lower bounds are honoured") {
  ConicProblem p = scalar_problem(0.0, 1.0);  // min x, x <= 1, x >= 0.25
  p.lower(0) = 0.25;
  const ConicSolution s = solve(p);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.x(0) == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(s.x(0) >= 0.25 - 1e-6);
}

TEST_CASE("check_feasible reports the largest eigenvalue") {
  ConicProblem p;
  p.nvars = 1;
  p.P = SymMat(1);
  p.q = Vec::Zero(1);
  p.lower = Vec::Constant(1, -std::numeric_limits<double>::infinity());
  AffineBlock b;
  b.label = "neg";
  b.g0 = SymMat::identity(3, -1.0);
  p.blocks.push_back(b);
  FeasibilityReport r = check_feasible(Vec::Zero(1), p, 1e-6);
  CHECK(r.ok);
  CHECK(r.worst_violation == doctest::Approx(-1.0));

  p.blocks[0].g0 = SymMat::identity(3);
  r = check_feasible(Vec::Zero(1), p, 1e-6);
  CHECK_FALSE(r.ok);
  CHECK(r.worst_violation == doctest::Approx(1.0));
  CHECK(r.worst_block == 0);
}

TEST_CASE("canonical form preserves matrix objectives") {
  VarLayout layout;
  layout.add_symmetric("X", 2);
  CHECK(layout.size() == 3);

  std::mt19937_64 rng(29);
  for (int t = 0; t < 20; ++t) {
    const Mat target = oracle::random_symmetric(rng, 2);
    const Mat coeff = oracle::random_symmetric(rng, 2);
    const Mat X = oracle::random_symmetric(rng, 2);
    QuadraticObjective obj;
    obj.linear.push_back({"X", coeff});
    obj.proximal.push_back({"X", target, 1.7});
    const ConicProblem p = canonicalize(obj, {}, layout);
    Vec x = Vec::Zero(3);
    layout.insert(x, "X", X);
    const double direct = oracle::trace_of_product(coeff, X) +
                          0.85 * std::pow(oracle::frobenius(target - X), 2);
    CHECK(p.objective(x) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(obj.evaluate(layout, x) == doctest::Approx(direct).epsilon(1e-12));
  }

  VarLayout beta_only;
  beta_only.add_scalar(beta_name(), 0.0);
  QuadraticObjective b;
  b.linear.push_back({beta_name(), Mat::Constant(1, 1, -1.0)});
  const ConicProblem pb = canonicalize(b, {}, beta_only);
  CHECK(pb.nvars == 1);
  CHECK(pb.lower(0) == 0.0);
}

TEST_CASE("node tuple of the six-sensor example has 163 unknowns") {
  const ScenarioConfig cfg = reference_scenario();
  const NetworkModel model = cfg.model();
  DistributedOptions opts = cfg.synthesis.distributed_options();
  opts.fixed_beta.reset();
  const NodeAgent agent(model, 1, opts);
  // F_1, beta^1 and six symmetric copies.
  const std::vector<int> copies = copy_set(model, 1, CopyMode::Full);
  CHECK(copies.size() == 6);
  VarLayout full;
  full.add_matrix(f_name(1), 6, 6);
  full.add_scalar(beta_name(), 0.0);
  for (int j : copies) full.add_symmetric(x_name(j), 6);
  auto blocks = build_decoupled(model, 1, full, cfg.synthesis.lmi);
  auto pd = positivity_blocks(full, copies, cfg.synthesis.lmi.delta_pd);
  blocks.insert(blocks.end(), pd.begin(), pd.end());
  CHECK(canonicalize({}, blocks, full).nvars == 163);
  // Only X_1 and X_6 enter node 1's inequalities; the other four copies have
  // a closed-form update and stay out of the conic subproblem.
  CHECK(agent.active() == std::vector<int>{1, 6});
  CHECK(agent.local_problem().nvars == 36 + 1 + 2 * 21);
}

TEST_CASE("plain-text problem dump round-trips") {
  ConicProblem p = scalar_problem(1.5, -0.3);
  p.lower(0) = -2.0;
  std::stringstream ss;
  write_problem(ss, p);
  const ConicProblem r = read_problem(ss);
  CHECK(r.nvars == 1);
  CHECK(r.P == p.P);
  CHECK(r.q == p.q);
  CHECK(r.lower == p.lower);
  REQUIRE(r.blocks.size() == 1);
  CHECK(r.blocks[0].g0 == p.blocks[0].g0);
  CHECK(r.blocks[0].terms[0].second == p.blocks[0].terms[0].second);

  p.lower(0) = -std::numeric_limits<double>::infinity();
  std::stringstream s2;
  write_problem(s2, p);
  CHECK(std::isinf(read_problem(s2).lower(0)));
}

TEST_CASE("solver is deterministic and its optimal points are feasible") {
  const FrozenNode node = frozen_node_one();
  const ConicSolution a = solve(node.max_beta);
  const ConicSolution b = solve(node.max_beta);
  CHECK(a.iterations == b.iterations);
  CHECK(a.x == b.x);
  if (a.status == SolveStatus::Optimal) CHECK(check_feasible(a.x, node.max_beta, 1e-6).ok);
}

TEST_CASE("maximal beta at a frozen node agrees with bisection") {
  const FrozenNode node = frozen_node_one();
  SolverOptions o;
  o.max_iter = 50000;
  const ConicSolution s = solve(node.max_beta, o);
  REQUIRE(s.status == SolveStatus::Optimal);
  const double beta_star = s.x(36);

  double lo = 100.0;  // the frozen point is feasible here
  REQUIRE(feasible_at(node, lo));
  double hi = 2.0 * lo;
  while (feasible_at(node, hi)) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-4 * lo) {
    const double mid = 0.5 * (lo + hi);
    (feasible_at(node, mid) ? lo : hi) = mid;
  }
  CHECK(std::abs(beta_star - lo) <= 1e-3 * lo);
}

TEST_CASE("solution is no worse than a feasible start") {
  const FrozenNode node = frozen_node_one();
  ConicSolver solver(node.max_beta);
  const ConicSolution s = solver.solve();
  REQUIRE(s.status == SolveStatus::Optimal);
  const Vec& start = node.start;
  REQUIRE(check_feasible(start, node.max_beta, 1e-6).ok);
  CHECK(s.objective <= node.max_beta.objective(start) + 1e-6);
}
