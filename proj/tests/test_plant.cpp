#include "doctest.h"
#include "dhinf/config.hpp"
#include "dhinf/plant.hpp"
#include "oracles.hpp"

using namespace dhinf;

namespace {

std::vector<std::pair<int, int>> star_edges() {
  std::vector<std::pair<int, int>> e;
  for (int k = 2; k <= 6; ++k) e.emplace_back(1, k);
  return e;
}

// Naive row-reduction rank, independent of the SVD used by the library.
int gauss_rank(Mat m, double tol) {
  int rank = 0;
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = rank;
    for (int r = rank; r < rows; ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    if (std::abs(m(piv, c)) <= tol) continue;
    m.row(piv).swap(m.row(rank));
    for (int r = 0; r < rows; ++r) {
      if (r == rank) continue;
      const double f = m(r, c) / m(rank, c);
      for (int j = 0; j < cols; ++j) m(r, j) -= f * m(rank, j);
    }
    ++rank;
  }
  return rank;
}

}  // namespace

TEST_CASE("neighborhoods follow edge direction") {
  const CommGraph cyc = CommGraph::directed_cycle(3);
  const Neighborhoods n2 = neighborhoods(cyc, 2);
  CHECK(n2.in == std::vector<int>{1});
  CHECK(n2.out == std::vector<int>{3});

  const CommGraph empty(3, {});
  CHECK(neighborhoods(empty, 1).in.empty());
  CHECK(neighborhoods(empty, 1).out.empty());

  const CommGraph g6 = reference_scenario().graph();
  CHECK(g6.in_neighbors(1) == std::vector<int>{6});
  CHECK(g6.out_neighbors(1) == std::vector<int>{2});
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(CommGraph(3, {{1, 4}}), std::invalid_argument);
  CHECK_THROWS_AS(CommGraph(3, {{2, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(CommGraph(0, {}), std::invalid_argument);
  CHECK_THROWS(CommGraph::directed_cycle(3).in_neighbors(4));
}

TEST_CASE("balance and connectivity") {
  const CommGraph cyc = CommGraph::directed_cycle(6);
  CHECK(cyc.balanced());
  CHECK(cyc.strongly_connected());
  CHECK_FALSE(cyc.symmetric());
  CHECK(CommGraph::undirected_cycle(4).symmetric());

  const CommGraph star(6, star_edges());
  CHECK_FALSE(star.balanced());
  CHECK_FALSE(star.strongly_connected());

  const CommGraph split(4, {{1, 2}, {2, 1}, {3, 4}, {4, 3}});
  CHECK(split.balanced());
  CHECK_FALSE(split.strongly_connected());

  for (const CommGraph& g : {cyc, CommGraph::undirected_cycle(5)}) {
    int sp = 0, sq = 0;
    for (int k = 1; k <= g.size(); ++k) {
      sp += g.in_degree(k);
      sq += g.out_degree(k);
    }
    CHECK(sp == static_cast<int>(g.edges().size()));
    CHECK(sq == static_cast<int>(g.edges().size()));
  }
}

TEST_CASE("assumption report for the six-sensor example") {
  const ScenarioConfig cfg = reference_scenario();
  const AssumptionReport r = check_assumptions(cfg.plant, cfg.nodes, cfg.graph());
  CHECK(r.connected);
  CHECK(r.balanced);
  REQUIRE(r.controllable.size() == 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(r.controllable[k]);
    const DerivedNode d = derive(cfg.plant, cfg.nodes[k], cfg.graph());
    CHECK(gauss_rank(controllability_matrix(d.Atilde, d.Btilde), 1e-9) == 6);
  }
  CHECK(r.passed());

  const AssumptionReport star = check_assumptions(cfg.plant, cfg.nodes, CommGraph(6, star_edges()));
  CHECK_FALSE(star.balanced);
  CHECK_FALSE(star.passed());
}

TEST_CASE("an uncontrollable pair is reported") {
  Plant p;
  p.A = Mat::Identity(2, 2);
  p.B = Mat::Zero(2, 1);
  p.B(0, 0) = 1.0;
  SensorNode s;
  s.C = Mat::Identity(1, 2).topRows(1);
  s.D = Mat::Zero(1, 1);
  s.Dbar = Mat::Identity(1, 1);
  const AssumptionReport r = check_assumptions(p, {s}, CommGraph(1, {}));
  CHECK_FALSE(r.all_controllable());
  CHECK(r.controllability_rank[0] == 1);

  std::vector<SensorNode> nodes{s};
  pad_disturbances(p, nodes, 1e-6);
  CHECK(p.m() == 3);
  CHECK(nodes[0].D.cols() == 3);
  CHECK(nodes[0].s() == 2);
  CHECK(check_assumptions(p, nodes, CommGraph(1, {})).all_controllable());
}

TEST_CASE("derived matrices for the six-sensor example") {
  const ScenarioConfig cfg = reference_scenario();
  const DerivedNode d = derive(cfg.plant, cfg.nodes[0], cfg.graph());
  CHECK(oracle::frobenius(d.E.mat() - 1e-4 * Mat::Identity(2, 2)) <= 1e-18);
  const Mat atilde = cfg.plant.A + cfg.nodes[0].alpha * Mat::Identity(6, 6);
  CHECK(oracle::frobenius(d.Atilde - atilde) <= 1e-15);
  REQUIRE(d.Btilde.cols() == 7 + 2);
  CHECK(d.Btilde.leftCols(7) == cfg.plant.B);
  CHECK(d.Btilde.rightCols(2) == Mat::Zero(6, 2));
  CHECK(d.p == 1);
  CHECK(d.q == 1);
}

TEST_CASE("derived matrices against dense arithmetic") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    Plant p;
    p.A = oracle::random_matrix(rng, 4, 4);
    p.B = oracle::random_matrix(rng, 4, 3);
    SensorNode s;
    s.C = oracle::random_matrix(rng, 2, 4);
    s.D = oracle::random_matrix(rng, 2, 3);
    s.Dbar = oracle::random_matrix(rng, 2, 2);
    s.alpha = 0.5 + t;
    const DerivedNode d = derive(p, s, CommGraph(1, {}));

    const Mat E = oracle::multiply(s.D, s.D.transpose()) + oracle::multiply(s.Dbar, s.Dbar.transpose());
    const double det = E(0, 0) * E(1, 1) - E(0, 1) * E(1, 0);
    Mat Ei(2, 2);
    Ei << E(1, 1) / det, -E(0, 1) / det, -E(1, 0) / det, E(0, 0) / det;
    const Mat BDtEi = oracle::multiply(oracle::multiply(p.B, s.D.transpose()), Ei);
    const Mat At = p.A + s.alpha * Mat::Identity(4, 4) - oracle::multiply(BDtEi, s.C);
    const Mat B1 = p.B - oracle::multiply(BDtEi, s.D);
    const Mat B2 = -oracle::multiply(BDtEi, s.Dbar);
    const double scale = 1.0 + oracle::frobenius(At);
    CHECK(oracle::frobenius(d.Atilde - At) <= 1e-9 * scale);
    CHECK(oracle::frobenius(d.Btilde.leftCols(3) - B1) <= 1e-9 * scale);
    CHECK(oracle::frobenius(d.Btilde.rightCols(2) - B2) <= 1e-9 * scale);
  }
}

TEST_CASE("degenerate measurement noise") {
  const ScenarioConfig cfg = reference_scenario();
  SensorNode s = cfg.nodes[2];
  s.Dbar = Mat::Zero(2, 2);
  s.D = Mat::Zero(2, 7);
  try {
    derive(cfg.plant, s, cfg.graph());
    FAIL("expected DegenerateNoiseError");
  } catch (const DegenerateNoiseError& e) {
    CHECK(e.node() == 3);
  }
}

TEST_CASE("node validation") {
  const ScenarioConfig cfg = reference_scenario();
  SensorNode s = cfg.nodes[0];
  s.alpha = 0.0;
  CHECK_THROWS_AS(s.validate(cfg.plant), std::invalid_argument);
  s = cfg.nodes[0];
  s.C = Mat::Zero(2, 5);
  CHECK_THROWS_AS(s.validate(cfg.plant), DimensionError);
  s = cfg.nodes[0];
  s.D = Mat::Zero(2, 6);
  CHECK_THROWS_AS(s.validate(cfg.plant), DimensionError);
}
