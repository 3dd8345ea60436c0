#include "doctest.h"
#include "dhinf/matrix_core.hpp"
#include "oracles.hpp"

using namespace dhinf;

TEST_CASE("vec stacks columns") {
  Mat m(2, 2);
  m << 1, 3, 2, 4;
  const Vec v = vec(m);
  REQUIRE(v.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(v(i) == i + 1);
  CHECK(vec(Mat::Zero(2, 2)) == Vec::Zero(4));

  std::mt19937_64 rng(7);
  const Mat r = oracle::random_matrix(rng, 3, 2);
  CHECK(unvec(vec(r), 3, 2) == r);
  CHECK_THROWS_AS(unvec(Vec::Zero(5), 2, 2), DimensionError);
}

TEST_CASE("vec is linear") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Mat a = oracle::random_matrix(rng, 3, 4);
    const Mat b = oracle::random_matrix(rng, 3, 4);
    const Vec lhs = vec(2.5 * a - 0.75 * b);
    const Vec rhs = 2.5 * vec(a) - 0.75 * vec(b);
    CHECK((lhs - rhs).norm() <= 1e-13 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("trace inner product identities") {
  CHECK(trace_inner(Mat::Identity(2, 2), Mat::Identity(2, 2)) == doctest::Approx(2.0));
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Mat a = oracle::random_matrix(rng, 4, 4);
    const Mat b = oracle::random_matrix(rng, 4, 4);
    const double ref = oracle::trace_of_product(a, b);
    CHECK(std::abs(trace_inner(a, b) - vec(a).dot(vec(b))) <= 1e-12 * (1.0 + std::abs(ref)));
    CHECK(std::abs(trace_inner(a, b) - ref) <= 1e-12 * (1.0 + std::abs(ref)));
    CHECK(trace_inner(a, b) == doctest::Approx(trace_inner(b, a)).epsilon(1e-14));
    const double fa = oracle::frobenius(a);
    CHECK(trace_inner(a, a) == doctest::Approx(fa * fa).epsilon(1e-12));
  }
  CHECK_THROWS_AS(trace_inner(Mat::Zero(2, 3), Mat::Zero(3, 2)), DimensionError);
}

TEST_CASE("SymMat symmetrizes on construction") {
  Mat m(2, 2);
  m << 1, 2, 4, 3;
  const SymMat s(m);
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == 3.0);
  CHECK_THROWS_AS(SymMat(Mat::Zero(2, 3)), DimensionError);
}

TEST_CASE("symmetric eigendecomposition") {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 5;
  d(1, 1) = 2;
  const EigenPair e = sym_eigen(SymMat(d));
  CHECK(e.values(0) == doctest::Approx(2.0));
  CHECK(e.values(1) == doctest::Approx(5.0));
  const EigenPair id = sym_eigen(SymMat::identity(3));
  for (int i = 0; i < 3; ++i) CHECK(id.values(i) == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  const Mat s = oracle::random_symmetric(rng, 6);
  const EigenPair r = sym_eigen(SymMat(s));
  Mat rebuilt = Mat::Zero(6, 6);
  for (int l = 0; l < 6; ++l)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) rebuilt(i, j) += r.values(l) * r.vectors(i, l) * r.vectors(j, l);
  CHECK(oracle::frobenius(rebuilt - s) <= 1e-10 * oracle::frobenius(s));
  for (int l = 1; l < 6; ++l) CHECK(r.values(l - 1) <= r.values(l));
}

TEST_CASE("PSD projection") {
  CHECK(project_psd(SymMat::identity(2)) == SymMat::identity(2));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = -1;
  const SymMat p = project_psd(SymMat(d));
  CHECK(p(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(p(1, 1)) <= 1e-15);
  CHECK(std::abs(p(0, 1)) <= 1e-15);

  std::mt19937_64 rng(9);
  const SymMat s(oracle::random_symmetric(rng, 4));
  REQUIRE(min_eigenvalue(s) < 0.0);
  const SymMat ps = project_psd(s);
  const double dist = oracle::frobenius(ps.mat() - s.mat());
  int worse = 0;
  for (int t = 0; t < 1000; ++t) {
    const Mat q = oracle::random_psd(rng, 4) * (t % 3 == 0 ? 0.1 : 1.0);
    if (oracle::frobenius(q - s.mat()) < dist - 1e-12) ++worse;
  }
  CHECK(worse == 0);

  const SymMat pp = project_psd(ps);
  CHECK(oracle::frobenius(pp.mat() - ps.mat()) <= 1e-12 * (1.0 + oracle::frobenius(ps.mat())));
  const SymMat q(oracle::random_psd(rng, 4));
  CHECK(oracle::frobenius(project_psd(q).mat() - q.mat()) <= 1e-12 * oracle::frobenius(q.mat()));
}

TEST_CASE("matrix norms") {
  const Norms i3 = norms(Mat::Identity(3, 3));
  CHECK(i3.frobenius == doctest::Approx(std::sqrt(3.0)));
  CHECK(i3.spectral == doctest::Approx(1.0));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 4;
  const Norms n34 = norms(d);
  CHECK(n34.frobenius == doctest::Approx(5.0));
  CHECK(n34.spectral == doctest::Approx(4.0));
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const Mat m = oracle::random_matrix(rng, 5, 3);
    const Norms nm = norms(m);
    CHECK(nm.frobenius >= nm.spectral);
    CHECK(nm.spectral == doctest::Approx(oracle::spectral(m)).epsilon(1e-8));
  }
}

TEST_CASE("packed symmetric layout round-trips exactly") {
  std::mt19937_64 rng(17);
  for (int d = 1; d <= 6; ++d) {
    const SymMat s(oracle::random_symmetric(rng, d));
    CHECK(svec_size(d) == d * (d + 1) / 2);
    CHECK(dim_from_svec_size(svec_size(d)) == d);
    CHECK(smat(svec(s), d) == s);
  }
}

TEST_CASE("PSD square root") {
  std::mt19937_64 rng(19);
  const SymMat q(oracle::random_psd(rng, 5));
  const SymMat r = sqrt_psd(q);
  CHECK(oracle::frobenius(oracle::multiply(r.mat(), r.mat()) - q.mat()) <= 1e-9 * oracle::frobenius(q.mat()));
}
