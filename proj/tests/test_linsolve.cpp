#include "doctest.h"

#include "haptosim/errors.hpp"
#include "haptosim/fem.hpp"
#include "haptosim/linsolve.hpp"

#include <cmath>
#include <random>

using namespace haptosim;

namespace {

std::vector<double>
dense_mv(std::size_t n, const std::vector<double> &A, const std::vector<double> &x)
{
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      y[i] += A[i * n + j] * x[j];
  return y;
}

MeshPtr
square_mesh(int refinements)
{
  return make_mesh(2, Box{2, {Interval{0, 1}, Interval{0, 1}, Interval{0, 0}}}, {1, 1, 1}, refinements);
}

} // namespace

TEST_CASE("sparsity pattern construction and validation")
{
  const SparsityPattern p = SparsityPattern::from_rows({{2, 0, 2}, {}, {1}});
  CHECK(p.n == 3);
  CHECK(p.row_offsets == std::vector<std::size_t>{0, 2, 2, 3});
  CHECK(p.cols == std::vector<std::size_t>{0, 2, 1});
  CHECK(p.find(0, 2) == 1);
  CHECK(p.find(1, 1) == p.nnz());
  CHECK_NOTHROW(p.validate());

  SparsityPattern bad = p;
  bad.cols[0] = 5;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = p;
  bad.cols = {2, 0, 1};
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = p;
  bad.row_offsets = {0, 2, 1, 3};
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("csr accessors")
{
  const std::vector<double> d{1, 0, 2, 0, 3, 0, 4, 0, 5};
  CsrMatrix A = CsrMatrix::from_dense(3, d);
  CHECK(A.pattern().nnz() == 5);
  CHECK(A(0, 2) == 2.0);
  CHECK(A(0, 1) == 0.0);
  CHECK(A.to_dense() == d);
  A.at(1, 1) = -3.0;
  CHECK(A(1, 1) == -3.0);
  CHECK_THROWS_AS(A.at(0, 1), InputError);

  CsrMatrix B(A.pattern_ptr(), std::vector<double>(5, 1.0));
  A.add(2.0, B);
  CHECK(A(2, 2) == 7.0);
  A.scale(0.5);
  CHECK(A(2, 2) == 3.5);
  CHECK_THROWS_AS(A.add(1.0, CsrMatrix::identity(3)), InputError);
  CHECK_THROWS_AS(CsrMatrix(A.pattern_ptr(), std::vector<double>(4, 0.0)), InputError);
}

TEST_CASE("spmv against a dense oracle")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::bernoulli_distribution keep(0.4);
  for (int trial = 0; trial < 20; ++trial)
    {
      const std::size_t n = 5;
      std::vector<double> d(n * n, 0.0), x(n);
      for (double &v : d)
        if (keep(rng))
          v = val(rng);
      for (double &v : x)
        v = val(rng);
      const CsrMatrix A = CsrMatrix::from_dense(n, d);
      const std::vector<double> y = spmv(A, x), ref = dense_mv(n, d, x);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(y[i] - ref[i]) <= 1e-14);
    }

  const CsrMatrix I = CsrMatrix::identity(4);
  const std::vector<double> x{1.5, -2, 0, 3e10};
  CHECK(spmv(I, x) == x);
  const CsrMatrix M = Assembler(square_mesh(2)).mass();
  for (double v : spmv(M, std::vector<double>(M.size(), 0.0)))
    CHECK(v == 0.0);
  CHECK_THROWS_AS(spmv(I, std::vector<double>(3)), InputError);
}

TEST_CASE("vector helpers")
{
  std::vector<double> y{1, 2, 3};
  const std::vector<double> x{1, -1, 2};
  axpy(2.0, x, y);
  CHECK(y == std::vector<double>{3, 0, 7});
  CHECK(dot(x, y) == 17.0);
  CHECK(norm2(std::vector<double>{3, 4}) == 5.0);
  CHECK(norm_inf(x) == 2.0);
  CHECK(distance2(std::vector<double>{1, 1}, std::vector<double>{4, 5}) == 5.0);
  CHECK_THROWS_AS(dot(x, std::vector<double>{1}), InputError);
  CHECK_THROWS_AS(axpy(1.0, x, std::span<double>(y.data(), 2)), InputError);
}

TEST_CASE("solve: identity and a 2x2 system")
{
  const std::vector<double> b{0.5, -7, 1e-3};
  CHECK(solve(CsrMatrix::identity(3), b) == b);

  const CsrMatrix A = CsrMatrix::from_dense(2, std::vector<double>{2, 1, 1, 2});
  const std::vector<double> x = solve(A, std::vector<double>{3, 3});
  CHECK(std::abs(x[0] - 1.0) <= 1e-15);
  CHECK(std::abs(x[1] - 1.0) <= 1e-15);
}

TEST_CASE("solve: mass matrix with constructed right-hand side")
{
  for (int r : {1, 4, 6})
    for (std::size_t limit : {std::size_t{0}, std::size_t{100000}})
      {
        const CsrMatrix M = Assembler(square_mesh(r)).mass();
        const std::vector<double> ones(M.size(), 1.0);
        const std::vector<double> b = spmv(M, ones);
        LinearSolverOptions opts;
        opts.direct_limit = limit;
        SolveStats st;
        const std::vector<double> x = solve(M, b, opts, &st);
        CHECK(st.relative_residual <= 1e-12);
        CHECK(st.direct == (M.size() <= limit));
        for (double v : x)
          CHECK(std::abs(v - 1.0) <= 1e-12);
      }
}

TEST_CASE("solve then spmv round trip on a scheme-like matrix")
{
  const MeshPtr mesh = square_mesh(5);
  const Assembler as(mesh);
  CsrMatrix A = as.mass();
  A.add(0.05, as.stiffness());
  const FeField c = interpolate([](const Point &p) { return 1 - 0.5 * std::exp(-p[0] * p[0] - p[1] * p[1]); }, mesh);
  A.add(-0.3, as.haptotaxis(c));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<double> x(A.size());
  for (double &v : x)
    v = val(rng);
  const std::vector<double> b = spmv(A, x);
  const std::vector<double> y = solve(A, b);
  CHECK(relative_residual(A, y, b) <= 1e-12);
  CHECK(distance2(x, y) <= 1e-9 * norm2(x));
  CHECK(solve(A, b) == y);
}

TEST_CASE("solve: input and solver errors")
{
  const CsrMatrix I = CsrMatrix::identity(2);
  CHECK_THROWS_AS(solve(I, std::vector<double>{1}), InputError);
  CHECK_THROWS_AS(solve(I, std::vector<double>{1, NAN}), InputError);
  CsrMatrix bad = CsrMatrix::identity(2);
  bad.values()[0] = INFINITY;
  CHECK_THROWS_AS(solve(bad, std::vector<double>{1, 1}), InputError);

  const CsrMatrix singular = CsrMatrix::from_dense(2, std::vector<double>{1, 1, 1, 1});
  try
    {
      solve(singular, std::vector<double>{1, 0});
      FAIL("expected SolverError");
    }
  catch (const SolverError &e)
    {
      CHECK(!(e.residual() <= 1e-12));
    }
}
