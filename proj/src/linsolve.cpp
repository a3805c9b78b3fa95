#include "haptosim/linsolve.hpp"

#include "haptosim/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace haptosim {

std::size_t
SparsityPattern::find(std::size_t row, std::size_t col) const
{
  const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_offsets[row]);
  const auto last  = cols.begin() + static_cast<std::ptrdiff_t>(row_offsets[row + 1]);
  const auto it    = std::lower_bound(first, last, col);
  if (it == last || *it != col)
    return nnz();
  return static_cast<std::size_t>(it - cols.begin());
}

void
SparsityPattern::validate() const
{
  if (row_offsets.size() != n + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != cols.size())
    throw InputError("sparsity pattern: inconsistent row offsets");
  for (std::size_t r = 0; r < n; ++r)
    {
      if (row_offsets[r + 1] < row_offsets[r])
        throw InputError("sparsity pattern: decreasing row offsets");
      for (std::size_t k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
        {
          if (cols[k] >= n)
            throw InputError("sparsity pattern: column index out of range");
          if (k > row_offsets[r] && cols[k] <= cols[k - 1])
            throw InputError(
              "sparsity pattern: columns not strictly increasing in row " +
              std::to_string(r));
        }
    }
}

SparsityPattern
SparsityPattern::from_rows(std::vector<std::vector<std::size_t>> rows)
{
  SparsityPattern p;
  p.n = rows.size();
  p.row_offsets.assign(p.n + 1, 0);
  for (std::size_t r = 0; r < p.n; ++r)
    {
      auto &row = rows[r];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      p.row_offsets[r + 1] = p.row_offsets[r] + row.size();
    }
  p.cols.reserve(p.row_offsets.back());
  for (const auto &row : rows)
    p.cols.insert(p.cols.end(), row.begin(), row.end());
  return p;
}

SparsityPattern
SparsityPattern::identity(std::size_t n)
{
  SparsityPattern p;
  p.n = n;
  p.row_offsets.resize(n + 1);
  p.cols.resize(n);
  for (std::size_t i = 0; i <= n; ++i)
    p.row_offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i)
    p.cols[i] = i;
  return p;
}

CsrMatrix::CsrMatrix(PatternPtr pattern)
  : pattern_(std::move(pattern))
  , values_(pattern_->nnz(), 0.0)
{}

CsrMatrix::CsrMatrix(PatternPtr pattern, std::vector<double> values)
  : pattern_(std::move(pattern))
  , values_(std::move(values))
{
  if (values_.size() != pattern_->nnz())
    throw InputError("CsrMatrix: value count does not match pattern");
}

CsrMatrix
CsrMatrix::identity(std::size_t n)
{
  return CsrMatrix(std::make_shared<const SparsityPattern>(
                     SparsityPattern::identity(n)),
                   std::vector<double>(n, 1.0));
}

CsrMatrix
CsrMatrix::from_dense(std::size_t n, std::span<const double> dense)
{
  if (dense.size() != n * n)
    throw InputError("CsrMatrix::from_dense: expected n*n entries");
  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (dense[r * n + c] != 0.0)
        rows[r].push_back(c);
  auto      pattern = std::make_shared<const SparsityPattern>(
    SparsityPattern::from_rows(std::move(rows)));
  CsrMatrix A(pattern);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = pattern->row_offsets[r]; k < pattern->row_offsets[r + 1];
         ++k)
      A.values_[k] = dense[r * n + pattern->cols[k]];
  return A;
}

double
CsrMatrix::operator()(std::size_t row, std::size_t col) const
{
  const std::size_t k = pattern_->find(row, col);
  return k == pattern_->nnz() ? 0.0 : values_[k];
}

double &
CsrMatrix::at(std::size_t row, std::size_t col)
{
  const std::size_t k = pattern_->find(row, col);
  if (k == pattern_->nnz())
    throw InputError("CsrMatrix::at: entry not in sparsity pattern");
  return values_[k];
}

CsrMatrix &
CsrMatrix::add(double s, const CsrMatrix &other)
{
  if (pattern_ != other.pattern_ && !(*pattern_ == *other.pattern_))
    throw InputError("CsrMatrix::add: sparsity patterns differ");
  for (std::size_t k = 0; k < values_.size(); ++k)
    values_[k] += s * other.values_[k];
  return *this;
}

CsrMatrix &
CsrMatrix::scale(double s)
{
  for (double &v : values_)
    v *= s;
  return *this;
}

std::vector<double>
CsrMatrix::to_dense() const
{
  const std::size_t   n = size();
  std::vector<double> dense(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = pattern_->row_offsets[r]; k < pattern_->row_offsets[r + 1];
         ++k)
      dense[r * n + pattern_->cols[k]] = values_[k];
  return dense;
}

bool
CsrMatrix::all_finite() const
{
  return std::all_of(values_.begin(), values_.end(), [](double v) {
    return std::isfinite(v);
  });
}

std::vector<double>
spmv(const CsrMatrix &A, std::span<const double> x)
{
  if (x.size() != A.size())
    throw InputError("spmv: dimension mismatch");
  const auto         &p = A.pattern();
  const auto         &v = A.values();
  std::vector<double> y(A.size(), 0.0);
  for (std::size_t r = 0; r < p.n; ++r)
    {
      double s = 0.0;
      for (std::size_t k = p.row_offsets[r]; k < p.row_offsets[r + 1]; ++k)
        s += v[k] * x[p.cols[k]];
      y[r] = s;
    }
  return y;
}

void
axpy(double a, std::span<const double> x, std::span<double> y)
{
  if (x.size() != y.size())
    throw InputError("axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += a * x[i];
}

double
dot(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size())
    throw InputError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += x[i] * y[i];
  return s;
}

double
norm2(std::span<const double> x)
{
  return std::sqrt(dot(x, x));
}

double
norm_inf(std::span<const double> x)
{
  double m = 0.0;
  for (double v : x)
    {
      if (std::isnan(v))
        return v;
      m = std::max(m, std::abs(v));
    }
  return m;
}

double
distance2(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size())
    throw InputError("distance2: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    {
      const double d = x[i] - y[i];
      s += d * d;
    }
  return std::sqrt(s);
}

double
relative_residual(const CsrMatrix        &A,
                  std::span<const double> x,
                  std::span<const double> b)
{
  std::vector<double> r = spmv(A, x);
  axpy(-1.0, b, r);
  return norm2(r) /
         std::max(norm2(b), std::numeric_limits<double>::epsilon());
}

namespace {

using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

RowMajorSparse
to_eigen(const CsrMatrix &A)
{
  const auto                   &p = A.pattern();
  std::vector<int>              outer(p.row_offsets.begin(), p.row_offsets.end());
  std::vector<int>              inner(p.cols.begin(), p.cols.end());
  const Eigen::Index            n = static_cast<Eigen::Index>(p.n);
  Eigen::Map<const RowMajorSparse> map(n,
                                       n,
                                       static_cast<Eigen::Index>(p.nnz()),
                                       outer.data(),
                                       inner.data(),
                                       A.values().data());
  return RowMajorSparse(map);
}

using EigenVec = Eigen::VectorXd;

double
eigen_residual(const RowMajorSparse &A, const EigenVec &x, const EigenVec &b)
{
  return (A * x - b).norm() /
         std::max(b.norm(), std::numeric_limits<double>::epsilon());
}

// Direct LU with a few rounds of iterative refinement.
bool
solve_direct(const RowMajorSparse &A,
             const EigenVec       &b,
             double                tol,
             EigenVec             &x,
             double               &res)
{
  ColMajorSparse                                            Ac(A);
  Eigen::SparseLU<ColMajorSparse, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(Ac);
  if (lu.info() != Eigen::Success)
    return false;
  x   = lu.solve(b);
  res = eigen_residual(A, x, b);
  for (int it = 0; it < 3 && !(res <= tol); ++it)
    {
      const EigenVec r = b - A * x;
      x += lu.solve(r);
      res = eigen_residual(A, x, b);
    }
  return std::isfinite(res) && res <= tol;
}

template <typename Preconditioner>
bool
solve_krylov(const RowMajorSparse &A,
             const EigenVec       &b,
             double                tol,
             EigenVec             &x,
             double               &res,
             std::size_t          &iters)
{
  Eigen::BiCGSTAB<RowMajorSparse, Preconditioner> solver;
  solver.setTolerance(0.1 * tol);
  solver.setMaxIterations(4000);
  solver.compute(A);
  if (solver.info() != Eigen::Success)
    return false;
  x     = solver.solve(b);
  iters = static_cast<std::size_t>(solver.iterations());
  res   = eigen_residual(A, x, b);
  return std::isfinite(res) && res <= tol;
}

} // namespace

std::vector<double>
solve(const CsrMatrix           &A,
      std::span<const double>    b,
      const LinearSolverOptions &opts,
      SolveStats                *stats)
{
  const std::size_t n = A.size();
  if (b.size() != n)
    throw InputError("solve: right-hand side has length " +
                     std::to_string(b.size()) + ", expected " +
                     std::to_string(n));
  if (!A.all_finite())
    throw InputError("solve: matrix has non-finite entries");
  if (!std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); }))
    throw InputError("solve: right-hand side has non-finite entries");

  SolveStats local;
  if (n == 0)
    {
      if (stats)
        *stats = local;
      return {};
    }

  const RowMajorSparse Ae = to_eigen(A);
  const EigenVec       be = Eigen::Map<const EigenVec>(b.data(),
                                                 static_cast<Eigen::Index>(n));
  EigenVec             x;
  double               res = std::numeric_limits<double>::infinity();
  bool                 ok  = false;

  if (n <= opts.direct_limit)
    {
      local.direct = true;
      ok           = solve_direct(Ae, be, opts.tol, x, res);
    }
  else
    {
      local.direct = false;
      ok = solve_krylov<Eigen::DiagonalPreconditioner<double>>(
        Ae, be, opts.tol, x, res, local.iterations);
      if (!ok)
        ok = solve_krylov<Eigen::IncompleteLUT<double>>(
          Ae, be, opts.tol, x, res, local.iterations);
      if (!ok)
        {
          local.direct = true;
          ok           = solve_direct(Ae, be, opts.tol, x, res);
        }
    }

  local.relative_residual = res;
  if (stats)
    *stats = local;
  if (!ok)
    {
      std::ostringstream msg;
      msg << "solve: relative residual " << res << " exceeds tolerance "
          << opts.tol << " (n = " << n << ")";
      throw SolverError(msg.str(), res);
    }
  return std::vector<double>(x.data(), x.data() + n);
}

} // namespace haptosim
