#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace haptosim {

// Row-compressed structure of a square matrix. Column indices are strictly
// increasing within each row.
struct SparsityPattern
{
  std::size_t              n = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<std::size_t> cols;

  std::size_t
  nnz() const
  {
    return cols.size();
  }

  // Position of (row, col) in cols/values, or nnz() when not stored.
  std::size_t find(std::size_t row, std::size_t col) const;

  // Throws InputError unless the structure is well formed.
  void validate() const;

  // Builds a pattern from (unsorted, possibly repeated) per-row column lists.
  static SparsityPattern from_rows(std::vector<std::vector<std::size_t>> rows);

  static SparsityPattern identity(std::size_t n);

  friend bool operator==(const SparsityPattern &,
                         const SparsityPattern &) = default;
};

using PatternPtr = std::shared_ptr<const SparsityPattern>;

// CSR matrix. Matrices assembled on one mesh share a single pattern, so
// linear combinations reduce to operations on the value arrays.
class CsrMatrix
{
public:
  CsrMatrix() = default;

  explicit CsrMatrix(PatternPtr pattern);

  CsrMatrix(PatternPtr pattern, std::vector<double> values);

  static CsrMatrix identity(std::size_t n);

  // Dense row-major input; exact zeros are dropped.
  static CsrMatrix from_dense(std::size_t n, std::span<const double> dense);

  std::size_t
  size() const
  {
    return pattern_ ? pattern_->n : 0;
  }

  const SparsityPattern &
  pattern() const
  {
    return *pattern_;
  }

  const PatternPtr &
  pattern_ptr() const
  {
    return pattern_;
  }

  std::vector<double> &
  values()
  {
    return values_;
  }

  const std::vector<double> &
  values() const
  {
    return values_;
  }

  // Entry (row, col); zero when not in the pattern.
  double operator()(std::size_t row, std::size_t col) const;

  // Reference to a stored entry. Throws InputError when (row, col) is absent.
  double &at(std::size_t row, std::size_t col);

  // this += s * other; patterns must be identical.
  CsrMatrix &add(double s, const CsrMatrix &other);

  CsrMatrix &scale(double s);

  std::vector<double> to_dense() const;

  bool all_finite() const;

private:
  PatternPtr          pattern_;
  std::vector<double> values_;
};

// y = A x
std::vector<double> spmv(const CsrMatrix &A, std::span<const double> x);

// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);

// ||x - y||_2
double distance2(std::span<const double> x, std::span<const double> y);

struct LinearSolverOptions
{
  // Required bound on ||Ax - b||_2 / max(||b||_2, eps).
  double tol = 1e-12;
  // Systems up to this size are factorized directly. Larger ones start
  // with Jacobi-preconditioned BiCGSTAB, which is much cheaper on the
  // mass-dominated matrices of the scheme, and fall back to ILUT and
  // finally to a sparse LU when the residual bound is not met.
  std::size_t direct_limit = 64;
};

struct SolveStats
{
  double      relative_residual = 0.0;
  bool        direct            = true;
  std::size_t iterations        = 0;
};

// Solves A x = b and checks the residual contract. Throws InputError on
// malformed input and SolverError when the residual cannot be met.
std::vector<double> solve(const CsrMatrix           &A,
                          std::span<const double>    b,
                          const LinearSolverOptions &opts  = {},
                          SolveStats                *stats = nullptr);

// ||Ax - b||_2 / max(||b||_2, eps)
double relative_residual(const CsrMatrix        &A,
                         std::span<const double> x,
                         std::span<const double> b);

} // namespace haptosim
