#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stokesamg {

/// Compressed-row sparse matrix. Canonical form: within each row the column
/// indices are strictly increasing and no explicit zeros are stored.
struct SparseMatrix {
  int nrows = 0;
  int ncols = 0;
  std::vector<int> row_offsets;  // length nrows+1
  std::vector<int> col_indices;
  std::vector<double> values;

  SparseMatrix() : row_offsets(1, 0) {}
  SparseMatrix(int nr, int nc) : nrows(nr), ncols(nc), row_offsets(nr + 1, 0) {}

  int nnz() const { return static_cast<int>(col_indices.size()); }

  static SparseMatrix identity(int n);
  static SparseMatrix diagonal(const std::vector<double>& d);

  /// Entry lookup by binary search; zero when not stored.
  double at(int i, int j) const;
};

struct Triplet {
  int row;
  int col;
  double value;
};

/// Sorts, merges duplicates, and drops explicit zeros. Idempotent.
SparseMatrix from_triplets(int nrows, int ncols, std::vector<Triplet> trips);

/// Sorts rows and merges duplicate entries in-place; drops stored zeros.
void canonicalize(SparseMatrix& m);

std::vector<double> spmv(const SparseMatrix& m, const std::vector<double>& x);

SparseMatrix transpose(const SparseMatrix& m);

SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b);

/// P^T K P with K square.
SparseMatrix galerkin_triple(const SparseMatrix& p, const SparseMatrix& k);

SparseMatrix sparse_add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0, double beta = 1.0);

/// Row/column range extraction, half-open intervals.
SparseMatrix extract_block(const SparseMatrix& m, int r0, int r1, int c0, int c1);

/// Block-diagonal concatenation.
SparseMatrix block_diag(const std::vector<const SparseMatrix*>& blocks);

/// Reciprocal diagonal; throws ZeroDiagonal if any diagonal entry is zero or missing.
std::vector<double> inv_diagonal(const SparseMatrix& m);

std::vector<double> diagonal_of(const SparseMatrix& m);

double norm2(const std::vector<double>& v);
double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm_inf(const SparseMatrix& m);

/// Power-iteration estimate of the spectral radius of D^{-1} M from a
/// fixed-seed random start.
double power_rho_estimate(const SparseMatrix& m, const std::vector<double>& d_inv, int iters,
                          unsigned seed = 1234);

/// Row-major dense matrix.
struct DenseMatrix {
  int nrows = 0;
  int ncols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(int nr, int nc) : nrows(nr), ncols(nc), values(static_cast<size_t>(nr) * nc, 0.0) {}

  double& operator()(int i, int j) { return values[static_cast<size_t>(i) * ncols + j]; }
  double operator()(int i, int j) const { return values[static_cast<size_t>(i) * ncols + j]; }

  static DenseMatrix identity(int n);
};

DenseMatrix to_dense(const SparseMatrix& m);
DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix dense_transpose(const DenseMatrix& a);
std::vector<double> dense_matvec(const DenseMatrix& a, const std::vector<double>& x);

/// Packed LU with partial pivoting.
struct LUFactors {
  DenseMatrix lu;          // L (unit lower, implicit diag) and U packed together
  std::vector<int> pivot;  // row permutation applied during elimination
};

LUFactors dense_lu_factor(const DenseMatrix& m);
std::vector<double> dense_lu_solve(const LUFactors& f, const std::vector<double>& b);
void dense_lu_solve_inplace(const LUFactors& f, double* b);

/// MatrixMarket coordinate format, "matrix coordinate real general", 1-based.
void write_matrix_market(const SparseMatrix& m, const std::string& path);
SparseMatrix read_matrix_market(const std::string& path);

}  // namespace stokesamg
