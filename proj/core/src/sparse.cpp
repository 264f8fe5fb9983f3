#include "stokesamg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "stokesamg/errors.hpp"

namespace stokesamg {

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m(n, n);
  m.col_indices.resize(n);
  m.values.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    m.col_indices[i] = i;
    m.row_offsets[i + 1] = i + 1;
  }
  return m;
}

SparseMatrix SparseMatrix::diagonal(const std::vector<double>& d) {
  const int n = static_cast<int>(d.size());
  std::vector<Triplet> trips;
  trips.reserve(d.size());
  for (int i = 0; i < n; ++i) trips.push_back({i, i, d[i]});
  return from_triplets(n, n, std::move(trips));
}

double SparseMatrix::at(int i, int j) const {
  const int lo = row_offsets[i];
  const int hi = row_offsets[i + 1];
  auto it = std::lower_bound(col_indices.begin() + lo, col_indices.begin() + hi, j);
  if (it != col_indices.begin() + hi && *it == j) {
    return values[it - col_indices.begin()];
  }
  return 0.0;
}

SparseMatrix from_triplets(int nrows, int ncols, std::vector<Triplet> trips) {
  std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(nrows, ncols);
  size_t i = 0;
  while (i < trips.size()) {
    size_t j = i;
    double sum = 0.0;
    while (j < trips.size() && trips[j].row == trips[i].row && trips[j].col == trips[i].col) {
      sum += trips[j].value;
      ++j;
    }
    if (sum != 0.0) {
      m.col_indices.push_back(trips[i].col);
      m.values.push_back(sum);
      m.row_offsets[trips[i].row + 1]++;
    }
    i = j;
  }
  for (int r = 0; r < nrows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
  return m;
}

void canonicalize(SparseMatrix& m) {
  std::vector<Triplet> trips;
  trips.reserve(m.values.size());
  for (int r = 0; r < m.nrows; ++r) {
    for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      trips.push_back({r, m.col_indices[k], m.values[k]});
    }
  }
  m = from_triplets(m.nrows, m.ncols, std::move(trips));
}

std::vector<double> spmv(const SparseMatrix& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.ncols) {
    throw DimensionMismatch("spmv: vector length does not match column count");
  }
  std::vector<double> y(m.nrows, 0.0);
  for (int r = 0; r < m.nrows; ++r) {
    double acc = 0.0;
    for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      acc += m.values[k] * x[m.col_indices[k]];
    }
    y[r] = acc;
  }
  return y;
}

SparseMatrix transpose(const SparseMatrix& m) {
  SparseMatrix t(m.ncols, m.nrows);
  std::vector<int> counts(m.ncols, 0);
  for (int c : m.col_indices) counts[c]++;
  t.row_offsets.assign(m.ncols + 1, 0);
  for (int c = 0; c < m.ncols; ++c) t.row_offsets[c + 1] = t.row_offsets[c] + counts[c];
  t.col_indices.resize(m.nnz());
  t.values.resize(m.nnz());
  std::vector<int> next(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (int r = 0; r < m.nrows; ++r) {
    for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      const int c = m.col_indices[k];
      t.col_indices[next[c]] = r;
      t.values[next[c]] = m.values[k];
      ++next[c];
    }
  }
  return t;
}

SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.ncols != b.nrows) throw DimensionMismatch("spgemm: inner dimensions differ");
  SparseMatrix c(a.nrows, b.ncols);
  std::vector<double> accum(b.ncols, 0.0);
  std::vector<int> marker(b.ncols, -1);
  std::vector<int> cols;
  for (int r = 0; r < a.nrows; ++r) {
    cols.clear();
    for (int ka = a.row_offsets[r]; ka < a.row_offsets[r + 1]; ++ka) {
      const int j = a.col_indices[ka];
      const double av = a.values[ka];
      for (int kb = b.row_offsets[j]; kb < b.row_offsets[j + 1]; ++kb) {
        const int col = b.col_indices[kb];
        if (marker[col] != r) {
          marker[col] = r;
          accum[col] = 0.0;
          cols.push_back(col);
        }
        accum[col] += av * b.values[kb];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (int col : cols) {
      if (accum[col] != 0.0) {
        c.col_indices.push_back(col);
        c.values.push_back(accum[col]);
      }
    }
    c.row_offsets[r + 1] = static_cast<int>(c.col_indices.size());
  }
  return c;
}

SparseMatrix galerkin_triple(const SparseMatrix& p, const SparseMatrix& k) {
  if (k.nrows != k.ncols) throw DimensionMismatch("galerkin_triple: K must be square");
  if (k.nrows != p.nrows) throw DimensionMismatch("galerkin_triple: K and P row counts differ");
  return spgemm(transpose(p), spgemm(k, p));
}

SparseMatrix sparse_add(const SparseMatrix& a, const SparseMatrix& b, double alpha, double beta) {
  if (a.nrows != b.nrows || a.ncols != b.ncols) throw DimensionMismatch("sparse_add: shapes differ");
  std::vector<Triplet> trips;
  trips.reserve(a.values.size() + b.values.size());
  for (int r = 0; r < a.nrows; ++r) {
    for (int k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
      trips.push_back({r, a.col_indices[k], alpha * a.values[k]});
    for (int k = b.row_offsets[r]; k < b.row_offsets[r + 1]; ++k)
      trips.push_back({r, b.col_indices[k], beta * b.values[k]});
  }
  return from_triplets(a.nrows, a.ncols, std::move(trips));
}

SparseMatrix extract_block(const SparseMatrix& m, int r0, int r1, int c0, int c1) {
  SparseMatrix out(r1 - r0, c1 - c0);
  for (int r = r0; r < r1; ++r) {
    for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      const int c = m.col_indices[k];
      if (c >= c0 && c < c1) {
        out.col_indices.push_back(c - c0);
        out.values.push_back(m.values[k]);
      }
    }
    out.row_offsets[r - r0 + 1] = static_cast<int>(out.col_indices.size());
  }
  return out;
}

SparseMatrix block_diag(const std::vector<const SparseMatrix*>& blocks) {
  int nr = 0, nc = 0;
  for (const auto* b : blocks) {
    nr += b->nrows;
    nc += b->ncols;
  }
  SparseMatrix out(nr, nc);
  int roff = 0, coff = 0;
  for (const auto* b : blocks) {
    for (int r = 0; r < b->nrows; ++r) {
      for (int k = b->row_offsets[r]; k < b->row_offsets[r + 1]; ++k) {
        out.col_indices.push_back(b->col_indices[k] + coff);
        out.values.push_back(b->values[k]);
      }
      out.row_offsets[roff + r + 1] = static_cast<int>(out.col_indices.size());
    }
    roff += b->nrows;
    coff += b->ncols;
  }
  return out;
}

std::vector<double> diagonal_of(const SparseMatrix& m) {
  std::vector<double> d(m.nrows, 0.0);
  for (int r = 0; r < m.nrows; ++r) d[r] = m.at(r, r);
  return d;
}

std::vector<double> inv_diagonal(const SparseMatrix& m) {
  std::vector<double> d = diagonal_of(m);
  for (int r = 0; r < m.nrows; ++r) {
    if (d[r] == 0.0) throw ZeroDiagonal("inv_diagonal: zero diagonal at row " + std::to_string(r));
    d[r] = 1.0 / d[r];
  }
  return d;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(const SparseMatrix& m) {
  double best = 0.0;
  for (int r = 0; r < m.nrows; ++r) {
    double s = 0.0;
    for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) s += std::abs(m.values[k]);
    best = std::max(best, s);
  }
  return best;
}

double power_rho_estimate(const SparseMatrix& m, const std::vector<double>& d_inv, int iters,
                          unsigned seed) {
  if (m.nrows != m.ncols) throw DimensionMismatch("power_rho_estimate: matrix must be square");
  if (static_cast<int>(d_inv.size()) != m.nrows)
    throw DimensionMismatch("power_rho_estimate: diagonal length mismatch");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(m.nrows);
  for (double& v : x) v = dist(rng);
  const double nx = norm2(x);
  if (nx == 0.0 || m.nrows == 0) return 0.0;
  for (double& v : x) v /= nx;
  double rho = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> y = spmv(m, x);
    for (int i = 0; i < m.nrows; ++i) y[i] *= d_inv[i];
    const double ny = norm2(y);
    if (ny == 0.0) return 0.0;
    rho = ny;
    for (int i = 0; i < m.nrows; ++i) x[i] = y[i] / ny;
  }
  return rho;
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix to_dense(const SparseMatrix& m) {
  DenseMatrix d(m.nrows, m.ncols);
  for (int r = 0; r < m.nrows; ++r) {
    for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      d(r, m.col_indices[k]) += m.values[k];
    }
  }
  return d;
}

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.ncols != b.nrows) throw DimensionMismatch("dense_matmul: inner dimensions differ");
  DenseMatrix c(a.nrows, b.ncols);
  for (int i = 0; i < a.nrows; ++i) {
    for (int k = 0; k < a.ncols; ++k) {
      const double av = a(i, k);
      if (av == 0.0) continue;
      for (int j = 0; j < b.ncols; ++j) c(i, j) += av * b(k, j);
    }
  }
  return c;
}

DenseMatrix dense_transpose(const DenseMatrix& a) {
  DenseMatrix t(a.ncols, a.nrows);
  for (int i = 0; i < a.nrows; ++i)
    for (int j = 0; j < a.ncols; ++j) t(j, i) = a(i, j);
  return t;
}

std::vector<double> dense_matvec(const DenseMatrix& a, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != a.ncols) throw DimensionMismatch("dense_matvec: length mismatch");
  std::vector<double> y(a.nrows, 0.0);
  for (int i = 0; i < a.nrows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < a.ncols; ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

LUFactors dense_lu_factor(const DenseMatrix& m) {
  if (m.nrows != m.ncols) throw DimensionMismatch("dense_lu_factor: matrix must be square");
  const int n = m.nrows;
  LUFactors f;
  f.lu = m;
  f.pivot.resize(n);
  std::iota(f.pivot.begin(), f.pivot.end(), 0);
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(f.lu(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(f.lu(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw SingularMatrix("dense_lu_factor: singular pivot column " + std::to_string(k));
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
      std::swap(f.pivot[k], f.pivot[p]);
    }
    const double inv_piv = 1.0 / f.lu(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double mult = f.lu(i, k) * inv_piv;
      f.lu(i, k) = mult;
      if (mult == 0.0) continue;
      for (int j = k + 1; j < n; ++j) f.lu(i, j) -= mult * f.lu(k, j);
    }
  }
  return f;
}

void dense_lu_solve_inplace(const LUFactors& f, double* b) {
  const int n = f.lu.nrows;
  // apply permutation
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[f.pivot[i]];
  // forward
  for (int i = 1; i < n; ++i) {
    double acc = x[i];
    for (int j = 0; j < i; ++j) acc -= f.lu(i, j) * x[j];
    x[i] = acc;
  }
  // backward
  for (int i = n - 1; i >= 0; --i) {
    double acc = x[i];
    for (int j = i + 1; j < n; ++j) acc -= f.lu(i, j) * x[j];
    x[i] = acc / f.lu(i, i);
  }
  for (int i = 0; i < n; ++i) b[i] = x[i];
}

std::vector<double> dense_lu_solve(const LUFactors& f, const std::vector<double>& b) {
  if (static_cast<int>(b.size()) != f.lu.nrows)
    throw DimensionMismatch("dense_lu_solve: length mismatch");
  std::vector<double> x = b;
  dense_lu_solve_inplace(f, x.data());
  return x;
}

void write_matrix_market(const SparseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MalformedFile("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.nrows << " " << m.ncols << " " << m.nnz() << "\n";
  out.precision(17);
  for (int r = 0; r < m.nrows; ++r) {
    for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      out << (r + 1) << " " << (m.col_indices[k] + 1) << " " << m.values[k] << "\n";
    }
  }
}

SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedFile("read_matrix_market: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw MalformedFile("read_matrix_market: missing header");
  if (line.find("coordinate") == std::string::npos || line.find("real") == std::string::npos)
    throw MalformedFile("read_matrix_market: unsupported format");
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream hdr(line);
  int nr = 0, nc = 0;
  long nnz = 0;
  if (!(hdr >> nr >> nc >> nnz)) throw MalformedFile("read_matrix_market: bad size line");
  std::vector<Triplet> trips;
  trips.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    int i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw MalformedFile("read_matrix_market: truncated entries");
    if (i < 1 || i > nr || j < 1 || j > nc)
      throw MalformedFile("read_matrix_market: index out of range");
    trips.push_back({i - 1, j - 1, v});
  }
  return from_triplets(nr, nc, std::move(trips));
}

}  // namespace stokesamg
