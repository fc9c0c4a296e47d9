// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_TOPOLOGY_HPP
#define FITMF_TOPOLOGY_HPP

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fitmf/grid.hpp"
#include "fitmf/parallel.hpp"

namespace fitmf
{

using Complex = std::complex<double>;

class DimensionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//
// Compressed sparse row matrix with 4-byte indices. Column indices are strictly
// increasing within each row.
//
template <typename T>
struct CsrMatrix
{
  std::int32_t n_rows = 0;
  std::int32_t n_cols = 0;
  std::vector<std::int32_t> row_ptr{0};
  std::vector<std::int32_t> col_idx;
  std::vector<T> values;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx.size()); }
  std::int32_t row_nnz(std::int32_t r) const { return row_ptr[r + 1] - row_ptr[r]; }

  // Entry (r, c), zero when not stored.
  T coeff(std::int32_t r, std::int32_t c) const;

  // Bytes held by the three arrays.
  std::int64_t bytes() const
  {
    return std::int64_t(row_ptr.size()) * 4 + std::int64_t(col_idx.size()) * 4 +
           std::int64_t(values.size()) * std::int64_t(sizeof(T));
  }

  // Throws if the structural invariants are violated.
  void validate() const;
};

//
// A sparse operator and, optionally, its explicitly stored transpose. The transpose
// product gathers over rows of the stored transpose so output rows can be split across
// workers; without it the product falls back to a serial scatter.
//
template <typename T>
struct SparseOperator
{
  CsrMatrix<T> matrix;
  std::optional<CsrMatrix<T>> transposed;

  std::int32_t n_rows() const { return matrix.n_rows; }
  std::int32_t n_cols() const { return matrix.n_cols; }
  bool has_transpose() const { return transposed.has_value(); }
  std::int64_t bytes() const
  {
    return matrix.bytes() + (transposed ? transposed->bytes() : 0);
  }
  // Stores the transpose (no-op when already present).
  void materialize_transpose();
};

template <typename T>
CsrMatrix<T> transpose(const CsrMatrix<T> &a);

// Discrete curl C: facet circulations from edge voltages. Square, dimension 3*Np, entries
// +-1 at the (up to four) edges bounding each facet, oriented by the right-hand rule
// around the facet normal.
SparseOperator<double> build_curl(const Grid &grid);

// Discrete gradient G (3*Np x Np): edge (n, dir) holds +1 at its head node and -1 at its
// tail node. Degenerate edges have no head node and keep only the -1 entry, which makes
// C*G = 0 hold on every row.
SparseOperator<double> build_gradient(const Grid &grid);

// y = op * x. Output rows are split over the executor's chunks, so exec.size() must equal
// the row count; pass nullptr to run serially.
template <typename M, typename V>
void spmv(const CsrMatrix<M> &op, std::span<const V> x, std::span<V> y,
          const Exec *exec = nullptr);

template <typename M, typename V>
void spmv(const SparseOperator<M> &op, std::span<const V> x, std::span<V> y,
          const Exec *exec = nullptr)
{
  spmv(op.matrix, x, y, exec);
}

// y = op^T * x (plain transpose, no conjugation).
template <typename M, typename V>
void spmv_transpose(const SparseOperator<M> &op, std::span<const V> x, std::span<V> y,
                    const Exec *exec = nullptr);

// Matrix Market coordinate export ("real general" or "complex general").
template <typename T>
void write_matrix_market(const CsrMatrix<T> &a, std::ostream &os);

}  // namespace fitmf

#endif  // FITMF_TOPOLOGY_HPP
