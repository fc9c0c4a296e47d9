// SPDX-License-Identifier: Apache-2.0

#include "fitmf/topology.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>

namespace fitmf
{

template <typename T>
T CsrMatrix<T>::coeff(std::int32_t r, std::int32_t c) const
{
  const auto first = col_idx.begin() + row_ptr[r], last = col_idx.begin() + row_ptr[r + 1];
  const auto it = std::lower_bound(first, last, c);
  return (it != last && *it == c) ? values[it - col_idx.begin()] : T(0);
}

template <typename T>
void CsrMatrix<T>::validate() const
{
  if (static_cast<std::int64_t>(row_ptr.size()) != std::int64_t(n_rows) + 1 ||
      row_ptr.front() != 0 || row_ptr.back() != static_cast<std::int32_t>(col_idx.size()) ||
      col_idx.size() != values.size())
  {
    throw DimensionError("csr: array sizes inconsistent");
  }
  for (std::int32_t r = 0; r < n_rows; r++)
  {
    if (row_ptr[r + 1] < row_ptr[r])
    {
      throw DimensionError("csr: row_ptr decreasing at row " + std::to_string(r));
    }
    for (std::int32_t p = row_ptr[r]; p < row_ptr[r + 1]; p++)
    {
      if (col_idx[p] < 0 || col_idx[p] >= n_cols || (p > row_ptr[r] && col_idx[p] <= col_idx[p - 1]))
      {
        throw DimensionError("csr: bad column index in row " + std::to_string(r));
      }
    }
  }
}

template <typename T>
CsrMatrix<T> transpose(const CsrMatrix<T> &a)
{
  CsrMatrix<T> t;
  t.n_rows = a.n_cols;
  t.n_cols = a.n_rows;
  t.row_ptr.assign(std::size_t(t.n_rows) + 1, 0);
  for (auto c : a.col_idx)
  {
    t.row_ptr[c + 1]++;
  }
  for (std::int32_t r = 0; r < t.n_rows; r++)
  {
    t.row_ptr[r + 1] += t.row_ptr[r];
  }
  t.col_idx.resize(a.col_idx.size());
  t.values.resize(a.values.size());
  std::vector<std::int32_t> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows of a are visited in order, so columns of t come out sorted.
  for (std::int32_t r = 0; r < a.n_rows; r++)
  {
    for (std::int32_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; p++)
    {
      const auto dst = fill[a.col_idx[p]]++;
      t.col_idx[dst] = r;
      t.values[dst] = a.values[p];
    }
  }
  return t;
}

template <typename T>
void SparseOperator<T>::materialize_transpose()
{
  if (!transposed)
  {
    transposed = transpose(matrix);
  }
}

namespace
{

// Rows are emitted in order; each row is a small sorted map col -> value.
class CsrBuilder
{
public:
  CsrBuilder(std::int32_t rows, std::int32_t cols, std::int64_t reserve)
  {
    m_.n_rows = rows;
    m_.n_cols = cols;
    m_.row_ptr.reserve(std::size_t(rows) + 1);
    m_.col_idx.reserve(reserve);
    m_.values.reserve(reserve);
  }
  void add(std::int32_t col, double v) { row_[col] += v; }
  void end_row()
  {
    for (const auto &[c, v] : row_)
    {
      m_.col_idx.push_back(c);
      m_.values.push_back(v);
    }
    row_.clear();
    m_.row_ptr.push_back(static_cast<std::int32_t>(m_.col_idx.size()));
  }
  CsrMatrix<double> finish() { return std::move(m_); }

private:
  CsrMatrix<double> m_;
  std::map<std::int32_t, double> row_;
};

Node step(Node n, Axis a)
{
  n[a] += 1;
  return n;
}

}  // namespace

SparseOperator<double> build_curl(const Grid &grid)
{
  const auto ne = static_cast<std::int32_t>(grid.num_edges());
  CsrBuilder b(ne, ne, 4 * std::int64_t(ne));
  for (std::int64_t p = 0; p < grid.num_nodes(); p++)
  {
    const Node n = grid.node_of(p);
    for (Axis w : kAxes)
    {
      // Circulation around the facet normal to w: +e_u(n) + e_v(n+u) - e_u(n+v) - e_v(n).
      const Axis u = next_axis(w), v = prev_axis(w);
      b.add(grid.edge_index(n, u), 1.0);
      b.add(grid.edge_index(n, v), -1.0);
      if (grid.has_next(n, u))
      {
        b.add(grid.edge_index(step(n, u), v), 1.0);
      }
      if (grid.has_next(n, v))
      {
        b.add(grid.edge_index(step(n, v), u), -1.0);
      }
      b.end_row();
    }
  }
  return {b.finish(), std::nullopt};
}

SparseOperator<double> build_gradient(const Grid &grid)
{
  const auto ne = static_cast<std::int32_t>(grid.num_edges());
  const auto np = static_cast<std::int32_t>(grid.num_nodes());
  CsrBuilder b(ne, np, 2 * std::int64_t(ne));
  for (std::int64_t p = 0; p < grid.num_nodes(); p++)
  {
    const Node n = grid.node_of(p);
    for (Axis w : kAxes)
    {
      b.add(static_cast<std::int32_t>(p), -1.0);
      if (grid.has_next(n, w))
      {
        b.add(static_cast<std::int32_t>(grid.node_index(step(n, w))), 1.0);
      }
      b.end_row();
    }
  }
  return {b.finish(), std::nullopt};
}

namespace
{

template <typename M, typename V>
void spmv_rows(const CsrMatrix<M> &op, const V *x, V *y, std::int64_t r0, std::int64_t r1)
{
  const auto *rp = op.row_ptr.data();
  const auto *ci = op.col_idx.data();
  const auto *va = op.values.data();
  for (std::int64_t r = r0; r < r1; r++)
  {
    V acc(0);
    for (std::int32_t p = rp[r]; p < rp[r + 1]; p++)
    {
      acc += va[p] * x[ci[p]];
    }
    y[r] = acc;
  }
}

}  // namespace

template <typename M, typename V>
void spmv(const CsrMatrix<M> &op, std::span<const V> x, std::span<V> y, const Exec *exec)
{
  if (static_cast<std::int64_t>(x.size()) != op.n_cols ||
      static_cast<std::int64_t>(y.size()) != op.n_rows)
  {
    throw DimensionError("spmv: dimension mismatch (" + std::to_string(op.n_rows) + "x" +
                         std::to_string(op.n_cols) + " vs x=" + std::to_string(x.size()) +
                         ", y=" + std::to_string(y.size()) + ")");
  }
  if (exec && exec->size() == op.n_rows)
  {
    exec->for_ranges([&](IndexRange r)
                     { spmv_rows(op, x.data(), y.data(), r.begin, r.end); });
  }
  else
  {
    spmv_rows(op, x.data(), y.data(), 0, op.n_rows);
  }
}

template <typename M, typename V>
void spmv_transpose(const SparseOperator<M> &op, std::span<const V> x, std::span<V> y,
                    const Exec *exec)
{
  if (static_cast<std::int64_t>(x.size()) != op.n_rows() ||
      static_cast<std::int64_t>(y.size()) != op.n_cols())
  {
    throw DimensionError("spmv_transpose: dimension mismatch");
  }
  if (op.transposed)
  {
    spmv(*op.transposed, x, y, exec);
    return;
  }
  std::fill(y.begin(), y.end(), V(0));
  const auto &a = op.matrix;
  for (std::int32_t r = 0; r < a.n_rows; r++)
  {
    for (std::int32_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; p++)
    {
      y[a.col_idx[p]] += a.values[p] * x[r];
    }
  }
}

namespace
{

void write_value(std::ostream &os, double v)
{
  os << v;
}
void write_value(std::ostream &os, const Complex &v)
{
  os << v.real() << ' ' << v.imag();
}

}  // namespace

template <typename T>
void write_matrix_market(const CsrMatrix<T> &a, std::ostream &os)
{
  constexpr bool is_complex = std::is_same_v<T, Complex>;
  os << "%%MatrixMarket matrix coordinate " << (is_complex ? "complex" : "real")
     << " general\n";
  os << a.n_rows << ' ' << a.n_cols << ' ' << a.nnz() << '\n';
  os << std::setprecision(17);
  for (std::int32_t r = 0; r < a.n_rows; r++)
  {
    for (std::int32_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; p++)
    {
      os << r + 1 << ' ' << a.col_idx[p] + 1 << ' ';
      write_value(os, a.values[p]);
      os << '\n';
    }
  }
}

template struct CsrMatrix<double>;
template struct CsrMatrix<Complex>;
template struct SparseOperator<double>;
template struct SparseOperator<Complex>;
template CsrMatrix<double> transpose(const CsrMatrix<double> &);
template CsrMatrix<Complex> transpose(const CsrMatrix<Complex> &);
template void spmv(const CsrMatrix<double> &, std::span<const double>, std::span<double>,
                   const Exec *);
template void spmv(const CsrMatrix<double> &, std::span<const Complex>, std::span<Complex>,
                   const Exec *);
template void spmv(const CsrMatrix<Complex> &, std::span<const Complex>, std::span<Complex>,
                   const Exec *);
template void spmv_transpose(const SparseOperator<double> &, std::span<const double>,
                             std::span<double>, const Exec *);
template void spmv_transpose(const SparseOperator<double> &, std::span<const Complex>,
                             std::span<Complex>, const Exec *);
template void spmv_transpose(const SparseOperator<Complex> &, std::span<const Complex>,
                             std::span<Complex>, const Exec *);
template void write_matrix_market(const CsrMatrix<double> &, std::ostream &);
template void write_matrix_market(const CsrMatrix<Complex> &, std::ostream &);

}  // namespace fitmf
