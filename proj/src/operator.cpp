// SPDX-License-Identifier: Apache-2.0

#include "fitmf/operator.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fitmf
{

std::string_view to_string(Variant v)
{
  switch (v)
  {
    case Variant::e2s:
      return "e2s";
    case Variant::e2t:
      return "e2t";
    case Variant::e2tt:
      return "e2tt";
  }
  return "?";
}

Variant parse_variant(std::string_view name)
{
  if (name == "e2s" || name == "assembled" || name == "assembled_e2s")
  {
    return Variant::e2s;
  }
  if (name == "e2t" || name == "shell_e2t")
  {
    return Variant::e2t;
  }
  if (name == "e2tt" || name == "shell_e2tt")
  {
    return Variant::e2tt;
  }
  throw std::invalid_argument("unknown operator variant '" + std::string(name) +
                              "' (expected e2s, e2t or e2tt)");
}

int mults_constant(Variant v)
{
  switch (v)
  {
    case Variant::e2s:
      return 13;
    case Variant::e2t:
      return 12;
    case Variant::e2tt:
      return 9;
  }
  return 0;
}

int memory_constant(Variant v)
{
  switch (v)
  {
    case Variant::e2s:
      return 164;  // (4+8)*13 + 8 for M_eps^-1/2
    case Variant::e2t:
      return 80;  // 8 + (4+4+8)*4 + 8
    case Variant::e2tt:
      return 72;  // (4+4+8)*4 + 8
  }
  return 0;
}

OperatorStats op_stats(Variant v, std::int64_t n_e)
{
  OperatorStats s;
  s.variant = v;
  s.n_e = n_e;
  s.shift_mults_per_apply = v == Variant::e2s ? 0 : n_e;
  s.mults_per_apply = mults_constant(v) * n_e;
  s.matrix_mults_per_apply = s.mults_per_apply - s.shift_mults_per_apply;
  s.model_memory_bytes = memory_constant(v) * n_e;
  s.scratch_vectors = v == Variant::e2s ? 0 : 2;
  return s;
}

template <typename T>
ShellOperator<T> ShellOperator<T>::e2t(std::shared_ptr<const SparseOperator<double>> curl,
                                       std::shared_ptr<const std::vector<T>> inv_sqrt_eps,
                                       std::shared_ptr<const std::vector<T>> inv_mu,
                                       double omega)
{
  if (!curl || !inv_sqrt_eps || !inv_mu || curl->n_rows() != curl->n_cols() ||
      std::int64_t(inv_sqrt_eps->size()) != curl->n_cols() ||
      std::int64_t(inv_mu->size()) != curl->n_rows())
  {
    throw DimensionError("e2t operator: inconsistent curl/diagonal sizes");
  }
  ShellOperator op;
  op.variant_ = Variant::e2t;
  op.n_ = curl->n_rows();
  op.omega_ = omega;
  op.curl_ = std::move(curl);
  op.inv_sqrt_eps_ = std::move(inv_sqrt_eps);
  op.inv_mu_ = std::move(inv_mu);
  op.buf0_.assign(op.n_, T(0));
  op.buf1_.assign(op.n_, T(0));
  return op;
}

template <typename T>
ShellOperator<T> ShellOperator<T>::e2tt(std::shared_ptr<const SparseOperator<T>> scaled,
                                        double omega)
{
  if (!scaled || scaled->n_rows() != scaled->n_cols())
  {
    throw DimensionError("e2tt operator: scaled curl must be square");
  }
  ShellOperator op;
  op.variant_ = Variant::e2tt;
  op.n_ = scaled->n_rows();
  op.omega_ = omega;
  op.scaled_ = std::move(scaled);
  op.buf0_.assign(op.n_, T(0));
  op.buf1_.assign(op.n_, T(0));
  return op;
}

template <typename T>
ShellOperator<T> ShellOperator<T>::e2s(std::shared_ptr<const CsrMatrix<T>> assembled,
                                       double omega)
{
  if (!assembled || assembled->n_rows != assembled->n_cols)
  {
    throw DimensionError("e2s operator: assembled matrix must be square");
  }
  ShellOperator op;
  op.variant_ = Variant::e2s;
  op.n_ = assembled->n_rows;
  op.omega_ = omega;
  op.diag_pos_.resize(op.n_);
  for (std::int32_t r = 0; r < assembled->n_rows; r++)
  {
    std::int32_t pos = -1;
    for (std::int32_t p = assembled->row_ptr[r]; p < assembled->row_ptr[r + 1]; p++)
    {
      if (assembled->col_idx[p] == r)
      {
        pos = p;
      }
    }
    if (pos < 0)
    {
      throw std::invalid_argument("e2s operator: row " + std::to_string(r) +
                                  " has no stored diagonal");
    }
    op.diag_pos_[r] = pos;
  }
  op.assembled_ = std::move(assembled);
  return op;
}

namespace
{

template <typename F>
void run_ranges(const Exec *exec, std::int64_t n, F &&body)
{
  if (exec && exec->size() == n)
  {
    exec->for_ranges([&](IndexRange r) { body(r.begin, r.end); });
  }
  else
  {
    body(0, n);
  }
}

}  // namespace

template <typename T>
void ShellOperator<T>::apply(std::span<const T> x, std::span<T> y)
{
  if (std::int64_t(x.size()) != n_ || std::int64_t(y.size()) != n_)
  {
    throw DimensionError("operator apply: vector length " + std::to_string(x.size()) +
                         "/" + std::to_string(y.size()) + " != " + std::to_string(n_));
  }
  const double w2 = omega_ * omega_;
  switch (variant_)
  {
    case Variant::e2t:
    {
      const auto &c = curl_->matrix;
      const T *se = inv_sqrt_eps_->data();
      const T *mi = inv_mu_->data();
      T *b0 = buf0_.data();
      T *b1 = buf1_.data();
      // x1 = M_eps^-1/2 x
      run_ranges(exec_, n_,
                 [&](std::int64_t r0, std::int64_t r1)
                 {
                   for (auto i = r0; i < r1; i++)
                   {
                     b0[i] = se[i] * x[i];
                   }
                 });
      // y1 = C x1, then x2 = M_mu^-1 y1 (x2 overwrites the first buffer)
      run_ranges(exec_, n_,
                 [&](std::int64_t r0, std::int64_t r1)
                 {
                   for (auto r = r0; r < r1; r++)
                   {
                     T acc(0);
                     for (auto p = c.row_ptr[r]; p < c.row_ptr[r + 1]; p++)
                     {
                       acc += c.values[p] * b0[c.col_idx[p]];
                     }
                     b1[r] = acc;
                   }
                 });
      run_ranges(exec_, n_,
                 [&](std::int64_t r0, std::int64_t r1)
                 {
                   for (auto i = r0; i < r1; i++)
                   {
                     b0[i] = mi[i] * b1[i];
                   }
                 });
      // y2 = C^T x2, then y = M_eps^-1/2 y2 - omega^2 x
      spmv_transpose<double, T>(*curl_, buf0_, buf1_, exec_);
      run_ranges(exec_, n_,
                 [&](std::int64_t r0, std::int64_t r1)
                 {
                   for (auto i = r0; i < r1; i++)
                   {
                     y[i] = se[i] * b1[i] - w2 * x[i];
                   }
                 });
      break;
    }
    case Variant::e2tt:
    {
      // t = S x; y = S^T t - omega^2 x
      spmv<T, T>(scaled_->matrix, x, buf0_, exec_);
      spmv_transpose<T, T>(*scaled_, buf0_, buf1_, exec_);
      const T *b1 = buf1_.data();
      run_ranges(exec_, n_,
                 [&](std::int64_t r0, std::int64_t r1)
                 {
                   for (auto i = r0; i < r1; i++)
                   {
                     y[i] = b1[i] - w2 * x[i];
                   }
                 });
      break;
    }
    case Variant::e2s:
    {
      const auto &a = *assembled_;
      run_ranges(exec_, n_,
                 [&](std::int64_t r0, std::int64_t r1)
                 {
                   for (auto r = r0; r < r1; r++)
                   {
                     const auto d = diag_pos_[r];
                     T acc(0);
                     for (auto p = a.row_ptr[r]; p < a.row_ptr[r + 1]; p++)
                     {
                       acc += (p == d ? a.values[p] - w2 : a.values[p]) * x[a.col_idx[p]];
                     }
                     y[r] = acc;
                   }
                 });
      break;
    }
  }
  applies_++;
  mults_ += mults_constant(variant_) * n_;
}

template <typename T>
OperatorStats ShellOperator<T>::stats() const
{
  OperatorStats s = op_stats(variant_, n_);
  const std::int64_t scratch = std::int64_t(buf0_.size() + buf1_.size()) * sizeof(T);
  switch (variant_)
  {
    case Variant::e2t:
      s.nnz = curl_->matrix.nnz();
      s.actual_mults_per_apply = 2 * s.nnz + 4 * n_;
      s.actual_memory_bytes = curl_->bytes() +
                              std::int64_t(inv_sqrt_eps_->size() + inv_mu_->size()) * sizeof(T) +
                              scratch;
      s.transpose_materialized = curl_->has_transpose();
      break;
    case Variant::e2tt:
      s.nnz = scaled_->matrix.nnz();
      s.actual_mults_per_apply = 2 * s.nnz + n_;
      s.actual_memory_bytes = scaled_->bytes() + scratch;
      s.transpose_materialized = scaled_->has_transpose();
      break;
    case Variant::e2s:
      s.nnz = assembled_->nnz();
      s.actual_mults_per_apply = s.nnz;
      s.actual_memory_bytes = assembled_->bytes() + std::int64_t(diag_pos_.size()) * 4;
      break;
  }
  return s;
}

template <typename T>
CsrMatrix<T> assemble_sparse_A(const SparseOperator<T> &scaled)
{
  const auto &s = scaled.matrix;
  const CsrMatrix<T> st_local = scaled.transposed ? CsrMatrix<T>{} : transpose(s);
  const CsrMatrix<T> &st = scaled.transposed ? *scaled.transposed : st_local;
  const std::int32_t n = s.n_cols;
  CsrMatrix<T> a;
  a.n_rows = n;
  a.n_cols = n;
  a.row_ptr.reserve(std::size_t(n) + 1);
  a.col_idx.reserve(std::size_t(n) * 13);
  a.values.reserve(std::size_t(n) * 13);
  std::vector<T> acc(n, T(0));
  std::vector<std::int32_t> marker(n, -1);
  std::vector<std::int32_t> cols;
  for (std::int32_t i = 0; i < n; i++)
  {
    cols.clear();
    cols.push_back(i);
    marker[i] = i;
    acc[i] = T(0);
    // A_ij = sum_k S_ki S_kj
    for (auto p = st.row_ptr[i]; p < st.row_ptr[i + 1]; p++)
    {
      const auto k = st.col_idx[p];
      const T ski = st.values[p];
      for (auto q = s.row_ptr[k]; q < s.row_ptr[k + 1]; q++)
      {
        const auto j = s.col_idx[q];
        if (marker[j] != i)
        {
          marker[j] = i;
          acc[j] = T(0);
          cols.push_back(j);
        }
        acc[j] += ski * s.values[q];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (auto j : cols)
    {
      if (j == i || acc[j] != T(0))
      {
        a.col_idx.push_back(j);
        a.values.push_back(acc[j]);
      }
    }
    a.row_ptr.push_back(static_cast<std::int32_t>(a.col_idx.size()));
  }
  return a;
}

template <typename T>
std::vector<T> jacobi_diagonal(const SparseOperator<T> &scaled)
{
  const auto &s = scaled.matrix;
  std::vector<T> p(s.n_cols, T(0));
  for (std::int32_t k = 0; k < s.n_rows; k++)
  {
    for (auto q = s.row_ptr[k]; q < s.row_ptr[k + 1]; q++)
    {
      p[s.col_idx[q]] += s.values[q] * s.values[q];
    }
  }
  return p;
}

std::string stats_text(const OperatorStats &s)
{
  std::ostringstream os;
  os << "variant=" << to_string(s.variant) << '\n'
     << "n_e=" << s.n_e << '\n'
     << "mults_per_apply=" << s.mults_per_apply << '\n'
     << "matrix_mults_per_apply=" << s.matrix_mults_per_apply << '\n'
     << "shift_mults_per_apply=" << s.shift_mults_per_apply << '\n'
     << "actual_mults_per_apply=" << s.actual_mults_per_apply << '\n'
     << "model_memory_bytes=" << s.model_memory_bytes << '\n'
     << "actual_memory_bytes=" << s.actual_memory_bytes << '\n'
     << "nnz=" << s.nnz << '\n'
     << "scratch_vectors=" << s.scratch_vectors << '\n'
     << "transpose_materialized=" << (s.transpose_materialized ? "true" : "false") << '\n';
  return os.str();
}

std::string stats_json(const OperatorStats &s)
{
  nlohmann::json j = {
    {"variant", std::string(to_string(s.variant))},
    {"n_e", s.n_e},
    {"mults_per_apply", s.mults_per_apply},
    {"matrix_mults_per_apply", s.matrix_mults_per_apply},
    {"shift_mults_per_apply", s.shift_mults_per_apply},
    {"actual_mults_per_apply", s.actual_mults_per_apply},
    {"model_memory_bytes", s.model_memory_bytes},
    {"actual_memory_bytes", s.actual_memory_bytes},
    {"nnz", s.nnz},
    {"scratch_vectors", s.scratch_vectors},
    {"transpose_materialized", s.transpose_materialized},
  };
  return j.dump(2);
}

template class ShellOperator<double>;
template class ShellOperator<Complex>;
template CsrMatrix<double> assemble_sparse_A(const SparseOperator<double> &);
template CsrMatrix<Complex> assemble_sparse_A(const SparseOperator<Complex> &);
template std::vector<double> jacobi_diagonal(const SparseOperator<double> &);
template std::vector<Complex> jacobi_diagonal(const SparseOperator<Complex> &);

}  // namespace fitmf
