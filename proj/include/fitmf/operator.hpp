// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_OPERATOR_HPP
#define FITMF_OPERATOR_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fitmf/materials.hpp"
#include "fitmf/topology.hpp"

namespace fitmf
{

// Abstract square linear map used by the Krylov solvers.
template <typename T>
class LinearMap
{
public:
  virtual ~LinearMap() = default;
  virtual std::int64_t size() const = 0;
  virtual void apply(std::span<const T> x, std::span<T> y) = 0;
};

enum class Variant
{
  e2s,   // explicitly assembled A = S^T S, S = M_mu^-1/2 C M_eps^-1/2
  e2t,   // five stages: diag, C, diag, C^T, diag
  e2tt,  // two stages through the scaled curl S
};

std::string_view to_string(Variant v);
// Accepts e2s/e2t/e2tt (also "assembled", "shell_e2t", "shell_e2tt").
Variant parse_variant(std::string_view name);

//
// Per-apply cost model. mults_per_apply is the nominal count per row: the matrix part
// (13, 11 and 8) plus one multiplication per row for the -omega^2 shift on the
// matrix-free variants; the assembled variant folds the shift into its diagonal entry.
// model_memory_bytes is the nominal storage model (164, 80, 72 bytes per unknown);
// actual_memory_bytes is what this process holds for the operator, scratch included.
//
struct OperatorStats
{
  Variant variant = Variant::e2tt;
  std::int64_t n_e = 0;
  std::int64_t matrix_mults_per_apply = 0;
  std::int64_t shift_mults_per_apply = 0;
  std::int64_t mults_per_apply = 0;
  std::int64_t actual_mults_per_apply = 0;  // from stored nonzeros, boundary rows included
  std::int64_t model_memory_bytes = 0;
  std::int64_t actual_memory_bytes = 0;
  std::int64_t nnz = 0;
  int scratch_vectors = 0;
  bool transpose_materialized = false;
};

// Model multiplication constant per unknown (13, 12, 9) and memory constant (164, 80, 72).
int mults_constant(Variant v);
int memory_constant(Variant v);

//
// The map x -> (A - omega^2 I) x with A = M_eps^-1/2 C^T M_mu^-1 C M_eps^-1/2, in one of the
// three realizations. Structures are shared (cheap copies); scratch vectors are owned, so
// one instance must not be applied concurrently. Copy the operator per worker instead.
//
template <typename T>
class ShellOperator : public LinearMap<T>
{
public:
  // Five-stage pipeline on the unscaled curl. inv_mu is the diagonal of M_mu^-1.
  static ShellOperator e2t(std::shared_ptr<const SparseOperator<double>> curl,
                           std::shared_ptr<const std::vector<T>> inv_sqrt_eps,
                           std::shared_ptr<const std::vector<T>> inv_mu, double omega);
  // Two-stage pipeline on the scaled curl S.
  static ShellOperator e2tt(std::shared_ptr<const SparseOperator<T>> scaled, double omega);
  // Assembled A; every row must store its diagonal entry.
  static ShellOperator e2s(std::shared_ptr<const CsrMatrix<T>> assembled, double omega);

  std::int64_t size() const override { return n_; }
  void apply(std::span<const T> x, std::span<T> y) override;

  Variant variant() const { return variant_; }
  double omega() const { return omega_; }
  void set_omega(double omega) { omega_ = omega; }

  // Parallel execution over the unknown layers; exec->size() must equal size().
  void set_exec(const Exec *exec) { exec_ = exec; }
  const Exec *exec() const { return exec_; }

  std::int64_t applies() const { return applies_; }
  std::int64_t mults() const { return mults_; }
  void reset_counters()
  {
    applies_ = 0;
    mults_ = 0;
  }

  OperatorStats stats() const;

private:
  ShellOperator() = default;

  Variant variant_ = Variant::e2tt;
  std::int64_t n_ = 0;
  double omega_ = 0.0;
  const Exec *exec_ = nullptr;

  std::shared_ptr<const SparseOperator<double>> curl_;
  std::shared_ptr<const std::vector<T>> inv_sqrt_eps_, inv_mu_;
  std::shared_ptr<const SparseOperator<T>> scaled_;
  std::shared_ptr<const CsrMatrix<T>> assembled_;
  std::vector<std::int32_t> diag_pos_;

  std::vector<T> buf0_, buf1_;
  std::int64_t applies_ = 0;
  std::int64_t mults_ = 0;
};

// Explicit S^T S in CSR. Every row stores its diagonal (zero on masked rows); exact zero
// off-diagonal products from masked columns are dropped.
template <typename T>
CsrMatrix<T> assemble_sparse_A(const SparseOperator<T> &scaled);

// Jacobi diagonal P_ii = sum_k S_ki^2 (plain square, no conjugation), one pass over S.
template <typename T>
std::vector<T> jacobi_diagonal(const SparseOperator<T> &scaled);

OperatorStats op_stats(Variant v, std::int64_t n_e);

// key=value lines and a JSON object.
std::string stats_text(const OperatorStats &s);
std::string stats_json(const OperatorStats &s);

}  // namespace fitmf

#endif  // FITMF_OPERATOR_HPP
