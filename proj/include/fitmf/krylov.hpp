// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_KRYLOV_HPP
#define FITMF_KRYLOV_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fitmf/operator.hpp"
#include "fitmf/parallel.hpp"

namespace fitmf
{

enum class Method
{
  cg,
  bcgs,
  cr,
  gmres,
  cgs,
};

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

// Operator applications per iteration (CG/CR/GMRES 1, BiCGStab/CGS 2).
int applies_per_iteration(Method m);

struct SolveOptions
{
  Method method = Method::cg;
  double tol = 1e-12;
  int max_iter = 10000;
  int restart = 30;
  // CGS is unreliable close to resonances; it only runs when explicitly enabled.
  bool allow_cgs = false;
};

template <typename T>
struct SolveReport
{
  std::vector<T> x;
  int iterations = 0;
  // Relative residual ||b - A x|| / ||b||, entry 0 is 1.
  std::vector<double> residual_history;
  bool converged = false;
  // Residual recomputed from the returned x (one extra operator application).
  double true_residual = 0.0;
  std::int64_t applies = 0;
  std::int64_t mults_consumed = 0;
  std::optional<int> breakdown_iteration;
  std::string message;
};

template <typename T>
class Preconditioner
{
public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const T> r, std::span<T> z) const = 0;
};

template <typename T>
class IdentityPreconditioner : public Preconditioner<T>
{
public:
  void apply(std::span<const T> r, std::span<T> z) const override
  {
    std::copy(r.begin(), r.end(), z.begin());
  }
};

//
// Shifted Jacobi preconditioner z_i = r_i / max(|P_ii - omega^2|, floor) with
// floor = eps_mach * max_i |P_ii|; masked unknowns map to zero. The scaling is real and
// positive, so it keeps real and complex symmetric systems symmetric.
//
template <typename T>
class JacobiPreconditioner : public Preconditioner<T>
{
public:
  JacobiPreconditioner(std::span<const T> diagonal, std::span<const std::uint8_t> mask,
                       double omega, const Exec *exec = nullptr);
  void apply(std::span<const T> r, std::span<T> z) const override;
  // 1 / max(|P_ii - omega^2|, floor), zero on masked entries.
  const std::vector<double> &inverse_scaling() const { return inv_; }

private:
  std::vector<double> inv_;
  const Exec *exec_;
};

// One-shot form of JacobiPreconditioner::apply.
template <typename T>
std::vector<T> jacobi_apply(std::span<const T> diagonal, std::span<const std::uint8_t> mask,
                            double omega, std::span<const T> r);

// Solves op(x) = b from a zero initial guess. Reductions run on exec. When the recursive
// residual drops below tol the true residual is recomputed; if it has drifted above tol
// the method restarts from the current iterate.
template <typename T>
SolveReport<T> solve(const SolveOptions &opts, LinearMap<T> &op, const Preconditioner<T> &pc,
                     std::span<const T> b, const Exec &exec);

// Same, with operator counters folded into the report.
template <typename T>
SolveReport<T> solve(const SolveOptions &opts, ShellOperator<T> &op,
                     const Preconditioner<T> &pc, std::span<const T> b, const Exec &exec);

}  // namespace fitmf

#endif  // FITMF_KRYLOV_HPP
