// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_SWEEP_HPP
#define FITMF_SWEEP_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fitmf/krylov.hpp"
#include "fitmf/operator.hpp"
#include "fitmf/parallel.hpp"
#include "fitmf/ports.hpp"
#include "fitmf/scene.hpp"

namespace fitmf
{

//
// z-slab decomposition. Worker w owns cell layers layer_ranges[w]; its unknowns are the
// node layers with the same indices, and the last busy worker also takes the top node
// layer. A curl row reads node layers k and k+1, a transposed row k-1 and k, so the halo
// is one layer on each side.
//
struct SlicePlan
{
  int n_workers = 1;
  std::vector<IndexRange> layer_ranges;    // cell layers, cover [0, nz)
  std::vector<IndexRange> node_layers;     // node layers, cover [0, nz]
  std::vector<IndexRange> unknown_ranges;  // induced index ranges, cover [0, n_e)
  static constexpr int halo_depth = 1;
};

SlicePlan plan_slices(const Grid &grid, int n_workers);

// Executor with one chunk per node layer and the plan's worker assignment.
Exec make_exec(const Grid &grid, const SlicePlan &plan, WorkerPool *pool);

//
// Frequency-independent pieces for one scene: curl, material diagonals, scaled curl (or
// assembled A) and the Jacobi diagonal. Only the pieces the chosen variant needs are kept.
// Scenes with conductivity depend on omega through the permittivity and are rebuilt by
// prepare() whenever omega changes.
//
template <typename T>
class FitSystem
{
public:
  FitSystem(const SceneModel &model, Variant variant, double omega = 0.0);

  const Grid &grid() const { return grid_; }
  Variant variant() const { return variant_; }
  const MaterialDiagonals<T> &diagonals() const { return diag_; }
  const std::vector<T> &jacobi() const { return jacobi_; }
  std::shared_ptr<const SparseOperator<double>> curl() const { return curl_; }
  std::shared_ptr<const SparseOperator<T>> scaled() const { return scaled_; }
  std::shared_ptr<const CsrMatrix<T>> assembled() const { return assembled_; }

  // Rebuilds the material-dependent parts if they depend on omega.
  void prepare(double omega);
  ShellOperator<T> make_operator(double omega) const;

  bool frequency_dependent() const { return frequency_dependent_; }
  int constructions() const { return constructions_; }
  std::int64_t construction_mults() const { return construction_mults_; }

private:
  void build(double omega);

  const SceneModel &model_;
  Grid grid_;
  Variant variant_;
  bool frequency_dependent_;
  double built_omega_ = -1.0;
  int constructions_ = 0;
  std::int64_t construction_mults_ = 0;
  SparseOperator<double> topology_;  // curl with transpose, kept for rebuilds
  MaterialDiagonals<T> diag_;
  std::shared_ptr<const SparseOperator<double>> curl_;
  std::shared_ptr<const std::vector<T>> inv_sqrt_eps_, inv_mu_;
  std::shared_ptr<const SparseOperator<T>> scaled_;
  std::shared_ptr<const CsrMatrix<T>> assembled_;
  std::vector<T> jacobi_;
};

enum class SweepMode
{
  intra_solve,  // slice-parallel operator and reductions inside each solve
  batch,        // whole (frequency, port) solves distributed over workers
};

struct SweepConfig
{
  double f_min = 1e9, f_max = 1e9;
  int n_f = 1;
  SolveOptions solver;
  Variant variant = Variant::e2tt;
  int workers = 1;
  SweepMode mode = SweepMode::intra_solve;
  bool progress = false;
  // Drive all ports at once (superposed response) instead of one solve per port.
  bool superpose = false;
};

struct SweepRow
{
  double freq_hz = 0.0;
  CMatrix z, s;
  // Probe voltages, one column per excitation.
  std::vector<std::vector<Complex>> probe_voltages;
  std::vector<int> iterations;        // per excitation
  std::vector<double> residuals;      // true relative residual per excitation
  std::vector<std::int64_t> mults;    // operator multiplications per excitation
  std::vector<std::int64_t> applies;  // operator applications per excitation
  bool converged = true;
  double wall_s = 0.0;
  std::string error;

  int total_iterations() const;
  double max_residual() const;
};

struct SweepResult
{
  std::vector<std::string> port_names;
  std::vector<SweepRow> rows;
  int constructions = 0;
  std::int64_t total_mults = 0;
  bool real_arithmetic = true;
  bool superposed = false;  // rows carry probe voltages only
  bool all_converged() const;
};

// Equidistant samples f_min + i (f_max - f_min) / (n_f - 1).
std::vector<double> sweep_frequencies(const SweepConfig &config);

SweepResult run_sweep(const SceneModel &model, const SweepConfig &config);

struct Peak
{
  double freq = 0.0;
  double value = 0.0;
  int index = 0;
};

// Strict interior local maxima, refined by the vertex of the parabola through the
// neighbouring samples.
std::vector<Peak> find_peaks(std::span<const double> freqs, std::span<const double> values);

}  // namespace fitmf

#endif  // FITMF_SWEEP_HPP
