// SPDX-License-Identifier: Apache-2.0

#include "fitmf/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>

namespace fitmf
{

SlicePlan plan_slices(const Grid &grid, int n_workers)
{
  if (n_workers < 1)
  {
    throw std::invalid_argument("plan_slices: need at least one worker");
  }
  SlicePlan plan;
  plan.n_workers = n_workers;
  plan.layer_ranges = balanced_split(grid.nz(), n_workers);
  plan.node_layers = plan.layer_ranges;
  // The top node layer goes to the worker holding the last cell layer.
  for (int w = n_workers - 1; w >= 0; w--)
  {
    if (plan.node_layers[w].size() > 0)
    {
      plan.node_layers[w].end = grid.nz() + 1;
      break;
    }
  }
  for (int w = 0; w < n_workers; w++)
  {
    if (plan.node_layers[w].size() == 0)
    {
      plan.node_layers[w] = {grid.nz() + 1, grid.nz() + 1};
    }
  }
  const std::int64_t ls = grid.layer_size();
  for (const auto &r : plan.node_layers)
  {
    plan.unknown_ranges.push_back({r.begin * ls, r.end * ls});
  }
  return plan;
}

Exec make_exec(const Grid &grid, const SlicePlan &plan, WorkerPool *pool)
{
  const int layers = grid.nz() + 1;
  std::vector<std::int64_t> offsets(layers + 1);
  for (int k = 0; k <= layers; k++)
  {
    offsets[k] = k * grid.layer_size();
  }
  std::vector<int> first;
  if (pool)
  {
    if (pool->size() != plan.n_workers)
    {
      throw std::invalid_argument("make_exec: pool size does not match the slice plan");
    }
    for (const auto &r : plan.node_layers)
    {
      first.push_back(static_cast<int>(r.begin));
    }
    first.push_back(layers);
    // Idle workers sit at the end; keep the sequence non-decreasing.
    for (std::size_t w = first.size() - 1; w-- > 0;)
    {
      first[w] = std::min(first[w], first[w + 1]);
    }
  }
  else
  {
    first = {0, layers};
  }
  return Exec(std::move(offsets), std::move(first), pool);
}

template <typename T>
FitSystem<T>::FitSystem(const SceneModel &model, Variant variant, double omega)
  : model_(model), grid_(model.grid), variant_(variant),
    frequency_dependent_(model.materials.has_conductivity())
{
  if constexpr (std::is_same_v<T, double>)
  {
    if (!model.materials.lossless())
    {
      throw std::invalid_argument("FitSystem<double> needs a lossless scene");
    }
  }
  topology_ = build_curl(grid_);
  topology_.materialize_transpose();
  build(omega);
}

template <typename T>
void FitSystem<T>::build(double omega)
{
  diag_ = build_diagonals<T>(grid_, model_.materials, model_.walls, omega);
  if (variant_ == Variant::e2t && !curl_)
  {
    curl_ = std::make_shared<const SparseOperator<double>>(topology_);
  }
  // Without frequency dependence the curl is scaled in place and not kept.
  SparseOperator<double> c;
  if (frequency_dependent_)
  {
    c = topology_;
  }
  else
  {
    c = std::move(topology_);
  }
  auto scaled = std::make_shared<SparseOperator<T>>(
    scale_curl(std::move(c), diag_, &construction_mults_));
  jacobi_ = jacobi_diagonal(*scaled);
  scaled_.reset();
  assembled_.reset();
  switch (variant_)
  {
    case Variant::e2t:
    {
      inv_sqrt_eps_ = std::make_shared<const std::vector<T>>(diag_.inv_sqrt_eps);
      auto inv_mu = std::make_shared<std::vector<T>>(diag_.inv_sqrt_mu.size());
      for (std::size_t e = 0; e < inv_mu->size(); e++)
      {
        (*inv_mu)[e] = diag_.inv_sqrt_mu[e] * diag_.inv_sqrt_mu[e];
      }
      inv_mu_ = std::move(inv_mu);
      break;
    }
    case Variant::e2tt:
      scaled_ = std::move(scaled);
      break;
    case Variant::e2s:
      assembled_ = std::make_shared<const CsrMatrix<T>>(assemble_sparse_A(*scaled));
      break;
  }
  // M_mu^-1/2 is no longer needed once the scaled curl exists.
  if (variant_ != Variant::e2t)
  {
    diag_.inv_sqrt_mu.clear();
    diag_.inv_sqrt_mu.shrink_to_fit();
  }
  built_omega_ = omega;
  constructions_++;
}

template <typename T>
void FitSystem<T>::prepare(double omega)
{
  if (frequency_dependent_ && omega != built_omega_)
  {
    build(omega);
  }
}

template <typename T>
ShellOperator<T> FitSystem<T>::make_operator(double omega) const
{
  switch (variant_)
  {
    case Variant::e2t:
      return ShellOperator<T>::e2t(curl_, inv_sqrt_eps_, inv_mu_, omega);
    case Variant::e2tt:
      return ShellOperator<T>::e2tt(scaled_, omega);
    case Variant::e2s:
      return ShellOperator<T>::e2s(assembled_, omega);
  }
  throw std::logic_error("unknown variant");
}

int SweepRow::total_iterations() const
{
  int total = 0;
  for (int it : iterations)
  {
    total += it;
  }
  return total;
}

double SweepRow::max_residual() const
{
  double r = 0.0;
  for (double v : residuals)
  {
    r = std::max(r, v);
  }
  return r;
}

bool SweepResult::all_converged() const
{
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow &r) { return r.converged; });
}

std::vector<double> sweep_frequencies(const SweepConfig &config)
{
  if (config.n_f < 1)
  {
    throw std::invalid_argument("sweep: n_f must be >= 1");
  }
  if (!(config.f_min > 0.0) || config.f_max < config.f_min)
  {
    throw std::invalid_argument("sweep: need 0 < f_min <= f_max");
  }
  std::vector<double> f(config.n_f);
  for (int i = 0; i < config.n_f; i++)
  {
    f[i] = config.n_f == 1 ? config.f_min
                           : config.f_min + (config.f_max - config.f_min) * i / (config.n_f - 1);
  }
  return f;
}

namespace
{

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Outcome of one excitation solve.
template <typename T>
struct Excitation
{
  std::vector<Complex> port_probe;   // raw probe sums over the port paths
  std::vector<Complex> extra_probe;  // raw probe sums over the extra probes
  int iterations = 0;
  double residual = 0.0;
  std::int64_t mults = 0;
  std::int64_t applies = 0;
  bool converged = false;
  double wall_s = 0.0;
  std::string error;
};

template <typename T>
Excitation<T> solve_excitation(const SceneModel &model, const FitSystem<T> &sys,
                               ShellOperator<T> &op, const Preconditioner<T> &pc,
                               const Exec &exec, const SolveOptions &opts,
                               const std::vector<T> &rhs)
{
  Excitation<T> out;
  const auto t0 = std::chrono::steady_clock::now();
  try
  {
    const auto report = solve(opts, op, pc, std::span<const T>(rhs), exec);
    out.iterations = report.iterations;
    out.residual = report.true_residual;
    out.mults = report.mults_consumed;
    out.applies = report.applies;
    out.converged = report.converged;
    if (!report.converged)
    {
      out.error = report.message;
    }
    const auto &se = sys.diagonals().inv_sqrt_eps;
    for (const auto &port : model.ports)
    {
      out.port_probe.push_back(probe_voltage<T>(report.x, se, port.segments));
    }
    for (const auto &probe : model.probes)
    {
      out.extra_probe.push_back(probe_voltage<T>(report.x, se, probe.segments));
    }
  }
  catch (const std::exception &e)
  {
    out.error = e.what();
    out.converged = false;
  }
  out.wall_s = seconds_since(t0);
  return out;
}

template <typename T>
std::vector<std::vector<T>> excitation_patterns(const SceneModel &model, const FitSystem<T> &sys,
                                                bool superpose)
{
  const auto &se = sys.diagonals().inv_sqrt_eps;
  std::vector<std::vector<T>> out;
  for (const auto &port : model.ports)
  {
    out.push_back(excitation_pattern<T>(port.segments, se));
  }
  if (superpose)
  {
    // All ports at their declared currents in one right-hand side. Only possible in
    // complex arithmetic when some current is complex; real currents are required here.
    std::vector<T> sum(se.size(), T(0));
    for (std::size_t p = 0; p < out.size(); p++)
    {
      const Complex i = model.ports[p].current;
      if constexpr (std::is_same_v<T, double>)
      {
        if (i.imag() != 0.0)
        {
          throw std::invalid_argument("superposed excitation with complex currents needs a "
                                      "lossy (complex) scene");
        }
        for (std::size_t e = 0; e < sum.size(); e++)
        {
          sum[e] += i.real() * out[p][e];
        }
      }
      else
      {
        for (std::size_t e = 0; e < sum.size(); e++)
        {
          sum[e] += i * out[p][e];
        }
      }
    }
    return {std::move(sum)};
  }
  return out;
}

template <typename T>
SweepRow assemble_row(const SceneModel &model, double freq, bool superpose,
                      const std::vector<Excitation<T>> &ex)
{
  SweepRow row;
  row.freq_hz = freq;
  const double omega = 2.0 * std::numbers::pi * freq;
  const int np = static_cast<int>(model.ports.size());
  // Path voltage for excitation n: (-j omega i_n) * raw probe sum (raw solve used unit
  // current scaled by M_eps^-1/2).
  CMatrix volts(superpose ? 0 : np);
  std::vector<Complex> currents;
  for (std::size_t n = 0; n < ex.size(); n++)
  {
    const Complex drive = superpose ? Complex(0.0, -omega) : Complex(0.0, -omega) * model.ports[n].current;
    row.iterations.push_back(ex[n].iterations);
    row.residuals.push_back(ex[n].residual);
    row.mults.push_back(ex[n].mults);
    row.applies.push_back(ex[n].applies);
    row.wall_s += ex[n].wall_s;
    row.converged = row.converged && ex[n].converged;
    if (!ex[n].error.empty() && row.error.empty())
    {
      row.error = ex[n].error;
    }
    std::vector<Complex> v;
    for (const auto &p : ex[n].port_probe)
    {
      v.push_back(drive * p);
    }
    for (const auto &p : ex[n].extra_probe)
    {
      v.push_back(drive * p);
    }
    if (!superpose && ex[n].port_probe.size() == std::size_t(np))
    {
      for (int m = 0; m < np; m++)
      {
        volts(m, static_cast<int>(n)) = v[m];
      }
      currents.push_back(model.ports[n].current);
    }
    row.probe_voltages.push_back(std::move(v));
  }
  if (!superpose && row.error.empty() && currents.size() == std::size_t(np))
  {
    try
    {
      row.z = z_parameters(volts, currents);
      row.s = s_from_z(row.z, model.z0);
    }
    catch (const std::exception &e)
    {
      row.error = e.what();
    }
  }
  return row;
}

template <typename T>
SweepResult run_sweep_impl(const SceneModel &model, const SweepConfig &cfg)
{
  const auto freqs = sweep_frequencies(cfg);
  if (model.ports.empty())
  {
    throw std::invalid_argument("sweep: scene declares no ports");
  }
  const int workers = std::max(1, cfg.workers);
  std::unique_ptr<WorkerPool> pool;
  if (workers > 1)
  {
    pool = std::make_unique<WorkerPool>(workers);
  }
  const Grid &grid = model.grid;
  const Exec par_exec = make_exec(grid, plan_slices(grid, workers), pool.get());
  const Exec serial_exec = make_exec(grid, plan_slices(grid, 1), nullptr);

  FitSystem<T> sys(model, cfg.variant, 2.0 * std::numbers::pi * freqs.front());
  SweepResult result;
  result.real_arithmetic = std::is_same_v<T, double>;
  result.superposed = cfg.superpose;
  for (const auto &p : model.ports)
  {
    result.port_names.push_back(p.name);
  }
  auto patterns = excitation_patterns(model, sys, cfg.superpose);
  const std::size_t n_exc = patterns.size();

  auto progress = [&](const SweepRow &row, std::size_t i)
  {
    if (cfg.progress)
    {
      std::cerr << "[sweep] " << i + 1 << "/" << freqs.size() << " f=" << row.freq_hz
                << " Hz iters=" << row.total_iterations() << " resid=" << row.max_residual()
                << (row.converged ? "" : " NOT CONVERGED") << '\n';
    }
  };

  const bool batch = cfg.mode == SweepMode::batch && pool;
  if (batch && !sys.frequency_dependent())
  {
    // Every (frequency, excitation) pair is an independent task on a serial executor.
    const std::size_t n_tasks = freqs.size() * n_exc;
    std::vector<Excitation<T>> done(n_tasks);
    pool->run(
      [&](int w)
      {
        auto op = sys.make_operator(0.0);
        op.set_exec(&serial_exec);
        for (std::size_t t = w; t < n_tasks; t += workers)
        {
          const double omega = 2.0 * std::numbers::pi * freqs[t / n_exc];
          op.set_omega(omega);
          JacobiPreconditioner<T> pc(sys.jacobi(), sys.diagonals().edge_mask, omega,
                                     &serial_exec);
          done[t] = solve_excitation(model, sys, op, pc, serial_exec, cfg.solver,
                                     patterns[t % n_exc]);
        }
      });
    for (std::size_t f = 0; f < freqs.size(); f++)
    {
      std::vector<Excitation<T>> ex(done.begin() + f * n_exc, done.begin() + (f + 1) * n_exc);
      result.rows.push_back(assemble_row(model, freqs[f], cfg.superpose, ex));
      progress(result.rows.back(), f);
    }
  }
  else
  {
    for (std::size_t f = 0; f < freqs.size(); f++)
    {
      const double omega = 2.0 * std::numbers::pi * freqs[f];
      const int before = sys.constructions();
      sys.prepare(omega);
      if (sys.constructions() != before)
      {
        patterns = excitation_patterns(model, sys, cfg.superpose);
      }
      std::vector<Excitation<T>> ex(n_exc);
      if (batch)
      {
        pool->run(
          [&](int w)
          {
            auto op = sys.make_operator(omega);
            op.set_exec(&serial_exec);
            JacobiPreconditioner<T> pc(sys.jacobi(), sys.diagonals().edge_mask, omega,
                                       &serial_exec);
            for (std::size_t n = w; n < n_exc; n += workers)
            {
              ex[n] = solve_excitation(model, sys, op, pc, serial_exec, cfg.solver, patterns[n]);
            }
          });
      }
      else
      {
        auto op = sys.make_operator(omega);
        op.set_exec(&par_exec);
        JacobiPreconditioner<T> pc(sys.jacobi(), sys.diagonals().edge_mask, omega, &par_exec);
        for (std::size_t n = 0; n < n_exc; n++)
        {
          ex[n] = solve_excitation(model, sys, op, pc, par_exec, cfg.solver, patterns[n]);
        }
      }
      result.rows.push_back(assemble_row(model, freqs[f], cfg.superpose, ex));
      progress(result.rows.back(), f);
    }
  }
  for (const auto &row : result.rows)
  {
    for (auto m : row.mults)
    {
      result.total_mults += m;
    }
  }
  result.constructions = sys.constructions();
  return result;
}

}  // namespace

SweepResult run_sweep(const SceneModel &model, const SweepConfig &config)
{
  if (model.materials.lossless())
  {
    return run_sweep_impl<double>(model, config);
  }
  return run_sweep_impl<Complex>(model, config);
}

std::vector<Peak> find_peaks(std::span<const double> freqs, std::span<const double> values)
{
  if (freqs.size() != values.size())
  {
    throw std::invalid_argument("find_peaks: frequency and value columns differ in length");
  }
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < values.size(); i++)
  {
    if (!(values[i] > values[i - 1] && values[i] > values[i + 1]))
    {
      continue;
    }
    const double x0 = freqs[i - 1], x1 = freqs[i], x2 = freqs[i + 1];
    const double y0 = values[i - 1], y1 = values[i], y2 = values[i + 1];
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    const double c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 +
                      x0 * x1 * (x0 - x1) * y2) / denom;
    Peak p{x1, y1, static_cast<int>(i)};
    if (a < 0.0)
    {
      const double xv = std::clamp(-b / (2.0 * a), x0, x2);
      p.freq = xv;
      p.value = (a * xv + b) * xv + c;
    }
    peaks.push_back(p);
  }
  return peaks;
}

template class FitSystem<double>;
template class FitSystem<Complex>;

}  // namespace fitmf
