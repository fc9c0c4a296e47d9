// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: fitmf {solve|sweep|eig|stats} SCENE [options].
// Exit status is 0 only when every requested solve converged, 1 when some solve did not,
// and 2 on input or runtime errors.
//

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "json.hpp"

#include "fitmf/oracle.hpp"
#include "fitmf/results.hpp"
#include "fitmf/scene.hpp"
#include "fitmf/sweep.hpp"

using namespace fitmf;

namespace
{

struct Common
{
  std::string scene;
  std::string solver = "cg";
  std::string variant = "e2tt";
  double tol = 1e-12;
  int max_iter = 10000;
  int restart = 30;
  int workers = 0;
  bool allow_cgs = false;
  std::string export_matrix;
  std::string out;
  bool json = false;
  bool quiet = false;
};

void add_common(CLI::App *cmd, Common &c)
{
  cmd->add_option("scene", c.scene, "Scene file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--solver", c.solver, "cg | bcgs | cr | gmres | cgs")->capture_default_str();
  cmd->add_option("--variant", c.variant, "e2s | e2t | e2tt")->capture_default_str();
  cmd->add_option("--tol", c.tol, "Relative residual tolerance")->capture_default_str();
  cmd->add_option("--max-iter", c.max_iter, "Iteration limit per solve")->capture_default_str();
  cmd->add_option("--restart", c.restart, "GMRES restart length")->capture_default_str();
  cmd->add_option("--workers", c.workers,
                  "Worker threads (default: FITMF_WORKERS or 1)");
  cmd->add_flag("--allow-cgs", c.allow_cgs, "Permit the CGS solver");
  cmd->add_option("--export-matrix", c.export_matrix,
                  "Write the assembled A at the first frequency as Matrix Market");
  cmd->add_option("--out,-o", c.out, "CSV result file");
  cmd->add_flag("--json", c.json, "Print a JSON summary on stdout");
  cmd->add_flag("--quiet,-q", c.quiet, "No progress lines on stderr");
}

int resolve_workers(int flag)
{
  if (flag > 0)
  {
    return flag;
  }
  if (const char *env = std::getenv("FITMF_WORKERS"))
  {
    const int w = std::atoi(env);
    if (w > 0)
    {
      return w;
    }
    throw std::invalid_argument(std::string("FITMF_WORKERS='") + env + "' is not a positive integer");
  }
  return 1;
}

SweepConfig make_config(const Common &c)
{
  SweepConfig cfg;
  cfg.solver.method = parse_method(c.solver);
  cfg.solver.tol = c.tol;
  cfg.solver.max_iter = c.max_iter;
  cfg.solver.restart = c.restart;
  cfg.solver.allow_cgs = c.allow_cgs;
  cfg.variant = parse_variant(c.variant);
  cfg.workers = resolve_workers(c.workers);
  cfg.progress = !c.quiet;
  return cfg;
}

template <typename T>
void export_assembled(const SceneModel &model, double omega, const std::string &path)
{
  FitSystem<T> sys(model, Variant::e2s, omega);
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  write_matrix_market(*sys.assembled(), out);
}

void maybe_export(const Common &c, const SceneModel &model, double freq)
{
  if (c.export_matrix.empty())
  {
    return;
  }
  const double omega = 2.0 * std::numbers::pi * freq;
  if (model.materials.lossless())
  {
    export_assembled<double>(model, omega, c.export_matrix);
  }
  else
  {
    export_assembled<Complex>(model, omega, c.export_matrix);
  }
}

nlohmann::json complex_json(Complex v)
{
  return nlohmann::json::array({v.real(), v.imag()});
}

nlohmann::json matrix_json(const CMatrix &m)
{
  auto rows = nlohmann::json::array();
  for (int i = 0; i < m.n; i++)
  {
    auto row = nlohmann::json::array();
    for (int j = 0; j < m.n; j++)
    {
      row.push_back(complex_json(m(i, j)));
    }
    rows.push_back(row);
  }
  return rows;
}

void print_rows(const SweepResult &result)
{
  const auto &names = result.port_names;
  for (const auto &row : result.rows)
  {
    std::printf("f = %.9e Hz  iters = %d  resid = %.3e%s\n", row.freq_hz,
                row.total_iterations(), row.max_residual(),
                row.converged ? "" : "  (not converged)");
    if (!row.error.empty())
    {
      std::printf("  error: %s\n", row.error.c_str());
    }
    for (int m = 0; m < row.z.n; m++)
    {
      for (int n = 0; n < row.z.n; n++)
      {
        const Complex z = row.z(m, n), s = row.s(m, n);
        std::printf("  Z(%s,%s) = %+.9e %+.9ej Ohm   S = %+.6e %+.6ej\n", names[m].c_str(),
                    names[n].c_str(), z.real() + 0.0, z.imag() + 0.0, s.real() + 0.0,
                    s.imag() + 0.0);
      }
    }
    if (row.z.n == 0)
    {
      for (std::size_t p = 0; p < row.probe_voltages.front().size(); p++)
      {
        const Complex v = row.probe_voltages.front()[p];
        std::printf("  V[%zu] = %+.9e %+.9ej V\n", p + 1, v.real() + 0.0, v.imag() + 0.0);
      }
    }
  }
}

nlohmann::json result_json(const SweepResult &result)
{
  nlohmann::json j;
  j["ports"] = result.port_names;
  j["real_arithmetic"] = result.real_arithmetic;
  j["constructions"] = result.constructions;
  j["total_mults"] = result.total_mults;
  j["all_converged"] = result.all_converged();
  auto rows = nlohmann::json::array();
  for (const auto &row : result.rows)
  {
    nlohmann::json r;
    r["freq_hz"] = row.freq_hz;
    r["iterations"] = row.iterations;
    r["residuals"] = row.residuals;
    r["converged"] = row.converged;
    r["wall_s"] = row.wall_s;
    if (row.z.n > 0)
    {
      r["z"] = matrix_json(row.z);
      r["s"] = matrix_json(row.s);
    }
    if (!row.error.empty())
    {
      r["error"] = row.error;
    }
    rows.push_back(r);
  }
  j["rows"] = rows;
  return j;
}

int finish(const Common &c, const SweepResult &result)
{
  if (!c.out.empty())
  {
    write_results(result, c.out);
  }
  if (c.json)
  {
    std::cout << result_json(result).dump(2) << '\n';
  }
  else
  {
    print_rows(result);
  }
  return result.all_converged() ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Matrix-free frequency-domain FIT solver"};
  app.require_subcommand(1);

  Common solve_opts, sweep_opts, eig_opts, stats_opts;

  auto *solve_cmd = app.add_subcommand("solve", "Single-frequency port solve");
  add_common(solve_cmd, solve_opts);
  double freq = 0.0;
  solve_cmd->add_option("--freq", freq, "Frequency in Hz")->required();

  auto *sweep_cmd = app.add_subcommand("sweep", "Equidistant frequency sweep");
  add_common(sweep_cmd, sweep_opts);
  double fmin = 0.0, fmax = 0.0;
  int nf = 0;
  bool batch = false, superpose = false, peaks = false;
  sweep_cmd->add_option("--fmin", fmin, "Start frequency in Hz (default: scene sweep)");
  sweep_cmd->add_option("--fmax", fmax, "Stop frequency in Hz (default: scene sweep)");
  sweep_cmd->add_option("--nf", nf, "Number of samples (default: scene sweep)");
  sweep_cmd->add_flag("--batch", batch, "Distribute whole solves over the workers");
  sweep_cmd->add_flag("--superpose", superpose, "Drive all ports in one solve");
  sweep_cmd->add_flag("--peaks", peaks, "Report |Z11| maxima after the sweep");

  auto *eig_cmd = app.add_subcommand("eig", "Dense eigenfrequencies (small grids)");
  eig_cmd->add_option("scene", eig_opts.scene, "Scene file (JSON)")
    ->required()
    ->check(CLI::ExistingFile);
  int count = 10;
  std::size_t limit = kDenseGuard;
  eig_cmd->add_option("--count", count, "Number of non-zero modes to print")->capture_default_str();
  eig_cmd->add_option("--max-unknowns", limit, "Dense size guard")->capture_default_str();
  eig_cmd->add_flag("--json", eig_opts.json, "JSON output");

  auto *stats_cmd = app.add_subcommand("stats", "Operator cost model and actual footprint");
  stats_cmd->add_option("scene", stats_opts.scene, "Scene file (JSON)")
    ->required()
    ->check(CLI::ExistingFile);
  stats_cmd->add_option("--variant", stats_opts.variant, "e2s | e2t | e2tt")->capture_default_str();
  stats_cmd->add_flag("--json", stats_opts.json, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*solve_cmd)
    {
      const auto model = realize(parse_scene(solve_opts.scene));
      auto cfg = make_config(solve_opts);
      cfg.f_min = cfg.f_max = freq;
      cfg.n_f = 1;
      maybe_export(solve_opts, model, freq);
      return finish(solve_opts, run_sweep(model, cfg));
    }
    if (*sweep_cmd)
    {
      const auto scene = parse_scene(sweep_opts.scene);
      const auto model = realize(scene);
      auto cfg = make_config(sweep_opts);
      const SweepDefaults defaults = scene.sweep.value_or(SweepDefaults{});
      cfg.f_min = fmin > 0 ? fmin : defaults.fmin;
      cfg.f_max = fmax > 0 ? fmax : defaults.fmax;
      cfg.n_f = nf > 0 ? nf : defaults.nf;
      if (!(cfg.f_min > 0.0))
      {
        throw std::invalid_argument("sweep: no --fmin given and the scene has no sweep block");
      }
      if (cfg.f_max < cfg.f_min)
      {
        cfg.f_max = cfg.f_min;
      }
      cfg.mode = batch ? SweepMode::batch : SweepMode::intra_solve;
      cfg.superpose = superpose;
      maybe_export(sweep_opts, model, cfg.f_min);
      const auto result = run_sweep(model, cfg);
      const int code = finish(sweep_opts, result);
      if (peaks && !superpose)
      {
        std::vector<double> f, mag;
        for (const auto &row : result.rows)
        {
          f.push_back(row.freq_hz);
          mag.push_back(row.z.n > 0 ? std::abs(row.z(0, 0)) : std::nan(""));
        }
        for (const auto &p : find_peaks(f, mag))
        {
          std::printf("peak |Z11| = %.6e Ohm at %.9e Hz\n", p.value, p.freq);
        }
      }
      return code;
    }
    if (*eig_cmd)
    {
      const auto model = realize(parse_scene(eig_opts.scene));
      const auto sys = dense_assemble(model, 0.0, limit);
      const auto ev = dense_eigenvalues(sys);
      const double top = ev.empty() ? 0.0 : std::abs(ev.back());
      std::vector<double> freqs;
      std::size_t zeros = 0;
      for (double l : ev)
      {
        if (l <= 1e-9 * top)
        {
          zeros++;
        }
        else if (static_cast<int>(freqs.size()) < count)
        {
          freqs.push_back(std::sqrt(l) / (2.0 * std::numbers::pi));
        }
      }
      if (eig_opts.json)
      {
        nlohmann::json j;
        j["unknowns"] = sys.size();
        j["null_space"] = zeros;
        j["freq_hz"] = freqs;
        std::cout << j.dump(2) << '\n';
      }
      else
      {
        std::printf("unknowns = %zu  null space = %zu\n", sys.size(), zeros);
        for (std::size_t i = 0; i < freqs.size(); i++)
        {
          std::printf("mode %zu: %.9e Hz\n", i + 1, freqs[i]);
        }
      }
      return 0;
    }
    if (*stats_cmd)
    {
      const auto model = realize(parse_scene(stats_opts.scene));
      const auto variant = parse_variant(stats_opts.variant);
      OperatorStats s;
      if (model.materials.lossless())
      {
        s = FitSystem<double>(model, variant, 0.0).make_operator(0.0).stats();
      }
      else
      {
        s = FitSystem<Complex>(model, variant, 2.0 * std::numbers::pi).make_operator(0.0).stats();
      }
      std::cout << (stats_opts.json ? stats_json(s) : stats_text(s)) << '\n';
      return 0;
    }
  }
  catch (const std::exception &e)
  {
    std::cerr << "fitmf: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
