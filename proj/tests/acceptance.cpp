// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Without arguments every criterion runs; `acceptance N` runs one.
// Each prints a single "criterion N: PASS|FAIL ..." line, and the exit status is non-zero
// if any selected criterion failed.
//

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "fitmf/operator.hpp"
#include "fitmf/oracle.hpp"
#include "fitmf/scene.hpp"
#include "fitmf/sweep.hpp"
#include "fitmf/topology.hpp"

using namespace fitmf;

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string scene_path(const char *name)
{
  return std::string(FITMF_SCENE_DIR) + "/" + name;
}

std::vector<double> random_planes(std::mt19937_64 &rng, int cells, double step)
{
  std::uniform_real_distribution<double> d(0.5 * step, 2.0 * step);
  std::vector<double> p{0.0};
  for (int c = 0; c < cells; c++)
  {
    p.push_back(p.back() + d(rng));
  }
  return p;
}

SceneModel random_model(std::mt19937_64 &rng, int nx, int ny, int nz, double pec_fraction)
{
  Grid g(random_planes(rng, nx, 1e-3), random_planes(rng, ny, 1e-3), random_planes(rng, nz, 1e-3));
  MaterialMap m = MaterialMap::vacuum(g);
  const double eps[] = {1.0, 2.7, 12.3};
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_real_distribution<double> mu(1.0, 3.0), u(0.0, 1.0);
  for (std::size_t c = 0; c < m.num_cells(); c++)
  {
    m.eps_r[c] = eps[pick(rng)];
    m.mu_r[c] = mu(rng);
    m.pec[c] = u(rng) < pec_fraction;
  }
  return SceneModel{std::move(g), std::move(m), Walls{}, {}, {}, 50.0, {}};
}

std::vector<double> random_vector(std::mt19937_64 &rng, const std::vector<std::uint8_t> &mask)
{
  std::normal_distribution<double> d;
  std::vector<double> v(mask.size());
  for (std::size_t i = 0; i < v.size(); i++)
  {
    v[i] = mask[i] ? 0.0 : d(rng);
  }
  return v;
}

template <typename A, typename B>
double rel_inf(const std::vector<A> &a, const std::vector<B> &b)
{
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    num = std::max(num, std::abs(Complex(a[i]) - Complex(b[i])));
    den = std::max(den, std::abs(Complex(b[i])));
  }
  return den > 0.0 ? num / den : num;
}

double dot(const std::vector<double> &a, const std::vector<double> &b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    s += a[i] * b[i];
  }
  return s;
}

std::vector<double> apply(ShellOperator<double> &op, const std::vector<double> &x)
{
  std::vector<double> y(x.size());
  op.apply(x, y);
  return y;
}

// Operator-variant equivalence on a 3x4x5 nonuniform grid.
Outcome criterion_1()
{
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  const auto model = random_model(rng, 3, 4, 5, 0.0);
  const double omega = kTwoPi * 5e9;
  FitSystem<double> s(model, Variant::e2s, omega), t(model, Variant::e2t, omega),
    tt(model, Variant::e2tt, omega);
  auto op_s = s.make_operator(omega), op_t = t.make_operator(omega), op_tt = tt.make_operator(omega);
  const auto dense = dense_assemble(model);
  const auto &mask = s.diagonals().edge_mask;
  double variants = 0.0, oracle = 0.0;
  for (int trial = 0; trial < 50; trial++)
  {
    const auto x = random_vector(rng, mask);
    const auto ys = apply(op_s, x), yt = apply(op_t, x), ytt = apply(op_tt, x);
    variants = std::max({variants, rel_inf(ys, ytt), rel_inf(yt, ytt)});
    const std::vector<Complex> xc(x.begin(), x.end());
    const auto yd = dense_apply(dense, omega, xc);
    oracle = std::max({oracle, rel_inf(ys, yd), rel_inf(yt, yd), rel_inf(ytt, yd)});
  }
  const double wall = seconds(t0);
  return {variants <= 1e-12 && oracle <= 1e-12 && wall < 1.0,
          fmt("variants max rel diff %.2e, vs dense %.2e (limit 1e-12), %.3f s (limit 1 s)",
              variants, oracle, wall)};
}

// Multiplication and memory constants.
Outcome criterion_2()
{
  const auto model = realize(parse_scene(scene_path("microstrip.json")));
  const auto ne = model.grid.num_edges();
  const int mults[] = {13, 12, 9}, memory[] = {164, 80, 72};
  const Variant variants[] = {Variant::e2s, Variant::e2t, Variant::e2tt};
  bool ok = true;
  std::ostringstream os;
  os << "n_e=" << ne;
  std::mt19937_64 rng(1002);
  for (int v = 0; v < 3; v++)
  {
    const auto st = op_stats(variants[v], ne);
    FitSystem<double> sys(model, variants[v], 1.0);
    auto op = sys.make_operator(kTwoPi * 1e9);
    const auto x = random_vector(rng, sys.diagonals().edge_mask);
    for (int k = 0; k < 3; k++)
    {
      apply(op, x);
    }
    const bool row = st.mults_per_apply == mults[v] * ne &&
                     st.model_memory_bytes == memory[v] * ne && op.applies() == 3 &&
                     op.mults() == 3 * mults[v] * ne;
    ok &= row;
    os << "; " << to_string(variants[v]) << " mults/apply=" << st.mults_per_apply / ne
       << "*n_e (" << st.matrix_mults_per_apply / ne << "+" << st.shift_mults_per_apply / ne
       << ") memory=" << st.model_memory_bytes / ne << "*n_e counted/apply=" << op.mults() / (3 * ne)
       << "*n_e";
  }
  return {ok, os.str()};
}

// Cavity eigenmodes of the 1 m vacuum cube.
Outcome criterion_3()
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = realize(parse_scene(scene_path("cavity.json")));
  const Grid &g = model.grid;
  const int n = g.nx();
  const double a = g.planes(Axis::x).back();
  const auto sys = dense_assemble(model);
  const auto lambda = dense_eigenvalues(sys);
  const auto expected = discrete_cavity_spectrum(a, a, a, n, n, n);
  std::vector<double> nonzero;
  for (double l : lambda)
  {
    if (std::abs(l) > 1e-9 * lambda.back())
    {
      nonzero.push_back(l);
    }
  }
  double worst = nonzero.size() == expected.size() ? 0.0 : 1.0;
  for (std::size_t i = 0; i < std::min(nonzero.size(), expected.size()); i++)
  {
    worst = std::max(worst, std::abs(nonzero[i] - expected[i]) / expected[i]);
  }
  const double d = a / n;
  const auto te = analytic_cavity_eigenvalues(a, a, a, d, d, d, {{1, 0, 1}})[0];
  const double f_cont = std::sqrt(te.continuous) / kTwoPi;
  // The lowest dense eigenvalue is the (degenerate) TE101 triple.
  const double f_dense = std::sqrt(nonzero.front()) / kTwoPi;
  const double offset = std::abs(f_dense - f_cont) / f_cont;
  const double wall = seconds(t0);
  return {worst <= 1e-10 && offset <= 0.01 && wall < 60.0,
          fmt("%zu unknowns, %zu non-zero eigenvalues (%zu expected), max rel mismatch %.2e "
              "(limit 1e-10); TE101 continuous %.4f MHz, dense %.4f MHz, offset %.3f%% "
              "(limit 1%%); %.1f s (limit 60 s)",
              sys.size(), nonzero.size(), expected.size(), worst, f_cont / 1e6, f_dense / 1e6,
              100.0 * offset, wall)};
}

// Jacobi diagonal against the dense diagonal.
Outcome criterion_4()
{
  std::mt19937_64 rng(1004);
  double worst = 0.0;
  for (int trial = 0; trial < 3; trial++)
  {
    const auto model = random_model(rng, 3 + trial, 3, 4 - trial, 0.1 * trial);
    const FitSystem<double> sys(model, Variant::e2tt);
    const auto d = dense_diagonal(dense_assemble(model));
    const auto &jac = sys.jacobi();
    for (std::size_t i = 0; i < d.size(); i++)
    {
      const double scale = std::abs(d[i]);
      worst = std::max(worst, scale > 0 ? std::abs(d[i] - jac[i]) / scale : std::abs(jac[i]));
    }
  }
  return {worst <= 1e-14, fmt("max rel diff over 3 scenes %.2e (limit 1e-14)", worst)};
}

// C G = 0 in integer arithmetic on every grid up to 5x5x5 cells.
Outcome criterion_5()
{
  std::mt19937_64 rng(1005);
  int grids = 0;
  long long nonzero = 0;
  for (int nx = 1; nx <= 5; nx++)
  {
    for (int ny = 1; ny <= 5; ny++)
    {
      for (int nz = 1; nz <= 5; nz++)
      {
        Grid g(random_planes(rng, nx, 1.0), random_planes(rng, ny, 1.0),
               random_planes(rng, nz, 1.0));
        const auto c = build_curl(g).matrix, gr = build_gradient(g).matrix;
        // Integer copy of G by rows, then every entry of C G.
        std::vector<std::map<int, long long>> grow(gr.n_rows);
        for (int r = 0; r < gr.n_rows; r++)
        {
          for (auto k = gr.row_ptr[r]; k < gr.row_ptr[r + 1]; k++)
          {
            grow[r][gr.col_idx[k]] = std::llround(gr.values[k]);
          }
        }
        for (int r = 0; r < c.n_rows; r++)
        {
          std::map<int, long long> acc;
          for (auto k = c.row_ptr[r]; k < c.row_ptr[r + 1]; k++)
          {
            const long long cv = std::llround(c.values[k]);
            for (const auto &[col, gv] : grow[c.col_idx[k]])
            {
              acc[col] += cv * gv;
            }
          }
          for (const auto &[col, v] : acc)
          {
            nonzero += v != 0;
          }
        }
        grids++;
      }
    }
  }
  return {nonzero == 0, fmt("%d grids, %lld non-zero entries in C*G", grids, nonzero)};
}

// Solver suite on the two-port microstrip at 2 GHz.
Outcome criterion_6()
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = realize(parse_scene(scene_path("microstrip.json")));
  bool ok = true;
  std::ostringstream os;
  os << "n_e=" << model.grid.num_edges() << " f=2 GHz";
  std::vector<Complex> z11;
  for (auto m : {Method::cg, Method::bcgs, Method::cr, Method::gmres})
  {
    SweepConfig cfg;
    cfg.f_min = cfg.f_max = 2e9;
    cfg.solver.method = m;
    const auto r = run_sweep(model, cfg);
    const auto &row = r.rows[0];
    ok &= row.converged && row.max_residual() < 1e-12;
    z11.push_back(row.z.n == 2 ? row.z(0, 0) : Complex(NAN));
    os << "; " << to_string(m) << ": iters=" << row.total_iterations()
       << fmt(" resid=%.2e Z11=%+.9ej", row.max_residual(), z11.back().imag());
  }
  double spread = 0.0;
  for (const auto &z : z11)
  {
    spread = std::max(spread, std::abs(z - z11[0]) / std::abs(z11[0]));
  }
  ok &= spread <= 1e-6;
  const double wall = seconds(t0);
  ok &= wall < 300.0;
  os << fmt("; Z11 spread %.2e (limit 1e-6); %.1f s (limit 300 s)", spread, wall);
  return {ok, os.str()};
}

SweepConfig microstrip_sweep(const Scene &scene)
{
  SweepConfig cfg;
  cfg.f_min = scene.sweep->fmin;
  cfg.f_max = scene.sweep->fmax;
  cfg.n_f = scene.sweep->nf;
  return cfg;
}

// Reciprocity over the 10-point sweep.
Outcome criterion_7()
{
  const auto scene = parse_scene(scene_path("microstrip.json"));
  const auto r = run_sweep(realize(scene), microstrip_sweep(scene));
  double worst = 0.0;
  for (const auto &row : r.rows)
  {
    double top = 0.0;
    for (const auto &v : row.z.a)
    {
      top = std::max(top, std::abs(v));
    }
    worst = std::max(worst, std::abs(row.z(1, 0) - row.z(0, 1)) / top);
  }
  return {r.all_converged() && r.rows.size() == 10 && worst <= 1e-6,
          fmt("%zu frequencies %.2f-%.2f GHz, all converged: %s, max |Z21-Z12|/max|Z| = %.2e "
              "(limit 1e-6)",
              r.rows.size(), r.rows.front().freq_hz / 1e9, r.rows.back().freq_hz / 1e9,
              r.all_converged() ? "yes" : "no", worst)};
}

bool same_bits(const SweepResult &a, const SweepResult &b)
{
  if (a.rows.size() != b.rows.size())
  {
    return false;
  }
  for (std::size_t f = 0; f < a.rows.size(); f++)
  {
    const auto &x = a.rows[f], &y = b.rows[f];
    if (x.z.a != y.z.a || x.s.a != y.s.a || x.iterations != y.iterations ||
        x.residuals != y.residuals || x.probe_voltages != y.probe_voltages ||
        x.freq_hz != y.freq_hz)
    {
      return false;
    }
  }
  return true;
}

// Bitwise determinism across worker counts, both parallel modes.
Outcome criterion_8()
{
  const auto scene = parse_scene(scene_path("microstrip.json"));
  const auto model = realize(scene);
  auto cfg = microstrip_sweep(scene);
  const auto ref = run_sweep(model, cfg);
  bool ok = ref.all_converged();
  std::ostringstream os;
  os << ref.rows.size() << " frequencies; workers=1 reference";
  for (auto mode : {SweepMode::intra_solve, SweepMode::batch})
  {
    for (int w : {1, 2, 4})
    {
      if (w == 1 && mode == SweepMode::intra_solve)
      {
        continue;
      }
      cfg.workers = w;
      cfg.mode = mode;
      const bool same = same_bits(ref, run_sweep(model, cfg));
      ok &= same;
      os << "; " << (mode == SweepMode::batch ? "batch" : "intra") << " workers=" << w << ": "
         << (same ? "identical" : "DIFFERENT");
    }
  }
  return {ok, os.str()};
}

// Strong scaling of one fixed-length solve at about 1M unknowns.
Outcome criterion_9()
{
  Scene scene;
  const int cells = 69;
  for (int a = 0; a < 3; a++)
  {
    scene.planes[a] = uniform_planes(0.0, 0.069, cells);
  }
  scene.blocks.push_back({"substrate", {0.0, 0.0, 0.0}, {0.069, 0.069, 0.01}, 4.4, 1.0, 0.0, false});
  scene.ports.push_back({"P1", {{34, 34, 0}, {34, 34, 10}}, 1.0});
  const auto model = realize(scene);
  SweepConfig cfg;
  cfg.f_min = cfg.f_max = 3e9;
  // A fixed iteration count keeps the work identical across worker counts.
  cfg.solver.max_iter = 150;
  cfg.solver.tol = 1e-30;
  std::map<int, double> wall;
  for (int w : {1, 2, 4})
  {
    cfg.workers = w;
    double best = 1e300;
    for (int rep = 0; rep < 2; rep++)
    {
      best = std::min(best, run_sweep(model, cfg).rows[0].wall_s);
    }
    wall[w] = best;
  }
  const double eff4 = wall[1] / (4.0 * wall[4]);
  const bool monotone = wall[2] < wall[1] && wall[4] < wall[2];
  return {monotone && eff4 >= 0.5,
          fmt("n_e=%lld, %d iterations; wall 1/2/4 workers = %.3f/%.3f/%.3f s; efficiency at 4 "
              "= %.0f%% (limit 50%%); monotone: %s; hardware threads: %u",
              static_cast<long long>(model.grid.num_edges()), cfg.solver.max_iter, wall[1],
              wall[2], wall[4], 100.0 * eff4, monotone ? "yes" : "no",
              std::thread::hardware_concurrency())};
}

// Adjoint symmetry and positive semidefiniteness at omega = 0.
Outcome criterion_10()
{
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> size(1, 4);
  double adjoint = 0.0, psd = 0.0, spectrum = 0.0;
  int scenes = 0;
  for (int trial = 0; trial < 100; trial++)
  {
    const auto model = random_model(rng, size(rng), size(rng), size(rng), trial % 4 == 3 ? 0.15 : 0.0);
    for (auto v : {Variant::e2s, Variant::e2t, Variant::e2tt})
    {
      FitSystem<double> sys(model, v);
      auto op = sys.make_operator(0.0);
      const auto &mask = sys.diagonals().edge_mask;
      for (int k = 0; k < 3; k++)
      {
        const auto x = random_vector(rng, mask), y = random_vector(rng, mask);
        const auto ax = apply(op, x), ay = apply(op, y);
        const double nx = std::sqrt(dot(x, x)), ny = std::sqrt(dot(y, y));
        const double na = std::sqrt(std::max(dot(ax, ax), dot(ay, ay)));
        const double scale = na * std::max(nx, ny);
        if (scale > 0.0)
        {
          adjoint = std::max(adjoint, std::abs(dot(ax, y) - dot(x, ay)) / scale);
          psd = std::max(psd, -dot(x, ax) / (na * nx));
        }
      }
    }
    const auto dense = dense_assemble(model);
    if (dense.size() > 0)
    {
      const auto lambda = dense_eigenvalues(dense);
      spectrum = std::max(spectrum, -lambda.front() / std::max(lambda.back(), 1e-300));
    }
    scenes++;
  }
  return {adjoint <= 1e-12 && psd <= 1e-12 && spectrum <= 1e-12,
          fmt("%d scenes x 3 variants: max |<Ax,y>-<x,Ay>|/(|A||x||y|) = %.2e, "
              "max -<x,Ax>/(|Ax||x|) = %.2e, max -lambda_min/lambda_max = %.2e (limits 1e-12)",
              scenes, adjoint, psd, spectrum)};
}

}  // namespace

int main(int argc, char **argv)
{
  const std::function<Outcome()> criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                                               criterion_5, criterion_6, criterion_7, criterion_8,
                                               criterion_9, criterion_10};
  int first = 1, last = 10;
  if (argc > 1)
  {
    first = last = std::atoi(argv[1]);
    if (first < 1 || first > 10)
    {
      std::fprintf(stderr, "usage: %s [criterion 1-10]\n", argv[0]);
      return 2;
    }
  }
  int failed = 0;
  for (int c = first; c <= last; c++)
  {
    Outcome o;
    try
    {
      o = criteria[c - 1]();
    }
    catch (const std::exception &e)
    {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
