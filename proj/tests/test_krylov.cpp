// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <numbers>
#include <random>

#include "fitmf/krylov.hpp"
#include "fitmf/oracle.hpp"
#include "fitmf/sweep.hpp"
#include "test_util.hpp"

using namespace fitmf;

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct BoxCase
{
  SceneModel model;
  FitSystem<double> sys;
  Exec exec;
  std::vector<double> b;

  explicit BoxCase(SceneModel m, double omega)
    : model(std::move(m)), sys(model, Variant::e2tt, omega),
      exec(make_exec(model.grid, plan_slices(model.grid, 1), nullptr))
  {
    // Vertical unit current through the box centre column.
    const Grid &g = model.grid;
    std::vector<Node> path{{g.nx() / 2, g.ny() / 2, 0}, {g.nx() / 2, g.ny() / 2, g.nz()}};
    const auto seg = trace_path(g, path);
    b = excitation_pattern<double>(seg, sys.diagonals().inv_sqrt_eps);
  }

  SolveReport<double> run(Method m, double omega, double tol = 1e-12, int restart = 30)
  {
    auto op = sys.make_operator(omega);
    JacobiPreconditioner<double> pc(sys.jacobi(), sys.diagonals().edge_mask, omega);
    SolveOptions opts;
    opts.method = m;
    opts.tol = tol;
    opts.restart = restart;
    opts.allow_cgs = true;
    return solve(opts, op, pc, std::span<const double>(b), exec);
  }
};

SceneModel vacuum_box(int n, double size)
{
  const Grid g(uniform_planes(0, size, n), uniform_planes(0, size, n), uniform_planes(0, size, n));
  return test::model_of(g, MaterialMap::vacuum(g));
}

}  // namespace

TEST_CASE("zero right-hand side")
{
  BoxCase c(vacuum_box(3, 1.0), 1.0);
  std::fill(c.b.begin(), c.b.end(), 0.0);
  for (Method m : {Method::cg, Method::bcgs, Method::cr, Method::gmres})
  {
    const auto r = c.run(m, kTwoPi * 1e8);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.residual_history.front() == 1.0);
    for (double v : r.x)
    {
      CHECK(v == 0.0);
    }
  }
}

TEST_CASE("3x3x3 PEC box below the first resonance against dense LU")
{
  const double omega = kTwoPi * 1e8;  // first mode of the 1 m box is near 200 MHz
  BoxCase c(vacuum_box(3, 1.0), omega);
  const auto dense = dense_assemble(c.model, omega);
  const std::vector<Complex> bc(c.b.begin(), c.b.end());
  const auto ref = dense_solve(dense, omega, bc);

  const auto cg = c.run(Method::cg, omega);
  REQUIRE(cg.converged);
  CHECK(cg.true_residual < 1e-12);
  CHECK(test::rel_inf(cg.x, ref) <= 1e-10);

  for (Method m : {Method::bcgs, Method::cr, Method::gmres})
  {
    CAPTURE(to_string(m));
    const auto r = c.run(m, omega);
    CHECK(r.converged);
    CHECK(test::rel_inf(r.x, cg.x) <= 1e-9);
    // Solutions stay exactly zero on masked unknowns.
    for (std::size_t i = 0; i < r.x.size(); i++)
    {
      if (c.sys.diagonals().edge_mask[i])
      {
        CHECK(r.x[i] == 0.0);
      }
    }
  }
}

TEST_CASE("CGS only runs when enabled")
{
  const double omega = kTwoPi * 1e8;
  BoxCase c(vacuum_box(3, 1.0), omega);
  auto op = c.sys.make_operator(omega);
  IdentityPreconditioner<double> id;
  SolveOptions opts;
  opts.method = Method::cgs;
  CHECK_THROWS_AS(solve(opts, op, id, std::span<const double>(c.b), c.exec), std::invalid_argument);
  const auto r = c.run(Method::cgs, omega);
  CHECK(r.converged);
}

TEST_CASE("GMRES residual estimates never increase within a cycle")
{
  std::mt19937_64 rng(101);
  const Grid g = test::random_grid(rng, 4, 3, 4, 1e-2);
  const double omega = kTwoPi * 2e9;
  BoxCase c(test::model_of(g, test::random_lossless(rng, g)), omega);
  const int restart = 10;
  const auto r = c.run(Method::gmres, omega, 1e-12, restart);
  CHECK(r.converged);
  const auto &h = r.residual_history;
  for (std::size_t i = 1; i < h.size(); i++)
  {
    // A new cycle starts after every `restart` iterations.
    if ((i - 1) % restart != 0)
    {
      CHECK(h[i] <= h[i - 1] * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("round trip recovers a known solution")
{
  std::mt19937_64 rng(103);
  const Grid g = test::random_grid(rng, 3, 3, 3, 1e-2);
  const double omega = kTwoPi * 1e9;
  BoxCase c(test::model_of(g, test::random_lossless(rng, g)), omega);
  const auto &mask = c.sys.diagonals().edge_mask;
  auto xt = test::random_vector<double>(rng, c.b.size());
  for (std::size_t i = 0; i < xt.size(); i++)
  {
    xt[i] = mask[i] ? 0.0 : xt[i];
  }
  auto op = c.sys.make_operator(omega);
  op.apply(xt, c.b);
  for (Method m : {Method::cg, Method::bcgs, Method::cr, Method::gmres})
  {
    CAPTURE(to_string(m));
    const auto r = c.run(m, omega);
    CHECK(r.converged);
    CHECK(test::rel_inf(r.x, xt) <= 1e-8);
  }
}

TEST_CASE("operator work matches the iteration count")
{
  const double omega = kTwoPi * 1e8;
  BoxCase c(vacuum_box(4, 1.0), omega);
  for (Method m : {Method::cg, Method::bcgs, Method::cr, Method::gmres})
  {
    CAPTURE(to_string(m));
    const auto r = c.run(m, omega);
    const std::int64_t n = c.b.size();
    CHECK(r.mults_consumed == r.applies * mults_constant(Variant::e2tt) * n);
    // Krylov applies plus one true-residual check per cycle (and one start-up product
    // for CR).
    const std::int64_t krylov = std::int64_t(r.iterations) * applies_per_iteration(m);
    CHECK(r.applies >= krylov);
    CHECK(r.applies <= krylov + 4 + (m == Method::gmres ? r.iterations / 30 + 1 : 0));
  }
}

TEST_CASE("non-convergence returns the best iterate")
{
  std::mt19937_64 rng(113);
  const Grid g = test::random_grid(rng, 4, 4, 4, 1e-2);
  const double omega = kTwoPi * 1e9;
  BoxCase c(test::model_of(g, test::random_lossless(rng, g)), omega);
  auto op = c.sys.make_operator(omega);
  JacobiPreconditioner<double> pc(c.sys.jacobi(), c.sys.diagonals().edge_mask, omega);
  SolveOptions opts;
  opts.max_iter = 3;
  const auto r = solve(opts, op, pc, std::span<const double>(c.b), c.exec);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  CHECK(r.message.find("max_iter") != std::string::npos);
  double best = 1.0;
  for (double h : r.residual_history)
  {
    best = std::min(best, h);
  }
  CHECK(r.true_residual <= best * (1.0 + 1e-6));
}

namespace
{

// A - omega^2 that annihilates everything: every recurrence denominator vanishes.
struct ZeroMap : LinearMap<double>
{
  std::int64_t n;
  explicit ZeroMap(std::int64_t size) : n(size) {}
  std::int64_t size() const override { return n; }
  void apply(std::span<const double>, std::span<double> y) override
  {
    std::fill(y.begin(), y.end(), 0.0);
  }
};

}  // namespace

TEST_CASE("breakdown is reported with its iteration")
{
  ZeroMap op(10);
  IdentityPreconditioner<double> id;
  std::vector<double> b(10, 1.0);
  const Exec ex = Exec::serial(10);
  for (Method m : {Method::cg, Method::bcgs, Method::cr})
  {
    SolveOptions opts;
    opts.method = m;
    const auto r = solve(opts, op, id, std::span<const double>(b), ex);
    CHECK_FALSE(r.converged);
    REQUIRE(r.breakdown_iteration.has_value());
    CHECK(*r.breakdown_iteration == 0);
    CHECK(r.message.find("breakdown") != std::string::npos);
    for (double v : r.x)
    {
      CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("Jacobi preconditioner application")
{
  const std::vector<double> ones(5, 1.0), r{1, -2, 3, -4, 5};
  const std::vector<std::uint8_t> none(5, 0), masked{0, 1, 0, 0, 0};
  CHECK(jacobi_apply<double>(ones, none, 0.0, r) == r);
  const auto z = jacobi_apply<double>(ones, masked, 0.0, r);
  CHECK(z[1] == 0.0);
  CHECK(z[0] == 1.0);
  // P_ii - omega^2 vanishes on entry 2: clamped to eps * max |P|.
  const std::vector<double> p{4.0, 4.0, 1.0, 4.0, 4.0};
  const auto c = jacobi_apply<double>(p, none, 1.0, r);
  for (double v : c)
  {
    CHECK(std::isfinite(v));
  }
  CHECK(c[2] == doctest::Approx(3.0 / (std::numeric_limits<double>::epsilon() * 4.0)));
  CHECK(c[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("lossy complex solve agrees with dense LU")
{
  std::mt19937_64 rng(107);
  const Grid g = test::random_grid(rng, 3, 3, 3, 1e-2);
  MaterialMap m = test::random_lossless(rng, g);
  for (std::size_t cell = 0; cell < m.num_cells(); cell += 3)
  {
    m.eps_r[cell] = Complex(4.0, -0.5);
    m.sigma[cell] = 0.2;
  }
  const auto model = test::model_of(g, m);
  const double omega = kTwoPi * 3e9;
  FitSystem<Complex> sys(model, Variant::e2tt, omega);
  const Exec ex = make_exec(g, plan_slices(g, 1), nullptr);
  std::vector<Node> path{{1, 1, 0}, {1, 1, 3}};
  const auto b = excitation_pattern<Complex>(trace_path(g, path), sys.diagonals().inv_sqrt_eps);
  const auto ref = dense_solve(dense_assemble(model, omega), omega, b);
  for (Method meth : {Method::cg, Method::bcgs, Method::cr, Method::gmres})
  {
    CAPTURE(to_string(meth));
    auto op = sys.make_operator(omega);
    JacobiPreconditioner<Complex> pc(sys.jacobi(), sys.diagonals().edge_mask, omega);
    SolveOptions opts;
    opts.method = meth;
    const auto r = solve(opts, op, pc, std::span<const Complex>(b), ex);
    CHECK(r.converged);
    CHECK(test::rel_inf(r.x, ref) <= 1e-9);
  }
}

TEST_CASE("solves are bitwise reproducible across worker counts")
{
  std::mt19937_64 rng(109);
  const Grid g = test::random_grid(rng, 5, 5, 8, 1e-2);
  const double omega = kTwoPi * 1e9;
  BoxCase c(test::model_of(g, test::random_lossless(rng, g)), omega);
  for (Method m : {Method::cg, Method::bcgs, Method::cr, Method::gmres})
  {
    const auto ref = c.run(m, omega);
    for (int w : {2, 3})
    {
      WorkerPool pool(w);
      const Exec ex = make_exec(g, plan_slices(g, w), &pool);
      auto op = c.sys.make_operator(omega);
      op.set_exec(&ex);
      JacobiPreconditioner<double> pc(c.sys.jacobi(), c.sys.diagonals().edge_mask, omega, &ex);
      SolveOptions opts;
      opts.method = m;
      const auto r = solve(opts, op, pc, std::span<const double>(c.b), ex);
      CHECK(r.iterations == ref.iterations);
      CHECK(r.x == ref.x);
    }
  }
}

TEST_CASE("method names")
{
  CHECK(parse_method("bcgs") == Method::bcgs);
  CHECK(parse_method("gmres") == Method::gmres);
  CHECK(to_string(Method::cr) == "cr");
  CHECK_THROWS(parse_method("tfqmr"));
  CHECK(applies_per_iteration(Method::bcgs) == 2);
  CHECK(applies_per_iteration(Method::cg) == 1);
}
