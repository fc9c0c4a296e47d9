// SPDX-License-Identifier: Apache-2.0

#include "fitmf/krylov.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fitmf/vector_ops.hpp"

namespace fitmf
{

std::string_view to_string(Method m)
{
  switch (m)
  {
    case Method::cg:
      return "cg";
    case Method::bcgs:
      return "bcgs";
    case Method::cr:
      return "cr";
    case Method::gmres:
      return "gmres";
    case Method::cgs:
      return "cgs";
  }
  return "?";
}

Method parse_method(std::string_view name)
{
  for (Method m : {Method::cg, Method::bcgs, Method::cr, Method::gmres, Method::cgs})
  {
    if (name == to_string(m))
    {
      return m;
    }
  }
  throw std::invalid_argument("unknown solver '" + std::string(name) +
                              "' (expected cg, bcgs, cr, gmres or cgs)");
}

int applies_per_iteration(Method m)
{
  return (m == Method::bcgs || m == Method::cgs) ? 2 : 1;
}

template <typename T>
JacobiPreconditioner<T>::JacobiPreconditioner(std::span<const T> diagonal,
                                              std::span<const std::uint8_t> mask,
                                              double omega, const Exec *exec)
  : inv_(diagonal.size(), 0.0), exec_(exec)
{
  if (mask.size() != diagonal.size())
  {
    throw DimensionError("jacobi: mask and diagonal lengths differ");
  }
  double pmax = 0.0;
  for (const auto &p : diagonal)
  {
    pmax = std::max(pmax, std::abs(p));
  }
  const double floor = std::numeric_limits<double>::epsilon() * pmax;
  const double w2 = omega * omega;
  for (std::size_t i = 0; i < diagonal.size(); i++)
  {
    if (!mask[i])
    {
      const double d = std::max(std::abs(diagonal[i] - w2), floor);
      inv_[i] = d > 0.0 ? 1.0 / d : 0.0;
    }
  }
}

template <typename T>
void JacobiPreconditioner<T>::apply(std::span<const T> r, std::span<T> z) const
{
  auto body = [&](std::int64_t r0, std::int64_t r1)
  {
    for (auto i = r0; i < r1; i++)
    {
      z[i] = inv_[i] * r[i];
    }
  };
  if (exec_ && exec_->size() == std::int64_t(r.size()))
  {
    exec_->for_ranges([&](IndexRange rg) { body(rg.begin, rg.end); });
  }
  else
  {
    body(0, static_cast<std::int64_t>(r.size()));
  }
}

template <typename T>
std::vector<T> jacobi_apply(std::span<const T> diagonal, std::span<const std::uint8_t> mask,
                            double omega, std::span<const T> r)
{
  JacobiPreconditioner<T> pc(diagonal, mask, omega);
  std::vector<T> z(r.size());
  pc.apply(r, z);
  return z;
}

namespace
{

enum class Status
{
  converged,
  max_iter,
  breakdown,
};

template <typename T>
bool bad(const T &v)
{
  return v == T(0) || !std::isfinite(std::abs(v));
}

template <typename T>
struct Context
{
  LinearMap<T> &op;
  const Preconditioner<T> &pc;
  const Exec &exec;
  const SolveOptions &opts;
  double bnorm;
  SolveReport<T> &report;
  std::vector<T> best_x;
  double best_res = std::numeric_limits<double>::infinity();

  std::size_t n() const { return static_cast<std::size_t>(op.size()); }

  void apply(std::span<const T> x, std::span<T> y)
  {
    op.apply(x, y);
    report.applies++;
  }

  bool budget_left() const { return report.iterations < opts.max_iter; }

  // Records one iteration; true when the recursive residual is below tol.
  bool record(double rnorm, std::span<const T> x, bool track_best = true)
  {
    report.iterations++;
    const double rel = rnorm / bnorm;
    report.residual_history.push_back(rel);
    if (track_best && rel < best_res)
    {
      best_res = rel;
      best_x.assign(x.begin(), x.end());
    }
    return rel < opts.tol;
  }

  void breakdown(const char *what)
  {
    report.breakdown_iteration = report.iterations;
    report.message = std::string(to_string(opts.method)) + " breakdown (" + what +
                     ") at iteration " + std::to_string(report.iterations);
  }
};

// Preconditioned conjugate gradients with the unconjugated bilinear form, so complex
// symmetric systems are handled as well.
template <typename T>
Status run_cg(Context<T> &ctx, std::vector<T> &x, std::vector<T> &r)
{
  const auto &ex = ctx.exec;
  const auto n = ctx.n();
  std::vector<T> z(n), p(n), q(n);
  ctx.pc.apply(r, z);
  vec::copy<T>(ex, z, p);
  T rz = vec::dotu<T>(ex, r, z);
  while (ctx.budget_left())
  {
    ctx.apply(p, q);
    const T pq = vec::dotu<T>(ex, p, q);
    if (bad(pq))
    {
      ctx.breakdown("p.Ap = 0");
      return Status::breakdown;
    }
    const T alpha = rz / pq;
    vec::axpy<T>(ex, alpha, p, x);
    vec::axpy<T>(ex, -alpha, q, r);
    if (ctx.record(vec::norm2<T>(ex, r), x))
    {
      return Status::converged;
    }
    ctx.pc.apply(r, z);
    const T rz_new = vec::dotu<T>(ex, r, z);
    if (bad(rz))
    {
      ctx.breakdown("r.z = 0");
      return Status::breakdown;
    }
    vec::xpby<T>(ex, z, rz_new / rz, p);
    rz = rz_new;
  }
  return Status::max_iter;
}

// Preconditioned conjugate residuals (unconjugated form).
template <typename T>
Status run_cr(Context<T> &ctx, std::vector<T> &x, std::vector<T> &r)
{
  const auto &ex = ctx.exec;
  const auto n = ctx.n();
  std::vector<T> z(n), p(n), az(n), ap(n), mq(n);
  ctx.pc.apply(r, z);
  vec::copy<T>(ex, z, p);
  ctx.apply(z, az);
  vec::copy<T>(ex, az, ap);
  T zaz = vec::dotu<T>(ex, z, az);
  while (ctx.budget_left())
  {
    ctx.pc.apply(ap, mq);
    const T den = vec::dotu<T>(ex, ap, mq);
    if (bad(den))
    {
      ctx.breakdown("Ap.M^-1Ap = 0");
      return Status::breakdown;
    }
    const T alpha = zaz / den;
    vec::axpy<T>(ex, alpha, p, x);
    vec::axpy<T>(ex, -alpha, ap, r);
    if (ctx.record(vec::norm2<T>(ex, r), x))
    {
      return Status::converged;
    }
    vec::axpy<T>(ex, -alpha, mq, z);
    ctx.apply(z, az);
    const T zaz_new = vec::dotu<T>(ex, z, az);
    if (bad(zaz))
    {
      ctx.breakdown("z.Az = 0");
      return Status::breakdown;
    }
    const T beta = zaz_new / zaz;
    vec::xpby<T>(ex, z, beta, p);
    vec::xpby<T>(ex, az, beta, ap);
    zaz = zaz_new;
  }
  return Status::max_iter;
}

// Right-preconditioned BiCGStab.
template <typename T>
Status run_bcgs(Context<T> &ctx, std::vector<T> &x, std::vector<T> &r)
{
  const auto &ex = ctx.exec;
  const auto n = ctx.n();
  std::vector<T> rhat(r), p(n, T(0)), v(n, T(0)), phat(n), s(n), shat(n), t(n);
  T rho(1), alpha(1), omega(1);
  while (ctx.budget_left())
  {
    const T rho_new = vec::dotc<T>(ex, rhat, r);
    if (bad(rho_new))
    {
      ctx.breakdown("rho = 0");
      return Status::breakdown;
    }
    const T beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    // p = r + beta (p - omega v)
    vec::axpy<T>(ex, -omega, v, p);
    vec::xpby<T>(ex, r, beta, p);
    ctx.pc.apply(p, phat);
    ctx.apply(phat, v);
    const T rv = vec::dotc<T>(ex, rhat, v);
    if (bad(rv))
    {
      ctx.breakdown("rhat.v = 0");
      return Status::breakdown;
    }
    alpha = rho / rv;
    vec::copy<T>(ex, r, s);
    vec::axpy<T>(ex, -alpha, v, s);
    const double snorm = vec::norm2<T>(ex, s);
    if (snorm / ctx.bnorm < ctx.opts.tol)
    {
      vec::axpy<T>(ex, alpha, phat, x);
      vec::copy<T>(ex, s, r);
      ctx.record(snorm, x);
      return Status::converged;
    }
    ctx.pc.apply(s, shat);
    ctx.apply(shat, t);
    const T tt = vec::dotc<T>(ex, t, t);
    if (bad(tt))
    {
      ctx.breakdown("t.t = 0");
      return Status::breakdown;
    }
    omega = vec::dotc<T>(ex, t, s) / tt;
    vec::axpy<T>(ex, alpha, phat, x);
    vec::axpy<T>(ex, omega, shat, x);
    vec::copy<T>(ex, s, r);
    vec::axpy<T>(ex, -omega, t, r);
    if (ctx.record(vec::norm2<T>(ex, r), x))
    {
      return Status::converged;
    }
    if (bad(omega))
    {
      ctx.breakdown("omega = 0");
      return Status::breakdown;
    }
  }
  return Status::max_iter;
}

// Right-preconditioned conjugate gradients squared.
template <typename T>
Status run_cgs(Context<T> &ctx, std::vector<T> &x, std::vector<T> &r)
{
  const auto &ex = ctx.exec;
  const auto n = ctx.n();
  std::vector<T> rhat(r), u(n), p(n), q(n, T(0)), phat(n), vhat(n), uhat(n), w(n);
  T rho_prev(0);
  bool first = true;
  while (ctx.budget_left())
  {
    const T rho = vec::dotc<T>(ex, rhat, r);
    if (bad(rho))
    {
      ctx.breakdown("rho = 0");
      return Status::breakdown;
    }
    if (first)
    {
      vec::copy<T>(ex, r, u);
      vec::copy<T>(ex, u, p);
      first = false;
    }
    else
    {
      const T beta = rho / rho_prev;
      vec::copy<T>(ex, r, u);
      vec::axpy<T>(ex, beta, q, u);
      // p = u + beta (q + beta p)
      vec::xpby<T>(ex, q, beta, p);
      vec::xpby<T>(ex, u, beta, p);
    }
    rho_prev = rho;
    ctx.pc.apply(p, phat);
    ctx.apply(phat, vhat);
    const T sigma = vec::dotc<T>(ex, rhat, vhat);
    if (bad(sigma))
    {
      ctx.breakdown("rhat.v = 0");
      return Status::breakdown;
    }
    const T alpha = rho / sigma;
    // q = u - alpha v; uhat = M^-1 (u + q)
    vec::copy<T>(ex, u, q);
    vec::axpy<T>(ex, -alpha, vhat, q);
    vec::copy<T>(ex, u, w);
    vec::axpy<T>(ex, T(1), q, w);
    ctx.pc.apply(w, uhat);
    vec::axpy<T>(ex, alpha, uhat, x);
    ctx.apply(uhat, w);
    vec::axpy<T>(ex, -alpha, w, r);
    if (ctx.record(vec::norm2<T>(ex, r), x))
    {
      return Status::converged;
    }
  }
  return Status::max_iter;
}

template <typename T>
void givens(const T &a, const T &b, double &c, T &s)
{
  const double aa = std::abs(a), bb = std::abs(b);
  if (bb == 0.0)
  {
    c = 1.0;
    s = T(0);
    return;
  }
  if (aa == 0.0)
  {
    c = 0.0;
    s = vec::conj_if(b) / bb;
    return;
  }
  const double nrm = std::hypot(aa, bb);
  c = aa / nrm;
  s = (a / aa) * vec::conj_if(b) / nrm;
}

// Restarted GMRES with right preconditioning and modified Gram-Schmidt. Returns after the
// Givens residual estimate drops below tol (x updated) or the budget runs out.
template <typename T>
Status run_gmres(Context<T> &ctx, std::vector<T> &x, std::vector<T> &r,
                 const std::span<const T> b)
{
  const auto &ex = ctx.exec;
  const auto n = ctx.n();
  const int m = std::max(1, ctx.opts.restart);
  std::vector<std::vector<T>> V(m + 1, std::vector<T>(n));
  std::vector<std::vector<T>> H(m + 1, std::vector<T>(m, T(0)));
  std::vector<double> cs(m);
  std::vector<T> sn(m), g(m + 1), y(m), w(n), zw(n);
  bool first_cycle = true;
  while (ctx.budget_left())
  {
    if (!first_cycle)
    {
      // r = b - A x
      ctx.apply(x, w);
      vec::copy<T>(ex, b, r);
      vec::axpy<T>(ex, T(-1), w, r);
    }
    first_cycle = false;
    const double beta = vec::norm2<T>(ex, r);
    if (beta / ctx.bnorm < ctx.opts.tol)
    {
      return Status::converged;
    }
    vec::copy<T>(ex, r, V[0]);
    vec::scale<T>(ex, T(1.0 / beta), V[0]);
    std::fill(g.begin(), g.end(), T(0));
    g[0] = beta;
    int k = 0;
    bool done = false;
    for (; k < m && ctx.budget_left(); k++)
    {
      ctx.pc.apply(V[k], zw);
      ctx.apply(zw, w);
      for (int i = 0; i <= k; i++)
      {
        H[i][k] = vec::dotc<T>(ex, V[i], w);
        vec::axpy<T>(ex, -H[i][k], V[i], w);
      }
      const double hnext = vec::norm2<T>(ex, w);
      H[k + 1][k] = hnext;
      for (int i = 0; i < k; i++)
      {
        const T hi = H[i][k], hi1 = H[i + 1][k];
        H[i][k] = cs[i] * hi + sn[i] * hi1;
        H[i + 1][k] = -vec::conj_if(sn[i]) * hi + cs[i] * hi1;
      }
      givens(H[k][k], H[k + 1][k], cs[k], sn[k]);
      H[k][k] = cs[k] * H[k][k] + sn[k] * H[k + 1][k];
      H[k + 1][k] = T(0);
      g[k + 1] = -vec::conj_if(sn[k]) * g[k];
      g[k] = cs[k] * g[k];
      if (bad(H[k][k]))
      {
        ctx.breakdown("singular Hessenberg");
        return Status::breakdown;
      }
      const double est = std::abs(g[k + 1]);
      ctx.report.iterations++;
      ctx.report.residual_history.push_back(est / ctx.bnorm);
      if (est / ctx.bnorm < ctx.opts.tol || hnext == 0.0)
      {
        k++;
        done = true;
        break;
      }
      vec::copy<T>(ex, w, V[k + 1]);
      vec::scale<T>(ex, T(1.0 / hnext), V[k + 1]);
    }
    // y = H^-1 g, x += M^-1 V y
    for (int i = k - 1; i >= 0; i--)
    {
      T s = g[i];
      for (int j = i + 1; j < k; j++)
      {
        s -= H[i][j] * y[j];
      }
      y[i] = s / H[i][i];
    }
    std::fill(w.begin(), w.end(), T(0));
    for (int i = 0; i < k; i++)
    {
      vec::axpy<T>(ex, y[i], V[i], w);
    }
    ctx.pc.apply(w, zw);
    vec::axpy<T>(ex, T(1), zw, x);
    if (done)
    {
      return Status::converged;
    }
  }
  return Status::max_iter;
}

template <typename T>
double true_residual(Context<T> &ctx, std::span<const T> b, const std::vector<T> &x,
                     std::vector<T> &r)
{
  std::vector<T> ax(ctx.n());
  ctx.apply(x, ax);
  vec::copy<T>(ctx.exec, b, r);
  vec::axpy<T>(ctx.exec, T(-1), ax, r);
  return vec::norm2<T>(ctx.exec, r) / ctx.bnorm;
}

}  // namespace

template <typename T>
SolveReport<T> solve(const SolveOptions &opts, LinearMap<T> &op, const Preconditioner<T> &pc,
                     std::span<const T> b, const Exec &exec)
{
  const auto n = static_cast<std::size_t>(op.size());
  if (b.size() != n || std::size_t(exec.size()) != n)
  {
    throw DimensionError("solve: right-hand side / executor length mismatch");
  }
  if (!(opts.tol > 0.0) || opts.max_iter < 0 || opts.restart < 1)
  {
    throw std::invalid_argument("solve: need tol > 0, max_iter >= 0, restart >= 1");
  }
  if (opts.method == Method::cgs && !opts.allow_cgs)
  {
    throw std::invalid_argument(
      "solve: cgs is disabled by default (inaccurate near resonances); enable it explicitly");
  }
  SolveReport<T> report;
  report.x.assign(n, T(0));
  report.residual_history.push_back(1.0);
  const double bnorm = vec::norm2<T>(exec, b);
  if (bnorm == 0.0)
  {
    report.converged = true;
    report.true_residual = 0.0;
    return report;
  }
  Context<T> ctx{op, pc, exec, opts, bnorm, report, {}, std::numeric_limits<double>::infinity()};
  std::vector<T> &x = report.x;
  std::vector<T> r(b.begin(), b.end());
  double last_true = 1.0;
  int stalls = 0;
  while (true)
  {
    Status st = Status::max_iter;
    switch (opts.method)
    {
      case Method::cg:
        st = run_cg(ctx, x, r);
        break;
      case Method::cr:
        st = run_cr(ctx, x, r);
        break;
      case Method::bcgs:
        st = run_bcgs(ctx, x, r);
        break;
      case Method::cgs:
        st = run_cgs(ctx, x, r);
        break;
      case Method::gmres:
        st = run_gmres(ctx, x, r, b);
        break;
    }
    report.true_residual = true_residual(ctx, b, x, r);
    if (report.true_residual < ctx.best_res)
    {
      ctx.best_res = report.true_residual;
      ctx.best_x = x;
    }
    if (report.true_residual < opts.tol)
    {
      report.converged = true;
      break;
    }
    if (st != Status::converged)
    {
      if (st == Status::max_iter)
      {
        report.message = std::string(to_string(opts.method)) + " reached max_iter=" +
                         std::to_string(opts.max_iter);
      }
      break;
    }
    // Recursive residual converged but the true one drifted: restart from x.
    stalls = report.true_residual > 0.5 * last_true ? stalls + 1 : 0;
    last_true = report.true_residual;
    if (stalls >= 3)
    {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "%.*s stagnated: true residual %.3e above tol %.1e after residual replacement",
                    static_cast<int>(to_string(opts.method).size()), to_string(opts.method).data(),
                    report.true_residual, opts.tol);
      report.message = buf;
      break;
    }
  }
  if (!report.converged && !ctx.best_x.empty() && ctx.best_res < report.true_residual)
  {
    x = ctx.best_x;
    std::vector<T> scratch(n);
    report.true_residual = true_residual(ctx, b, x, scratch);
  }
  return report;
}

template <typename T>
SolveReport<T> solve(const SolveOptions &opts, ShellOperator<T> &op,
                     const Preconditioner<T> &pc, std::span<const T> b, const Exec &exec)
{
  const auto before = op.mults();
  auto report = solve(opts, static_cast<LinearMap<T> &>(op), pc, b, exec);
  report.mults_consumed = op.mults() - before;
  return report;
}

template class JacobiPreconditioner<double>;
template class JacobiPreconditioner<Complex>;
template std::vector<double> jacobi_apply(std::span<const double>,
                                          std::span<const std::uint8_t>, double,
                                          std::span<const double>);
template std::vector<Complex> jacobi_apply(std::span<const Complex>,
                                           std::span<const std::uint8_t>, double,
                                           std::span<const Complex>);
template SolveReport<double> solve(const SolveOptions &, LinearMap<double> &,
                                   const Preconditioner<double> &, std::span<const double>,
                                   const Exec &);
template SolveReport<Complex> solve(const SolveOptions &, LinearMap<Complex> &,
                                    const Preconditioner<Complex> &,
                                    std::span<const Complex>, const Exec &);
template SolveReport<double> solve(const SolveOptions &, ShellOperator<double> &,
                                   const Preconditioner<double> &, std::span<const double>,
                                   const Exec &);
template SolveReport<Complex> solve(const SolveOptions &, ShellOperator<Complex> &,
                                    const Preconditioner<Complex> &,
                                    std::span<const Complex>, const Exec &);

}  // namespace fitmf
