// SPDX-License-Identifier: Apache-2.0

#include "fitmf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fitmf
{

namespace
{

// Cell index along one axis containing coordinate x, or -1 outside the grid.
int locate(const std::vector<double> &planes, double x)
{
  if (x < planes.front() || x >= planes.back())
  {
    return -1;
  }
  const auto it = std::upper_bound(planes.begin(), planes.end(), x);
  return static_cast<int>(it - planes.begin()) - 1;
}

// Cell containing a point, -1 outside.
std::int64_t cell_at_point(const Grid &grid, const MaterialMap &map, const std::array<double, 3> &p)
{
  const int ci = locate(grid.planes(Axis::x), p[0]);
  const int cj = locate(grid.planes(Axis::y), p[1]);
  const int ck = locate(grid.planes(Axis::z), p[2]);
  if (ci < 0 || cj < 0 || ck < 0)
  {
    return -1;
  }
  return static_cast<std::int64_t>(map.cell(ci, cj, ck));
}

std::array<double, 3> node_point(const Grid &grid, const Node &n)
{
  return {grid.planes(Axis::x)[n.i], grid.planes(Axis::y)[n.j], grid.planes(Axis::z)[n.k]};
}

Complex cell_permittivity(const MaterialMap &map, std::int64_t c, double omega)
{
  Complex eps = kEps0 * map.eps_r[c];
  if (map.sigma[c] != 0.0)
  {
    if (!(omega > 0.0))
    {
      throw OracleError("oracle: conductivity needs omega > 0");
    }
    eps -= Complex(0.0, map.sigma[c] / omega);
  }
  return eps;
}

Node offset(Node n, Axis a, int d)
{
  n[a] += d;
  return n;
}

void check_guard(std::size_t n, std::size_t guard, const char *what)
{
  if (n > guard)
  {
    throw OracleError(std::string("oracle: ") + what + " has " + std::to_string(n) +
                      " unknowns, above the dense limit of " + std::to_string(guard));
  }
}

}  // namespace

std::vector<LoopEdge> facet_loop(const Grid &grid, const Node &n, Axis w)
{
  const Axis u = next_axis(w), v = prev_axis(w);
  const Node nu = offset(n, u, 1), nv = offset(n, v, 1);
  std::vector<LoopEdge> loop;
  // (tail node, direction, sign of traversal)
  const std::array<std::tuple<Node, Axis, int>, 4> steps{
      std::tuple{n, u, +1}, std::tuple{nu, v, +1}, std::tuple{nv, u, -1}, std::tuple{n, v, -1}};
  for (const auto &[tail, dir, sign] : steps)
  {
    if (grid.contains(tail))
    {
      loop.push_back({grid.edge_index(tail, dir), sign});
    }
  }
  return loop;
}

Eigen::MatrixXd dense_curl(const Grid &grid, std::size_t guard)
{
  const auto ne = static_cast<std::size_t>(grid.num_edges());
  check_guard(ne, guard, "curl");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(ne, ne);
  for (int k = 0; k < grid.nodes(Axis::z); k++)
  {
    for (int j = 0; j < grid.nodes(Axis::y); j++)
    {
      for (int i = 0; i < grid.nodes(Axis::x); i++)
      {
        const Node n{i, j, k};
        for (Axis w : kAxes)
        {
          const auto row = grid.edge_index(n, w);
          for (const auto &le : facet_loop(grid, n, w))
          {
            c(row, le.edge) += le.sign;
          }
        }
      }
    }
  }
  return c;
}

Eigen::MatrixXd dense_gradient(const Grid &grid, std::size_t guard)
{
  const auto ne = static_cast<std::size_t>(grid.num_edges());
  check_guard(ne, guard, "gradient");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(ne, grid.num_nodes());
  for (int k = 0; k < grid.nodes(Axis::z); k++)
  {
    for (int j = 0; j < grid.nodes(Axis::y); j++)
    {
      for (int i = 0; i < grid.nodes(Axis::x); i++)
      {
        const Node n{i, j, k};
        for (Axis w : kAxes)
        {
          const auto row = grid.edge_index(n, w);
          g(row, grid.node_index(n)) = -1.0;
          if (const Node head = offset(n, w, 1); grid.contains(head))
          {
            g(row, grid.node_index(head)) = 1.0;
          }
        }
      }
    }
  }
  return g;
}

std::vector<Complex> oracle_permittivity(const Grid &grid, const MaterialMap &map, double omega)
{
  std::vector<Complex> out(grid.num_edges(), 0.0);
  for (std::int64_t e = 0; e < grid.num_edges(); e++)
  {
    const auto [n, w] = grid.edge_of(static_cast<EdgeIndex>(e));
    if (!grid.contains(offset(n, w, 1)))
    {
      continue;
    }
    const auto p0 = node_point(grid, n);
    const auto p1 = node_point(grid, offset(n, w, 1));
    const double length = p1[to_int(w)] - p0[to_int(w)];
    const Axis u = next_axis(w), v = prev_axis(w);
    const auto &pu = grid.planes(u);
    const auto &pv = grid.planes(v);
    Complex integral = 0.0;
    // Quarter rectangles between the edge and the neighbouring cell centres.
    for (int su : {-1, 1})
    {
      const int ou = n[u] + su;
      if (ou < 0 || ou >= static_cast<int>(pu.size()))
      {
        continue;
      }
      const double u0 = pu[n[u]], u1 = 0.5 * (pu[n[u]] + pu[ou]);
      for (int sv : {-1, 1})
      {
        const int ov = n[v] + sv;
        if (ov < 0 || ov >= static_cast<int>(pv.size()))
        {
          continue;
        }
        const double v0 = pv[n[v]], v1 = 0.5 * (pv[n[v]] + pv[ov]);
        std::array<double, 3> mid{};
        mid[to_int(w)] = 0.5 * (p0[to_int(w)] + p1[to_int(w)]);
        mid[to_int(u)] = 0.5 * (u0 + u1);
        mid[to_int(v)] = 0.5 * (v0 + v1);
        const auto c = cell_at_point(grid, map, mid);
        integral += std::abs(u1 - u0) * std::abs(v1 - v0) * cell_permittivity(map, c, omega);
      }
    }
    out[e] = integral / length;
  }
  return out;
}

std::vector<Complex> oracle_inv_permeability(const Grid &grid, const MaterialMap &map)
{
  std::vector<Complex> out(grid.num_edges(), 0.0);
  for (std::int64_t f = 0; f < grid.num_edges(); f++)
  {
    const auto [n, w] = grid.edge_of(static_cast<EdgeIndex>(f));
    const Axis u = next_axis(w), v = prev_axis(w);
    if (!grid.contains(offset(n, u, 1)) || !grid.contains(offset(n, v, 1)))
    {
      continue;
    }
    const auto p0 = node_point(grid, n);
    const auto pu1 = node_point(grid, offset(n, u, 1));
    const auto pv1 = node_point(grid, offset(n, v, 1));
    const double area = (pu1[to_int(u)] - p0[to_int(u)]) * (pv1[to_int(v)] - p0[to_int(v)]);
    std::array<double, 3> centre = p0;
    centre[to_int(u)] = 0.5 * (p0[to_int(u)] + pu1[to_int(u)]);
    centre[to_int(v)] = 0.5 * (p0[to_int(v)] + pv1[to_int(v)]);
    const auto &pw = grid.planes(w);
    Complex integral = 0.0;
    double dual_length = 0.0;
    for (int s : {-1, 1})
    {
      const int o = n[w] + s;
      if (o < 0 || o >= static_cast<int>(pw.size()))
      {
        continue;
      }
      const double a = pw[n[w]], b = 0.5 * (pw[n[w]] + pw[o]);
      std::array<double, 3> mid = centre;
      mid[to_int(w)] = 0.5 * (a + b);
      const auto c = cell_at_point(grid, map, mid);
      integral += std::abs(b - a) * kMu0 * map.mu_r[c];
      dual_length += std::abs(b - a);
    }
    out[f] = dual_length * dual_length / (integral * area);
  }
  return out;
}

std::vector<std::uint8_t> oracle_mask(const Grid &grid, const MaterialMap &map, const Walls &walls)
{
  std::vector<std::uint8_t> mask(grid.num_edges(), 0);
  for (std::int64_t e = 0; e < grid.num_edges(); e++)
  {
    const auto [n, w] = grid.edge_of(static_cast<EdgeIndex>(e));
    if (!grid.contains(offset(n, w, 1)))
    {
      mask[e] = 1;
      continue;
    }
    const auto p0 = node_point(grid, n);
    const auto p1 = node_point(grid, offset(n, w, 1));
    std::array<double, 3> mid = p0;
    mid[to_int(w)] = 0.5 * (p0[to_int(w)] + p1[to_int(w)]);
    bool masked = false;
    for (Axis t : kAxes)
    {
      if (t == w)
      {
        continue;
      }
      const auto &pt = grid.planes(t);
      const int lo = 2 * to_int(t), hi = lo + 1;
      masked |= mid[to_int(t)] == pt.front() && walls.face[lo] == WallBC::pec;
      masked |= mid[to_int(t)] == pt.back() && walls.face[hi] == WallBC::pec;
    }
    // Probe the four cells touching the edge just off its midpoint.
    const Axis u = next_axis(w), v = prev_axis(w);
    const double du = 1e-6 * grid.extent(u), dv = 1e-6 * grid.extent(v);
    for (int su : {-1, 1})
    {
      for (int sv : {-1, 1})
      {
        auto q = mid;
        q[to_int(u)] += su * du;
        q[to_int(v)] += sv * dv;
        if (const auto c = cell_at_point(grid, map, q); c >= 0 && map.pec[c])
        {
          masked = true;
        }
      }
    }
    mask[e] = masked;
  }
  return mask;
}

DenseSystem dense_assemble(const Grid &grid, const MaterialMap &map, const Walls &walls,
                           double omega, std::size_t guard)
{
  const auto eps = oracle_permittivity(grid, map, omega);
  const auto inv_mu = oracle_inv_permeability(grid, map);
  const auto mask = oracle_mask(grid, map, walls);

  DenseSystem sys;
  sys.lossless = map.lossless();
  sys.position.assign(grid.num_edges(), -1);
  for (std::int64_t e = 0; e < grid.num_edges(); e++)
  {
    if (!mask[e])
    {
      sys.position[e] = static_cast<std::int64_t>(sys.index.size());
      sys.index.push_back(static_cast<EdgeIndex>(e));
    }
  }
  check_guard(sys.index.size(), guard, "system");
  const auto n = static_cast<Eigen::Index>(sys.index.size());
  sys.a = Eigen::MatrixXcd::Zero(n, n);

  // A = sum over facets of (1/mu)_f a_f a_f^T with a_f = row f of C scaled by eps^-1/2.
  std::vector<std::pair<Eigen::Index, Complex>> row;
  for (std::int64_t f = 0; f < grid.num_edges(); f++)
  {
    if (inv_mu[f] == Complex(0.0))
    {
      continue;
    }
    const auto [node, w] = grid.edge_of(static_cast<EdgeIndex>(f));
    row.clear();
    for (const auto &le : facet_loop(grid, node, w))
    {
      if (const auto p = sys.position[le.edge]; p >= 0)
      {
        row.emplace_back(p, double(le.sign) / std::sqrt(eps[le.edge]));
      }
    }
    for (const auto &[i, ai] : row)
    {
      for (const auto &[j, aj] : row)
      {
        sys.a(i, j) += ai * inv_mu[f] * aj;
      }
    }
  }
  return sys;
}

DenseSystem dense_assemble(const SceneModel &model, double omega, std::size_t guard)
{
  return dense_assemble(model.grid, model.materials, model.walls, omega, guard);
}

std::vector<Complex> dense_apply(const DenseSystem &sys, double omega, std::span<const Complex> x)
{
  if (x.size() != sys.full_size())
  {
    throw OracleError("oracle: vector length does not match the system");
  }
  const auto n = static_cast<Eigen::Index>(sys.size());
  Eigen::VectorXcd xs(n);
  for (Eigen::Index i = 0; i < n; i++)
  {
    xs(i) = x[sys.index[i]];
  }
  const Eigen::VectorXcd ys = sys.a * xs - omega * omega * xs;
  std::vector<Complex> y(sys.full_size(), 0.0);
  for (Eigen::Index i = 0; i < n; i++)
  {
    y[sys.index[i]] = ys(i);
  }
  return y;
}

std::vector<Complex> dense_solve(const DenseSystem &sys, double omega, std::span<const Complex> b)
{
  if (b.size() != sys.full_size())
  {
    throw OracleError("oracle: vector length does not match the system");
  }
  const auto n = static_cast<Eigen::Index>(sys.size());
  Eigen::VectorXcd bs(n);
  for (Eigen::Index i = 0; i < n; i++)
  {
    bs(i) = b[sys.index[i]];
  }
  Eigen::MatrixXcd m = sys.a;
  m.diagonal().array() -= omega * omega;
  const Eigen::VectorXcd xs = m.partialPivLu().solve(bs);
  std::vector<Complex> x(sys.full_size(), 0.0);
  for (Eigen::Index i = 0; i < n; i++)
  {
    x[sys.index[i]] = xs(i);
  }
  return x;
}

std::vector<Complex> dense_diagonal(const DenseSystem &sys)
{
  std::vector<Complex> d(sys.full_size(), 0.0);
  for (std::size_t i = 0; i < sys.size(); i++)
  {
    d[sys.index[i]] = sys.a(i, i);
  }
  return d;
}

std::vector<double> dense_eigenvalues(const DenseSystem &sys)
{
  if (!sys.lossless)
  {
    throw OracleError("oracle: eigenvalues need a lossless scene");
  }
  if (sys.size() == 0)
  {
    return {};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sys.real(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
  {
    throw OracleError("oracle: eigensolver did not converge");
  }
  const auto &ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

Eigen::MatrixXd gradient_null_basis(const Grid &grid, const std::vector<std::uint8_t> &mask,
                                    std::size_t guard)
{
  const Eigen::MatrixXd g = dense_gradient(grid, guard);
  // Potentials whose gradient vanishes on every masked edge of positive length.
  std::vector<Eigen::Index> fixed, free;
  for (std::int64_t e = 0; e < grid.num_edges(); e++)
  {
    const Node n = grid.node_of(e / 3);
    const Axis w = static_cast<Axis>(e % 3);
    if (!mask[e])
    {
      free.push_back(e);
    }
    else if (!grid.is_degenerate_edge(n, w))
    {
      fixed.push_back(e);
    }
  }
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(g.cols(), g.cols());
  if (!fixed.empty())
  {
    Eigen::MatrixXd gc(fixed.size(), g.cols());
    for (std::size_t r = 0; r < fixed.size(); r++)
    {
      gc.row(r) = g.row(fixed[r]);
    }
    phi = Eigen::FullPivLU<Eigen::MatrixXd>(gc).kernel();
  }
  Eigen::MatrixXd gu(free.size(), g.cols());
  for (std::size_t r = 0; r < free.size(); r++)
  {
    gu.row(r) = g.row(free[r]);
  }
  const Eigen::MatrixXd fields = gu * phi;
  if (fields.cols() == 0 || fields.rows() == 0)
  {
    return Eigen::MatrixXd(free.size(), 0);
  }
  // Orthonormal basis of the column space.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fields);
  qr.setThreshold(1e-10);
  return qr.householderQ() * Eigen::MatrixXd::Identity(fields.rows(), qr.rank());
}

std::vector<CavityEigenvalue>
analytic_cavity_eigenvalues(double a, double b, double c, double dx, double dy, double dz,
                            const std::vector<std::array<int, 3>> &modes)
{
  if (!(a > 0 && b > 0 && c > 0 && dx > 0 && dy > 0 && dz > 0))
  {
    throw OracleError("cavity: dimensions and steps must be positive");
  }
  constexpr double pi = std::numbers::pi;
  std::vector<CavityEigenvalue> out;
  for (const auto &[m, n, p] : modes)
  {
    if (m < 0 || n < 0 || p < 0 || (m == 0) + (n == 0) + (p == 0) > 1)
    {
      throw OracleError("cavity: invalid mode triple (" + std::to_string(m) + "," +
                        std::to_string(n) + "," + std::to_string(p) + ")");
    }
    const std::array<double, 3> k{m * pi / a, n * pi / b, p * pi / c};
    const std::array<double, 3> h{dx, dy, dz};
    double cont = 0.0, disc = 0.0;
    for (int w = 0; w < 3; w++)
    {
      cont += k[w] * k[w];
      const double s = 2.0 / h[w] * std::sin(0.5 * k[w] * h[w]);
      disc += s * s;
    }
    out.push_back({m, n, p, kC0 * kC0 * cont, kC0 * kC0 * disc});
  }
  return out;
}

std::vector<double> discrete_cavity_spectrum(double a, double b, double c, int nx, int ny, int nz)
{
  std::vector<std::array<int, 3>> modes;
  std::vector<int> multiplicity;
  for (int m = 0; m < nx; m++)
  {
    for (int n = 0; n < ny; n++)
    {
      for (int p = 0; p < nz; p++)
      {
        const int zeros = (m == 0) + (n == 0) + (p == 0);
        if (zeros <= 1)
        {
          modes.push_back({m, n, p});
          multiplicity.push_back(zeros == 0 ? 2 : 1);
        }
      }
    }
  }
  const auto ev = analytic_cavity_eigenvalues(a, b, c, a / nx, b / ny, c / nz, modes);
  std::vector<double> out;
  for (std::size_t i = 0; i < ev.size(); i++)
  {
    out.insert(out.end(), multiplicity[i], ev[i].discrete);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fitmf
