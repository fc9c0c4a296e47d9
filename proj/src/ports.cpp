// SPDX-License-Identifier: Apache-2.0

#include "fitmf/ports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <Eigen/Dense>

namespace fitmf
{

std::vector<PathSegment> trace_path(const Grid &grid, std::span<const Node> nodes)
{
  if (nodes.size() < 2)
  {
    throw PortError("path needs at least two nodes");
  }
  std::vector<PathSegment> out;
  for (std::size_t s = 0; s + 1 < nodes.size(); s++)
  {
    const Node &a = nodes[s], &b = nodes[s + 1];
    if (!grid.contains(a) || !grid.contains(b))
    {
      throw PortError("path node " + std::to_string(s + (grid.contains(a) ? 1 : 0)) +
                      " outside the grid");
    }
    const int di = b.i - a.i, dj = b.j - a.j, dk = b.k - a.k;
    const int axes = (di != 0) + (dj != 0) + (dk != 0);
    if (axes != 1)
    {
      throw PortError("path nodes " + std::to_string(s) + " and " + std::to_string(s + 1) +
                      (axes == 0 ? " coincide" : " are not on a common grid line"));
    }
    const Axis dir = di != 0 ? Axis::x : (dj != 0 ? Axis::y : Axis::z);
    const int delta = di + dj + dk;
    const int sign = delta > 0 ? 1 : -1;
    // Straight run: one segment per edge between the two vertices.
    Node cur = a;
    for (int step = 0; step < std::abs(delta); step++)
    {
      Node next = cur;
      next[dir] += sign;
      out.push_back({grid.edge_index(sign > 0 ? cur : next, dir), sign});
      cur = next;
    }
  }
  return out;
}

void validate_path(std::span<const PathSegment> path, std::span<const std::uint8_t> mask,
                   const std::string &what)
{
  for (std::size_t s = 0; s < path.size(); s++)
  {
    if (mask[path[s].edge])
    {
      throw PortError(what + ": segment " + std::to_string(s) + " (edge " +
                      std::to_string(path[s].edge) + ") lies on a masked (PEC) edge");
    }
  }
}

std::vector<Complex> build_rhs(const Port &port, std::span<const Complex> inv_sqrt_eps,
                               double omega)
{
  std::vector<Complex> b(inv_sqrt_eps.size(), 0.0);
  const Complex factor = Complex(0.0, -omega) * port.current;
  for (const auto &seg : port.segments)
  {
    b[seg.edge] += factor * (double(seg.sign) * inv_sqrt_eps[seg.edge]);
  }
  return b;
}

template <typename T>
std::vector<T> excitation_pattern(std::span<const PathSegment> path,
                                  std::span<const T> inv_sqrt_eps)
{
  std::vector<T> b(inv_sqrt_eps.size(), T(0));
  for (const auto &seg : path)
  {
    b[seg.edge] += double(seg.sign) * inv_sqrt_eps[seg.edge];
  }
  return b;
}

template <typename T>
Complex probe_voltage(std::span<const T> e_scaled, std::span<const T> inv_sqrt_eps,
                      std::span<const PathSegment> path)
{
  Complex u = 0.0;
  for (const auto &seg : path)
  {
    u += double(seg.sign) * Complex(inv_sqrt_eps[seg.edge] * e_scaled[seg.edge]);
  }
  return u;
}

CMatrix CMatrix::identity(int size, Complex v)
{
  CMatrix m(size);
  for (int i = 0; i < size; i++)
  {
    m(i, i) = v;
  }
  return m;
}

CMatrix z_parameters(const CMatrix &voltages, std::span<const Complex> currents)
{
  if (std::size_t(voltages.n) != currents.size())
  {
    throw PortError("z_parameters: one current per excited port required");
  }
  CMatrix z(voltages.n);
  for (int n = 0; n < voltages.n; n++)
  {
    if (currents[n] == Complex(0.0))
    {
      throw PortError("z_parameters: port " + std::to_string(n) + " driven with zero current");
    }
    for (int m = 0; m < voltages.n; m++)
    {
      z(m, n) = -voltages(m, n) / currents[n];
    }
  }
  return z;
}

namespace
{

using EigenC = Eigen::MatrixXcd;

EigenC to_eigen(const CMatrix &m)
{
  EigenC e(m.n, m.n);
  for (int r = 0; r < m.n; r++)
  {
    for (int c = 0; c < m.n; c++)
    {
      e(r, c) = m(r, c);
    }
  }
  return e;
}

CMatrix from_eigen(const EigenC &e)
{
  CMatrix m(static_cast<int>(e.rows()));
  for (int r = 0; r < m.n; r++)
  {
    for (int c = 0; c < m.n; c++)
    {
      m(r, c) = e(r, c);
    }
  }
  return m;
}

// num * den^-1 with a singularity check on den.
CMatrix right_divide(const EigenC &num, const EigenC &den, const char *what)
{
  Eigen::FullPivLU<EigenC> lu(den);
  // The rcond estimate is unreliable once a pivot is exactly zero, so also look at the
  // pivot spread directly.
  const auto piv = lu.matrixLU().diagonal().cwiseAbs();
  const double spread = piv.size() ? piv.minCoeff() / piv.maxCoeff() : 1.0;
  const double rcond = std::min(lu.isInvertible() ? lu.rcond() : 0.0, spread);
  if (!(rcond > 1e-14))
  {
    std::ostringstream os;
    os << what << " is singular (reciprocal condition " << rcond << ")";
    throw PortError(os.str());
  }
  // X den = num  <=>  den^T X^T = num^T
  const EigenC xt = den.transpose().fullPivLu().solve(num.transpose());
  return from_eigen(xt.transpose());
}

}  // namespace

CMatrix s_from_z(const CMatrix &z, double z0)
{
  const EigenC ze = to_eigen(z);
  const EigenC id = EigenC::Identity(z.n, z.n);
  return right_divide(ze - z0 * id, ze + z0 * id, "Z + Z0 I");
}

CMatrix z_from_s(const CMatrix &s, double z0)
{
  const EigenC se = to_eigen(s);
  const EigenC id = EigenC::Identity(s.n, s.n);
  return right_divide(z0 * (id + se), id - se, "I - S");
}

template std::vector<double> excitation_pattern(std::span<const PathSegment>,
                                                std::span<const double>);
template std::vector<Complex> excitation_pattern(std::span<const PathSegment>,
                                                 std::span<const Complex>);
template Complex probe_voltage(std::span<const double>, std::span<const double>,
                               std::span<const PathSegment>);
template Complex probe_voltage(std::span<const Complex>, std::span<const Complex>,
                               std::span<const PathSegment>);

}  // namespace fitmf
