// SPDX-License-Identifier: Apache-2.0

#include "fitmf/grid.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fitmf
{

namespace
{

const char *axis_name(int a)
{
  return a == 0 ? "x" : (a == 1 ? "y" : "z");
}

}  // namespace

Grid::Grid(std::vector<double> x_planes, std::vector<double> y_planes,
           std::vector<double> z_planes)
  : planes_{std::move(x_planes), std::move(y_planes), std::move(z_planes)}
{
  n_nodes_ = 1;
  for (int a = 0; a < 3; a++)
  {
    const auto &p = planes_[a];
    if (p.size() < 2)
    {
      throw GridError(std::string("grid: ") + axis_name(a) +
                      " planes need at least 2 entries, got " + std::to_string(p.size()));
    }
    spacing_[a].resize(p.size() - 1);
    for (std::size_t c = 0; c + 1 < p.size(); c++)
    {
      if (!std::isfinite(p[c]) || !std::isfinite(p[c + 1]) || !(p[c + 1] > p[c]))
      {
        throw GridError(std::string("grid: ") + axis_name(a) +
                        " planes not strictly increasing at index " + std::to_string(c + 1));
      }
      spacing_[a][c] = p[c + 1] - p[c];
    }
    n_nodes_ *= static_cast<std::int64_t>(p.size());
  }
  if (3 * n_nodes_ >= std::int64_t(std::numeric_limits<std::int32_t>::max()))
  {
    throw GridError("grid: edge count exceeds 32-bit index range");
  }
}

Node Grid::node_of(std::int64_t idx) const
{
  const std::int64_t nx = nodes(Axis::x), ny = nodes(Axis::y);
  Node n;
  n.i = static_cast<int>(idx % nx);
  n.j = static_cast<int>((idx / nx) % ny);
  n.k = static_cast<int>(idx / (nx * ny));
  return n;
}

bool Grid::contains(const Node &n) const
{
  return n.i >= 0 && n.j >= 0 && n.k >= 0 && n.i < nodes(Axis::x) && n.j < nodes(Axis::y) &&
         n.k < nodes(Axis::z);
}

EdgeIndex Grid::edge_index(const Node &n, Axis dir) const
{
  if (!contains(n))
  {
    throw GridError("edge_index: node (" + std::to_string(n.i) + "," + std::to_string(n.j) +
                    "," + std::to_string(n.k) + ") outside the grid");
  }
  return static_cast<EdgeIndex>(3 * node_index(n) + to_int(dir));
}

std::pair<Node, Axis> Grid::edge_of(EdgeIndex e) const
{
  return {node_of(e / 3), static_cast<Axis>(e % 3)};
}

double Grid::primal_edge_len(Axis dir, const Node &n) const
{
  return has_next(n, dir) ? spacing(dir, n[dir]) : 0.0;
}

double Grid::primal_facet_area(Axis dir, const Node &n) const
{
  const Axis u = next_axis(dir), v = prev_axis(dir);
  return primal_edge_len(u, n) * primal_edge_len(v, n);
}

double Grid::dual_edge_len(Axis dir, const Node &n) const
{
  return half_below(dir, n[dir]) + half_above(dir, n[dir]);
}

double Grid::dual_facet_area(Axis dir, const Node &n) const
{
  const Axis u = next_axis(dir), v = prev_axis(dir);
  return (half_below(u, n[u]) + half_above(u, n[u])) * (half_below(v, n[v]) + half_above(v, n[v]));
}

Grid build_grid(std::vector<double> x_planes, std::vector<double> y_planes,
                std::vector<double> z_planes)
{
  return Grid(std::move(x_planes), std::move(y_planes), std::move(z_planes));
}

std::vector<double> uniform_planes(double start, double stop, int cells)
{
  if (cells < 1 || !(stop > start))
  {
    throw GridError("uniform_planes: need cells >= 1 and stop > start");
  }
  std::vector<double> p(cells + 1);
  for (int c = 0; c <= cells; c++)
  {
    p[c] = start + (stop - start) * c / cells;
  }
  p[cells] = stop;
  return p;
}

}  // namespace fitmf
