// SPDX-License-Identifier: Apache-2.0

#include "fitmf/materials.hpp"

#include <cmath>
#include <stdexcept>

namespace fitmf
{

MaterialMap MaterialMap::vacuum(const Grid &grid)
{
  MaterialMap m;
  m.nx = grid.nx();
  m.ny = grid.ny();
  m.nz = grid.nz();
  const auto n = static_cast<std::size_t>(grid.num_cells());
  m.eps_r.assign(n, 1.0);
  m.mu_r.assign(n, 1.0);
  m.sigma.assign(n, 0.0);
  m.pec.assign(n, 0);
  return m;
}

bool MaterialMap::lossless() const
{
  for (std::size_t c = 0; c < num_cells(); c++)
  {
    if (eps_r[c].imag() != 0.0 || mu_r[c].imag() != 0.0 || sigma[c] != 0.0)
    {
      return false;
    }
  }
  return true;
}

bool MaterialMap::has_conductivity() const
{
  for (double s : sigma)
  {
    if (s != 0.0)
    {
      return true;
    }
  }
  return false;
}

void MaterialMap::validate() const
{
  const std::size_t n = std::size_t(nx) * ny * nz;
  if (eps_r.size() != n || mu_r.size() != n || sigma.size() != n || pec.size() != n)
  {
    throw std::invalid_argument("material map: array sizes do not match the cell count");
  }
  for (std::size_t c = 0; c < n; c++)
  {
    if (!pec[c] && eps_r[c].real() < 1.0)
    {
      throw std::invalid_argument("material map: Re(eps_r) < 1 in cell " + std::to_string(c));
    }
    if (mu_r[c] == Complex(0.0))
    {
      throw std::invalid_argument("material map: mu_r = 0 in cell " + std::to_string(c));
    }
    if (sigma[c] < 0.0)
    {
      throw std::invalid_argument("material map: negative conductivity in cell " +
                                  std::to_string(c));
    }
  }
}

namespace
{

// Cell with per-axis indices given as a Node-like triple.
std::size_t cell_at(const MaterialMap &map, const Node &c)
{
  return map.cell(c.i, c.j, c.k);
}

Complex permittivity(const MaterialMap &map, std::size_t c, double omega)
{
  Complex eps = kEps0 * map.eps_r[c];
  if (map.sigma[c] != 0.0)
  {
    if (!(omega > 0.0))
    {
      throw std::invalid_argument("conductive material needs omega > 0");
    }
    eps -= Complex(0.0, map.sigma[c] / omega);
  }
  return eps;
}

}  // namespace

std::vector<Complex> average_permittivity(const Grid &grid, const MaterialMap &map,
                                          double omega)
{
  std::vector<Complex> out(grid.num_edges(), 0.0);
  for (std::int64_t p = 0; p < grid.num_nodes(); p++)
  {
    const Node n = grid.node_of(p);
    for (Axis w : kAxes)
    {
      if (grid.is_degenerate_edge(n, w))
      {
        continue;
      }
      const Axis u = next_axis(w), v = prev_axis(w);
      // Quarter facets: cell offsets -1/0 along u and v.
      Complex integral = 0.0;
      for (int du = -1; du <= 0; du++)
      {
        const double hu = du < 0 ? grid.half_below(u, n[u]) : grid.half_above(u, n[u]);
        if (hu == 0.0)
        {
          continue;
        }
        for (int dv = -1; dv <= 0; dv++)
        {
          const double hv = dv < 0 ? grid.half_below(v, n[v]) : grid.half_above(v, n[v]);
          if (hv == 0.0)
          {
            continue;
          }
          Node c = n;
          c[u] += du;
          c[v] += dv;
          integral += hu * hv * permittivity(map, cell_at(map, c), omega);
        }
      }
      out[grid.edge_index(n, w)] = integral / grid.primal_edge_len(w, n);
    }
  }
  return out;
}

std::vector<Complex> average_permeability(const Grid &grid, const MaterialMap &map)
{
  std::vector<Complex> out(grid.num_edges(), 0.0);
  for (std::int64_t p = 0; p < grid.num_nodes(); p++)
  {
    const Node n = grid.node_of(p);
    for (Axis w : kAxes)
    {
      if (grid.is_degenerate_facet(n, w))
      {
        continue;
      }
      // Line integral of mu along the two dual half edges.
      Complex integral = 0.0;
      if (const double h = grid.half_below(w, n[w]); h > 0.0)
      {
        Node c = n;
        c[w] -= 1;
        integral += h * kMu0 * map.mu_r[cell_at(map, c)];
      }
      if (const double h = grid.half_above(w, n[w]); h > 0.0)
      {
        integral += h * kMu0 * map.mu_r[cell_at(map, n)];
      }
      const double len = grid.dual_edge_len(w, n);
      // L~ / (mu_mean * A) with mu_mean = integral / L~.
      out[grid.edge_index(n, w)] = len * len / (integral * grid.primal_facet_area(w, n));
    }
  }
  return out;
}

std::vector<std::uint8_t> boundary_mask(const Grid &grid, const MaterialMap &map,
                                        const Walls &walls)
{
  std::vector<std::uint8_t> mask(grid.num_edges(), 0);
  const std::array<Face, 3> lo{Face::xmin, Face::ymin, Face::zmin};
  const std::array<Face, 3> hi{Face::xmax, Face::ymax, Face::zmax};
  for (std::int64_t p = 0; p < grid.num_nodes(); p++)
  {
    const Node n = grid.node_of(p);
    for (Axis w : kAxes)
    {
      const auto e = grid.edge_index(n, w);
      if (grid.is_degenerate_edge(n, w))
      {
        mask[e] = 1;
        continue;
      }
      bool masked = false;
      for (Axis t : {next_axis(w), prev_axis(w)})
      {
        if ((n[t] == 0 && walls[lo[to_int(t)]] == WallBC::pec) ||
            (n[t] == grid.cells(t) && walls[hi[to_int(t)]] == WallBC::pec))
        {
          masked = true;
        }
      }
      // Edges bounding a PEC cell.
      const Axis u = next_axis(w), v = prev_axis(w);
      for (int du = -1; du <= 0 && !masked; du++)
      {
        for (int dv = -1; dv <= 0 && !masked; dv++)
        {
          Node c = n;
          c[u] += du;
          c[v] += dv;
          if (c[u] < 0 || c[v] < 0 || c[u] >= grid.cells(u) || c[v] >= grid.cells(v))
          {
            continue;
          }
          masked = map.pec[cell_at(map, c)] != 0;
        }
      }
      mask[e] = masked ? 1 : 0;
    }
  }
  return mask;
}

template <typename T>
std::int64_t MaterialDiagonals<T>::masked_count() const
{
  std::int64_t count = 0;
  for (auto m : edge_mask)
  {
    count += m;
  }
  return count;
}

MaterialDiagonals<Complex> material_diagonals(const Grid &grid, const MaterialMap &map,
                                              double omega)
{
  map.validate();
  if (map.nx != grid.nx() || map.ny != grid.ny() || map.nz != grid.nz())
  {
    throw std::invalid_argument("material map does not match grid dimensions");
  }
  const auto eps = average_permittivity(grid, map, omega);
  const auto inv_mu = average_permeability(grid, map);
  MaterialDiagonals<Complex> d;
  const auto ne = eps.size();
  d.inv_sqrt_eps.assign(ne, 0.0);
  d.inv_sqrt_mu.assign(ne, 0.0);
  d.edge_mask.assign(ne, 0);
  for (std::size_t e = 0; e < ne; e++)
  {
    if (eps[e] != Complex(0.0))
    {
      d.inv_sqrt_eps[e] = 1.0 / std::sqrt(eps[e]);
    }
    else
    {
      d.edge_mask[e] = 1;
    }
    d.inv_sqrt_mu[e] = std::sqrt(inv_mu[e]);
  }
  return d;
}

template <typename T>
void apply_boundary_mask(MaterialDiagonals<T> &diag, const Grid &grid, const MaterialMap &map,
                         const Walls &walls)
{
  const auto mask = boundary_mask(grid, map, walls);
  if (diag.edge_mask.size() != mask.size())
  {
    diag.edge_mask.assign(mask.size(), 0);
  }
  for (std::size_t e = 0; e < mask.size(); e++)
  {
    if (mask[e])
    {
      diag.inv_sqrt_eps[e] = T(0);
      diag.edge_mask[e] = 1;
    }
  }
}

template <typename T>
MaterialDiagonals<T> build_diagonals(const Grid &grid, const MaterialMap &map,
                                     const Walls &walls, double omega)
{
  auto full = material_diagonals(grid, map, omega);
  apply_boundary_mask(full, grid, map, walls);
  if constexpr (std::is_same_v<T, Complex>)
  {
    return full;
  }
  else
  {
    if (!map.lossless())
    {
      throw std::invalid_argument("real diagonals requested for a lossy material map");
    }
    MaterialDiagonals<double> d;
    d.edge_mask = std::move(full.edge_mask);
    d.inv_sqrt_eps.resize(full.inv_sqrt_eps.size());
    d.inv_sqrt_mu.resize(full.inv_sqrt_mu.size());
    for (std::size_t e = 0; e < d.inv_sqrt_eps.size(); e++)
    {
      d.inv_sqrt_eps[e] = full.inv_sqrt_eps[e].real();
      d.inv_sqrt_mu[e] = full.inv_sqrt_mu[e].real();
    }
    return d;
  }
}

namespace
{

template <typename T>
CsrMatrix<T> scale_values(CsrMatrix<double> &&m, const std::vector<T> &row_scale,
                          const std::vector<T> &col_scale)
{
  CsrMatrix<T> out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.row_ptr = std::move(m.row_ptr);
  out.col_idx = std::move(m.col_idx);
  if constexpr (std::is_same_v<T, double>)
  {
    out.values = std::move(m.values);
  }
  else
  {
    out.values.assign(m.values.begin(), m.values.end());
    m.values.clear();
    m.values.shrink_to_fit();
  }
  for (std::int32_t r = 0; r < out.n_rows; r++)
  {
    for (std::int32_t p = out.row_ptr[r]; p < out.row_ptr[r + 1]; p++)
    {
      out.values[p] = row_scale[r] * out.values[p] * col_scale[out.col_idx[p]];
    }
  }
  return out;
}

}  // namespace

template <typename T>
SparseOperator<T> scale_curl(SparseOperator<double> curl, const MaterialDiagonals<T> &diag,
                             std::int64_t *mults)
{
  if (diag.inv_sqrt_mu.size() != std::size_t(curl.n_rows()) ||
      diag.inv_sqrt_eps.size() != std::size_t(curl.n_cols()))
  {
    throw DimensionError("scale_curl: diagonal length does not match the curl");
  }
  SparseOperator<T> out;
  const std::int64_t nnz = curl.matrix.nnz();
  out.matrix = scale_values(std::move(curl.matrix), diag.inv_sqrt_mu, diag.inv_sqrt_eps);
  if (curl.transposed)
  {
    out.transposed =
      scale_values(std::move(*curl.transposed), diag.inv_sqrt_eps, diag.inv_sqrt_mu);
  }
  if (mults)
  {
    *mults += 2 * nnz;
  }
  return out;
}

template struct MaterialDiagonals<double>;
template struct MaterialDiagonals<Complex>;
template void apply_boundary_mask(MaterialDiagonals<double> &, const Grid &,
                                  const MaterialMap &, const Walls &);
template void apply_boundary_mask(MaterialDiagonals<Complex> &, const Grid &,
                                  const MaterialMap &, const Walls &);
template MaterialDiagonals<double> build_diagonals(const Grid &, const MaterialMap &,
                                                  const Walls &, double);
template MaterialDiagonals<Complex> build_diagonals(const Grid &, const MaterialMap &,
                                                   const Walls &, double);
template SparseOperator<double> scale_curl(SparseOperator<double>,
                                           const MaterialDiagonals<double> &,
                                           std::int64_t *);
template SparseOperator<Complex> scale_curl(SparseOperator<double>,
                                            const MaterialDiagonals<Complex> &,
                                            std::int64_t *);

}  // namespace fitmf
