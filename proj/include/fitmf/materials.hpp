// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_MATERIALS_HPP
#define FITMF_MATERIALS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fitmf/grid.hpp"
#include "fitmf/topology.hpp"

namespace fitmf
{

inline constexpr double kMu0 = 1.25663706212e-6;     // H/m
inline constexpr double kC0 = 299792458.0;           // m/s
inline constexpr double kEps0 = 1.0 / (kMu0 * kC0 * kC0);  // F/m

enum class WallBC
{
  pec,
  pmc
};

enum class Face : int
{
  xmin = 0,
  xmax,
  ymin,
  ymax,
  zmin,
  zmax
};

struct Walls
{
  std::array<WallBC, 6> face{WallBC::pec, WallBC::pec, WallBC::pec,
                             WallBC::pec, WallBC::pec, WallBC::pec};

  WallBC operator[](Face f) const { return face[static_cast<int>(f)]; }
  WallBC &operator[](Face f) { return face[static_cast<int>(f)]; }
  static Walls all(WallBC bc)
  {
    Walls w;
    w.face.fill(bc);
    return w;
  }
};

//
// Per-cell material description. Relative values are complex; conductivity is folded
// into the permittivity at a given angular frequency as eps_r - j*sigma/(omega*eps0).
//
struct MaterialMap
{
  int nx = 0, ny = 0, nz = 0;
  std::vector<Complex> eps_r;
  std::vector<Complex> mu_r;
  std::vector<double> sigma;
  std::vector<std::uint8_t> pec;

  static MaterialMap vacuum(const Grid &grid);

  std::size_t cell(int ci, int cj, int ck) const
  {
    return std::size_t(ci) + std::size_t(nx) * (std::size_t(cj) + std::size_t(ny) * ck);
  }
  std::size_t num_cells() const { return eps_r.size(); }

  // No imaginary parts and no conductivity anywhere.
  bool lossless() const;
  bool has_conductivity() const;

  // Throws std::invalid_argument when the per-cell invariants fail.
  void validate() const;
};

// Diagonal of M_eps (farads) per edge: mean permittivity over the dual facet times
// dual area / edge length. Degenerate edges get 0. omega is only used when some cell has
// non-zero conductivity.
std::vector<Complex> average_permittivity(const Grid &grid, const MaterialMap &map,
                                          double omega = 0.0);

// Diagonal of M_mu^-1 (1/henry) per facet: dual edge length / (mean permeability along
// the dual edge * facet area). Degenerate facets get 0.
std::vector<Complex> average_permeability(const Grid &grid, const MaterialMap &map);

// Edges forced to zero: tangential to a PEC wall, bounding a PEC cell, or degenerate.
std::vector<std::uint8_t> boundary_mask(const Grid &grid, const MaterialMap &map,
                                        const Walls &walls);

template <typename T>
struct MaterialDiagonals
{
  std::vector<T> inv_sqrt_eps;  // M_eps^-1/2, zero on masked edges
  std::vector<T> inv_sqrt_mu;   // M_mu^-1/2, zero on degenerate facets
  std::vector<std::uint8_t> edge_mask;

  std::size_t size() const { return inv_sqrt_eps.size(); }
  std::int64_t masked_count() const;
};

// Diagonals from raw averages (no PEC mask yet; degenerate edges already zero).
MaterialDiagonals<Complex> material_diagonals(const Grid &grid, const MaterialMap &map,
                                              double omega = 0.0);

// Zeroes inv_sqrt_eps on every edge of boundary_mask() and records the mask.
template <typename T>
void apply_boundary_mask(MaterialDiagonals<T> &diag, const Grid &grid, const MaterialMap &map,
                         const Walls &walls);

// material_diagonals + apply_boundary_mask, converted to T (double requires a lossless map).
template <typename T>
MaterialDiagonals<T> build_diagonals(const Grid &grid, const MaterialMap &map,
                                     const Walls &walls, double omega = 0.0);

// Scales the curl into M_mu^-1/2 * C * M_eps^-1/2, row-wise by inv_sqrt_mu and
// column-wise by inv_sqrt_eps, reusing C's index arrays. An existing transpose is scaled
// consistently. Counts 2 multiplications per stored entry in *mults when given.
template <typename T>
SparseOperator<T> scale_curl(SparseOperator<double> curl, const MaterialDiagonals<T> &diag,
                             std::int64_t *mults = nullptr);

}  // namespace fitmf

#endif  // FITMF_MATERIALS_HPP
