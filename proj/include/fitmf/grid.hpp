// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_GRID_HPP
#define FITMF_GRID_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fitmf
{

enum class Axis : int
{
  x = 0,
  y = 1,
  z = 2
};

inline constexpr std::array<Axis, 3> kAxes = {Axis::x, Axis::y, Axis::z};

constexpr int to_int(Axis a)
{
  return static_cast<int>(a);
}

// The two axes following a in cyclic order (x -> y, z; y -> z, x; z -> x, y).
constexpr Axis next_axis(Axis a)
{
  return static_cast<Axis>((to_int(a) + 1) % 3);
}
constexpr Axis prev_axis(Axis a)
{
  return static_cast<Axis>((to_int(a) + 2) % 3);
}

struct Node
{
  int i = 0, j = 0, k = 0;
  int operator[](Axis a) const { return a == Axis::x ? i : (a == Axis::y ? j : k); }
  int &operator[](Axis a) { return a == Axis::x ? i : (a == Axis::y ? j : k); }
  bool operator==(const Node &) const = default;
};

// Flat index of an edge unknown. Also used for the facet (curl-row) index space, which
// shares the same layout.
using EdgeIndex = std::int32_t;

class GridError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//
// Structured, non-equidistant hexahedral primal grid with its barycentric dual.
//
// Unknowns are interleaved per node: edge (node, dir) has index 3*(i + Nx*j + Nx*Ny*k) +
// dir, so every z node-layer is one contiguous index range. The edge (node, dir) runs from
// the node to its +dir neighbour; edges leaving the grid at the maximal planes are
// degenerate (zero length) and stay in the index space to be masked later. Facet (node,
// dir) is the primal facet normal to dir spanned from the node along the two other axes.
//
class Grid
{
public:
  Grid(std::vector<double> x_planes, std::vector<double> y_planes,
       std::vector<double> z_planes);

  int cells(Axis a) const { return static_cast<int>(planes_[to_int(a)].size()) - 1; }
  int nodes(Axis a) const { return static_cast<int>(planes_[to_int(a)].size()); }
  int nx() const { return cells(Axis::x); }
  int ny() const { return cells(Axis::y); }
  int nz() const { return cells(Axis::z); }
  std::int64_t num_nodes() const { return n_nodes_; }
  std::int64_t num_edges() const { return 3 * n_nodes_; }
  std::int64_t num_cells() const
  {
    return std::int64_t(nx()) * ny() * nz();
  }

  const std::vector<double> &planes(Axis a) const { return planes_[to_int(a)]; }

  // Width of primal cell c along a (0 <= c < cells(a)).
  double spacing(Axis a, int c) const { return spacing_[to_int(a)][c]; }

  std::int64_t node_index(const Node &n) const
  {
    return n.i + std::int64_t(nodes(Axis::x)) * (n.j + std::int64_t(nodes(Axis::y)) * n.k);
  }
  Node node_of(std::int64_t node_index) const;
  bool contains(const Node &n) const;

  EdgeIndex edge_index(const Node &n, Axis dir) const;
  // Inverse of edge_index.
  std::pair<Node, Axis> edge_of(EdgeIndex e) const;

  // Whether the neighbour of n one step along +a exists.
  bool has_next(const Node &n, Axis a) const { return n[a] + 1 < nodes(a); }
  // Degenerate edge: leaves the grid at the maximal plane of its direction.
  bool is_degenerate_edge(const Node &n, Axis dir) const { return !has_next(n, dir); }
  // Degenerate facet: one of its spanning edges is degenerate.
  bool is_degenerate_facet(const Node &n, Axis dir) const
  {
    return !has_next(n, next_axis(dir)) || !has_next(n, prev_axis(dir));
  }

  // Primal metrics; zero for degenerate edges/facets.
  double primal_edge_len(Axis dir, const Node &n) const;
  double primal_facet_area(Axis dir, const Node &n) const;

  // Dual metrics. The dual edge through primal facet (n, dir) joins the barycenters of the
  // adjacent cells; at the boundary only the inner half exists. The dual facet crossed by
  // primal edge (n, dir) is assembled from up to four quarter facets.
  double dual_edge_len(Axis dir, const Node &n) const;
  double dual_facet_area(Axis dir, const Node &n) const;

  // Half of the cell width on the lower (c = n[a]-1) and upper (c = n[a]) side of the
  // node along a, zero where that cell does not exist.
  double half_below(Axis a, int node) const
  {
    return node > 0 ? 0.5 * spacing(a, node - 1) : 0.0;
  }
  double half_above(Axis a, int node) const
  {
    return node < cells(a) ? 0.5 * spacing(a, node) : 0.0;
  }

  double cell_volume(int ci, int cj, int ck) const
  {
    return spacing(Axis::x, ci) * spacing(Axis::y, cj) * spacing(Axis::z, ck);
  }
  double extent(Axis a) const { return planes(a).back() - planes(a).front(); }

  // Unknown index range of node layer k: [3*Nx*Ny*k, 3*Nx*Ny*(k+1)).
  std::int64_t layer_size() const { return 3 * std::int64_t(nodes(Axis::x)) * nodes(Axis::y); }

private:
  std::array<std::vector<double>, 3> planes_;
  std::array<std::vector<double>, 3> spacing_;
  std::int64_t n_nodes_ = 0;
};

// Validates and builds a grid from plane coordinate lists.
Grid build_grid(std::vector<double> x_planes, std::vector<double> y_planes,
                std::vector<double> z_planes);

// Equidistant planes: cells+1 values from start to stop.
std::vector<double> uniform_planes(double start, double stop, int cells);

}  // namespace fitmf

#endif  // FITMF_GRID_HPP
