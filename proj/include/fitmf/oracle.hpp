// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_ORACLE_HPP
#define FITMF_ORACLE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fitmf/grid.hpp"
#include "fitmf/materials.hpp"
#include "fitmf/scene.hpp"

namespace fitmf
{

//
// Brute-force reference implementations used by the tests and the eig command. Nothing
// here shares code with the sparse path: facet loops are walked geometrically, material
// averages are quadratures over coordinates with point location, and the PEC mask is
// found by probing cells around each edge.
//

class OracleError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDenseGuard = 4000;

// One signed edge of a facet boundary.
struct LoopEdge
{
  EdgeIndex edge;
  int sign;
};

// Boundary of facet (n, w) walked counter-clockwise around w: n -> n+u -> n+u+v -> n+v.
// An edge is listed when its tail node exists, so facets on the maximal planes keep the
// part of the loop that starts inside the grid.
std::vector<LoopEdge> facet_loop(const Grid &grid, const Node &n, Axis w);

// Dense incidence matrices, n_e x n_e and n_e x n_nodes.
Eigen::MatrixXd dense_curl(const Grid &grid, std::size_t guard = kDenseGuard);
Eigen::MatrixXd dense_gradient(const Grid &grid, std::size_t guard = kDenseGuard);

// Reference material matrices, indexed like edges.
std::vector<Complex> oracle_permittivity(const Grid &grid, const MaterialMap &map,
                                         double omega = 0.0);
std::vector<Complex> oracle_inv_permeability(const Grid &grid, const MaterialMap &map);
std::vector<std::uint8_t> oracle_mask(const Grid &grid, const MaterialMap &map,
                                      const Walls &walls);

// Dense A on the unmasked edges plus the map back to the full edge space.
struct DenseSystem
{
  Eigen::MatrixXcd a;
  std::vector<EdgeIndex> index;        // dense row -> edge
  std::vector<std::int64_t> position;  // edge -> dense row, -1 when masked
  bool lossless = true;

  std::size_t size() const { return index.size(); }
  std::size_t full_size() const { return position.size(); }
  Eigen::MatrixXd real() const { return a.real(); }
};

DenseSystem dense_assemble(const Grid &grid, const MaterialMap &map, const Walls &walls,
                           double omega = 0.0, std::size_t guard = kDenseGuard);
DenseSystem dense_assemble(const SceneModel &model, double omega = 0.0,
                           std::size_t guard = kDenseGuard);

// (A - omega^2) x in the full space; masked entries of x are ignored and of y are zero.
std::vector<Complex> dense_apply(const DenseSystem &sys, double omega,
                                 std::span<const Complex> x);
// Solves (A - omega^2) x = b by LU.
std::vector<Complex> dense_solve(const DenseSystem &sys, double omega,
                                 std::span<const Complex> b);
// diag(A) scattered to the full space.
std::vector<Complex> dense_diagonal(const DenseSystem &sys);
// Ascending eigenvalues (rad^2/s^2) of a lossless system.
std::vector<double> dense_eigenvalues(const DenseSystem &sys);

// Orthonormal basis (rows = unmasked edges in index order) of the discrete gradients that
// vanish on every masked edge of positive length. Potentials may be non-zero on masked
// nodes, so floating conductors and PMC-bounded regions contribute their constants.
Eigen::MatrixXd gradient_null_basis(const Grid &grid, const std::vector<std::uint8_t> &mask,
                                    std::size_t guard = kDenseGuard);

struct CavityEigenvalue
{
  int m = 0, n = 0, p = 0;
  double continuous = 0.0;  // omega^2
  double discrete = 0.0;    // omega^2 with the second-order grid dispersion
};

// Rectangular vacuum PEC cavity of size a x b x c with uniform steps. Each triple needs at
// least two non-zero indices.
std::vector<CavityEigenvalue>
analytic_cavity_eigenvalues(double a, double b, double c, double dx, double dy, double dz,
                            const std::vector<std::array<int, 3>> &modes);

// Every non-zero discrete eigenvalue of the nx x ny x nz cell cavity, ascending, repeated
// by multiplicity (two polarizations when all indices are non-zero).
std::vector<double> discrete_cavity_spectrum(double a, double b, double c, int nx, int ny,
                                             int nz);

}  // namespace fitmf

#endif  // FITMF_ORACLE_HPP
