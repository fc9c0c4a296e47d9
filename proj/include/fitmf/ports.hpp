// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_PORTS_HPP
#define FITMF_PORTS_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fitmf/grid.hpp"
#include "fitmf/materials.hpp"
#include "fitmf/topology.hpp"

namespace fitmf
{

class PortError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// One edge of a path; sign is +1 when the path runs along +dir of the edge.
struct PathSegment
{
  EdgeIndex edge = 0;
  int sign = 1;
  bool operator==(const PathSegment &) const = default;
};

//
// Filamentary discrete port: an impressed current along a connected edge path. The same
// path is used as the default voltage probe.
//
struct Port
{
  std::string name;
  std::vector<PathSegment> segments;
  Complex current = 1.0;
};

struct Probe
{
  std::string name;
  std::vector<PathSegment> segments;
};

// Edge path through a polyline of grid nodes. Consecutive vertices must lie on a common
// grid line; the run between them is split into unit edges.
std::vector<PathSegment> trace_path(const Grid &grid, std::span<const Node> nodes);

// Throws PortError if a segment lies on a masked edge.
void validate_path(std::span<const PathSegment> path, std::span<const std::uint8_t> mask,
                   const std::string &what);

// b = -j*omega * M_eps^-1/2 * i, with the impressed current on the port edges only.
std::vector<Complex> build_rhs(const Port &port, std::span<const Complex> inv_sqrt_eps,
                               double omega);

// Real-valued excitation pattern M_eps^-1/2 * s (s = signed unit current on the path).
// The full right-hand side is (-j*omega*current) times this pattern, so lossless scenes
// solve with it in real arithmetic and scale the solution afterwards.
template <typename T>
std::vector<T> excitation_pattern(std::span<const PathSegment> path,
                                  std::span<const T> inv_sqrt_eps);

// u = sum over segments of sign * (M_eps^-1/2 e')_edge.
template <typename T>
Complex probe_voltage(std::span<const T> e_scaled, std::span<const T> inv_sqrt_eps,
                      std::span<const PathSegment> path);

// Complex square matrix, row-major.
struct CMatrix
{
  int n = 0;
  std::vector<Complex> a;

  CMatrix() = default;
  explicit CMatrix(int size) : n(size), a(std::size_t(size) * size, 0.0) {}
  static CMatrix identity(int size, Complex v = 1.0);
  Complex &operator()(int r, int c) { return a[std::size_t(r) * n + c]; }
  const Complex &operator()(int r, int c) const { return a[std::size_t(r) * n + c]; }
};

//
// Z_mn = -u_mn / i_n, where u_mn is the probe voltage of port m with only port n driven by
// current i_n. The path voltage runs along the impressed current, i.e. opposite to the
// terminal voltage of the source, hence the sign (passive loads get Re Z >= 0).
//
CMatrix z_parameters(const CMatrix &voltages, std::span<const Complex> currents);

// S = (Z - Z0 I)(Z + Z0 I)^-1. Throws when Z + Z0 I is numerically singular.
CMatrix s_from_z(const CMatrix &z, double z0 = 50.0);
// Z = Z0 (I + S)(I - S)^-1.
CMatrix z_from_s(const CMatrix &s, double z0 = 50.0);

}  // namespace fitmf

#endif  // FITMF_PORTS_HPP
