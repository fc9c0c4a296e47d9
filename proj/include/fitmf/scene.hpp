// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_SCENE_HPP
#define FITMF_SCENE_HPP

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fitmf/grid.hpp"
#include "fitmf/materials.hpp"
#include "fitmf/ports.hpp"

namespace fitmf
{

class SceneError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Axis-aligned box; later blocks override earlier ones.
struct MaterialBlock
{
  std::string name;
  std::array<double, 3> lo{}, hi{};
  Complex eps_r = 1.0;
  Complex mu_r = 1.0;
  double sigma = 0.0;
  bool pec = false;
  bool operator==(const MaterialBlock &) const = default;
};

struct PathSpec
{
  std::string name;
  std::vector<Node> path;
  Complex current = 1.0;  // ignored for probes
  bool operator==(const PathSpec &) const = default;
};

struct SweepDefaults
{
  double fmin = 0.0, fmax = 0.0;
  int nf = 1;
  bool operator==(const SweepDefaults &) const = default;
};

//
// Scene description as read from JSON: grid planes (SI metres), material boxes, wall
// conditions, ports and probes given as node-index paths. Frequencies are in Hz.
//
struct Scene
{
  std::array<std::vector<double>, 3> planes;
  Walls walls;
  std::vector<MaterialBlock> blocks;
  std::vector<PathSpec> ports;
  std::vector<PathSpec> probes;
  double z0 = 50.0;
  std::optional<SweepDefaults> sweep;
  bool operator==(const Scene &other) const;
};

// Where a box face landed on the grid.
struct SnapInfo
{
  std::string block;
  int axis = 0;
  bool upper = false;
  double requested = 0.0, snapped = 0.0;
  double distance() const { return snapped > requested ? snapped - requested : requested - snapped; }
};

// Scene with grid, rasterized materials and traced paths.
struct SceneModel
{
  Grid grid;
  MaterialMap materials;
  Walls walls;
  std::vector<Port> ports;
  std::vector<Probe> probes;
  double z0 = 50.0;
  std::vector<SnapInfo> snaps;
};

Scene parse_scene_text(const std::string &text);
Scene parse_scene(const std::string &path);

// Normal form: explicit plane lists, all fields present, complex values as [re, im].
std::string scene_to_json(const Scene &scene);

// Builds the grid, snaps block faces to the nearest planes and rasterizes them in
// declaration order, traces ports/probes and checks that no path runs over a masked edge.
SceneModel realize(const Scene &scene);

}  // namespace fitmf

#endif  // FITMF_SCENE_HPP
