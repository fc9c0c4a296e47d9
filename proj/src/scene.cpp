// SPDX-License-Identifier: Apache-2.0

#include "fitmf/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fitmf
{

using json = nlohmann::json;

bool Scene::operator==(const Scene &o) const
{
  return planes == o.planes && walls.face == o.walls.face && blocks == o.blocks &&
         ports == o.ports && probes == o.probes && z0 == o.z0 && sweep == o.sweep;
}

namespace
{

const std::array<const char *, 6> kFaceNames = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
const std::array<const char *, 3> kAxisNames = {"x", "y", "z"};

[[noreturn]] void fail(const std::string &field, const std::string &msg)
{
  throw SceneError("scene: " + field + ": " + msg);
}

void check_keys(const json &obj, const std::string &field, std::initializer_list<const char *> allowed)
{
  if (!obj.is_object())
  {
    fail(field, "expected an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it)
  {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char *k) { return it.key() == k; }))
    {
      fail(field.empty() ? it.key() : field + "." + it.key(), "unknown key");
    }
  }
}

double get_number(const json &j, const std::string &field)
{
  if (!j.is_number())
  {
    fail(field, std::string("expected a number, got ") + j.type_name());
  }
  return j.get<double>();
}

int get_int(const json &j, const std::string &field)
{
  if (!j.is_number_integer())
  {
    fail(field, std::string("expected an integer, got ") + j.type_name());
  }
  return j.get<int>();
}

Complex get_complex(const json &j, const std::string &field)
{
  if (j.is_number())
  {
    return j.get<double>();
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
  {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  fail(field, "expected a number or [re, im]");
}

std::vector<double> get_planes(const json &j, const std::string &field)
{
  if (j.is_array())
  {
    std::vector<double> p;
    for (std::size_t i = 0; i < j.size(); i++)
    {
      p.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
    }
    return p;
  }
  if (j.is_object())
  {
    check_keys(j, field, {"start", "stop", "cells"});
    if (!j.contains("start") || !j.contains("stop") || !j.contains("cells"))
    {
      fail(field, "uniform axis needs start, stop and cells");
    }
    const int cells = get_int(j["cells"], field + ".cells");
    try
    {
      return uniform_planes(get_number(j["start"], field + ".start"),
                            get_number(j["stop"], field + ".stop"), cells);
    }
    catch (const GridError &e)
    {
      fail(field, e.what());
    }
  }
  fail(field, "expected a list of planes or {start, stop, cells}");
}

std::array<double, 3> get_point(const json &j, const std::string &field)
{
  if (!j.is_array() || j.size() != 3)
  {
    fail(field, "expected [x, y, z]");
  }
  return {get_number(j[0], field + "[0]"), get_number(j[1], field + "[1]"),
          get_number(j[2], field + "[2]")};
}

WallBC get_wall(const json &j, const std::string &field)
{
  if (!j.is_string())
  {
    fail(field, "expected \"pec\" or \"pmc\"");
  }
  std::string s = j.get<std::string>();
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "pec")
  {
    return WallBC::pec;
  }
  if (s == "pmc")
  {
    return WallBC::pmc;
  }
  fail(field, "unknown wall condition '" + j.get<std::string>() + "'");
}

PathSpec get_path(const json &j, const std::string &field, bool with_current)
{
  if (with_current)
  {
    check_keys(j, field, {"name", "path", "current"});
  }
  else
  {
    check_keys(j, field, {"name", "path"});
  }
  PathSpec p;
  if (j.contains("name"))
  {
    if (!j["name"].is_string())
    {
      fail(field + ".name", "expected a string");
    }
    p.name = j["name"].get<std::string>();
  }
  if (!j.contains("path") || !j["path"].is_array())
  {
    fail(field + ".path", "expected a list of [i, j, k] node indices");
  }
  const auto &path = j["path"];
  for (std::size_t s = 0; s < path.size(); s++)
  {
    const std::string f = field + ".path[" + std::to_string(s) + "]";
    if (!path[s].is_array() || path[s].size() != 3)
    {
      fail(f, "expected [i, j, k]");
    }
    p.path.push_back({get_int(path[s][0], f + "[0]"), get_int(path[s][1], f + "[1]"),
                      get_int(path[s][2], f + "[2]")});
  }
  if (with_current && j.contains("current"))
  {
    p.current = get_complex(j["current"], field + ".current");
  }
  return p;
}

json complex_json(Complex c)
{
  return json::array({c.real(), c.imag()});
}

json path_json(const PathSpec &p, bool with_current)
{
  json nodes = json::array();
  for (const auto &n : p.path)
  {
    nodes.push_back({n.i, n.j, n.k});
  }
  json j = {{"name", p.name}, {"path", nodes}};
  if (with_current)
  {
    j["current"] = complex_json(p.current);
  }
  return j;
}

}  // namespace

Scene parse_scene_text(const std::string &text)
{
  json root;
  try
  {
    root = json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    throw SceneError(std::string("scene: malformed JSON: ") + e.what());
  }
  check_keys(root, "", {"grid", "walls", "materials", "ports", "probes", "z0", "sweep"});
  Scene scene;
  if (!root.contains("grid"))
  {
    fail("grid", "missing");
  }
  check_keys(root["grid"], "grid", {"x", "y", "z"});
  for (int a = 0; a < 3; a++)
  {
    const std::string f = std::string("grid.") + kAxisNames[a];
    if (!root["grid"].contains(kAxisNames[a]))
    {
      fail(f, "missing");
    }
    scene.planes[a] = get_planes(root["grid"][kAxisNames[a]], f);
  }
  if (root.contains("walls"))
  {
    const auto &w = root["walls"];
    if (w.is_string())
    {
      scene.walls = Walls::all(get_wall(w, "walls"));
    }
    else
    {
      check_keys(w, "walls", {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"});
      for (int f = 0; f < 6; f++)
      {
        if (w.contains(kFaceNames[f]))
        {
          scene.walls.face[f] = get_wall(w[kFaceNames[f]], std::string("walls.") + kFaceNames[f]);
        }
      }
    }
  }
  if (root.contains("materials"))
  {
    const auto &mats = root["materials"];
    if (!mats.is_array())
    {
      fail("materials", "expected a list");
    }
    for (std::size_t b = 0; b < mats.size(); b++)
    {
      const std::string f = "materials[" + std::to_string(b) + "]";
      const auto &m = mats[b];
      check_keys(m, f, {"name", "box", "eps_r", "mu_r", "sigma", "pec"});
      MaterialBlock blk;
      blk.name = m.contains("name") && m["name"].is_string() ? m["name"].get<std::string>()
                                                              : "block" + std::to_string(b);
      if (!m.contains("box"))
      {
        fail(f + ".box", "missing");
      }
      check_keys(m["box"], f + ".box", {"min", "max"});
      if (!m["box"].contains("min") || !m["box"].contains("max"))
      {
        fail(f + ".box", "needs min and max");
      }
      blk.lo = get_point(m["box"]["min"], f + ".box.min");
      blk.hi = get_point(m["box"]["max"], f + ".box.max");
      if (m.contains("eps_r"))
      {
        blk.eps_r = get_complex(m["eps_r"], f + ".eps_r");
      }
      if (m.contains("mu_r"))
      {
        blk.mu_r = get_complex(m["mu_r"], f + ".mu_r");
      }
      if (m.contains("sigma"))
      {
        blk.sigma = get_number(m["sigma"], f + ".sigma");
      }
      if (m.contains("pec"))
      {
        if (!m["pec"].is_boolean())
        {
          fail(f + ".pec", std::string("expected a boolean, got ") + m["pec"].type_name());
        }
        blk.pec = m["pec"].get<bool>();
      }
      if (!blk.pec && blk.eps_r.real() < 1.0)
      {
        fail(f + ".eps_r", "real part must be >= 1");
      }
      if (blk.mu_r == Complex(0.0))
      {
        fail(f + ".mu_r", "must be non-zero");
      }
      if (blk.sigma < 0.0)
      {
        fail(f + ".sigma", "must be >= 0");
      }
      scene.blocks.push_back(blk);
    }
  }
  for (const char *key : {"ports", "probes"})
  {
    if (!root.contains(key))
    {
      continue;
    }
    if (!root[key].is_array())
    {
      fail(key, "expected a list");
    }
    const bool is_port = std::string(key) == "ports";
    for (std::size_t p = 0; p < root[key].size(); p++)
    {
      auto spec = get_path(root[key][p], std::string(key) + "[" + std::to_string(p) + "]", is_port);
      if (spec.name.empty())
      {
        spec.name = (is_port ? "P" : "probe") + std::to_string(p + 1);
      }
      (is_port ? scene.ports : scene.probes).push_back(std::move(spec));
    }
  }
  if (root.contains("z0"))
  {
    scene.z0 = get_number(root["z0"], "z0");
    if (!(scene.z0 > 0.0))
    {
      fail("z0", "must be positive");
    }
  }
  if (root.contains("sweep"))
  {
    const auto &s = root["sweep"];
    check_keys(s, "sweep", {"fmin", "fmax", "nf"});
    SweepDefaults d;
    if (!s.contains("fmin") || !s.contains("fmax"))
    {
      fail("sweep", "needs fmin and fmax");
    }
    d.fmin = get_number(s["fmin"], "sweep.fmin");
    d.fmax = get_number(s["fmax"], "sweep.fmax");
    d.nf = s.contains("nf") ? get_int(s["nf"], "sweep.nf") : 1;
    scene.sweep = d;
  }
  return scene;
}

Scene parse_scene(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw SceneError("scene: cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_text(ss.str());
}

std::string scene_to_json(const Scene &scene)
{
  json root;
  for (int a = 0; a < 3; a++)
  {
    root["grid"][kAxisNames[a]] = scene.planes[a];
  }
  for (int f = 0; f < 6; f++)
  {
    root["walls"][kFaceNames[f]] = scene.walls.face[f] == WallBC::pec ? "pec" : "pmc";
  }
  root["materials"] = json::array();
  for (const auto &b : scene.blocks)
  {
    root["materials"].push_back({{"name", b.name},
                                 {"box", {{"min", b.lo}, {"max", b.hi}}},
                                 {"eps_r", complex_json(b.eps_r)},
                                 {"mu_r", complex_json(b.mu_r)},
                                 {"sigma", b.sigma},
                                 {"pec", b.pec}});
  }
  root["ports"] = json::array();
  for (const auto &p : scene.ports)
  {
    root["ports"].push_back(path_json(p, true));
  }
  root["probes"] = json::array();
  for (const auto &p : scene.probes)
  {
    root["probes"].push_back(path_json(p, false));
  }
  root["z0"] = scene.z0;
  if (scene.sweep)
  {
    root["sweep"] = {{"fmin", scene.sweep->fmin}, {"fmax", scene.sweep->fmax}, {"nf", scene.sweep->nf}};
  }
  return root.dump(2);
}

namespace
{

int nearest_plane(const std::vector<double> &planes, double v)
{
  const auto it = std::lower_bound(planes.begin(), planes.end(), v);
  if (it == planes.begin())
  {
    return 0;
  }
  if (it == planes.end())
  {
    return static_cast<int>(planes.size()) - 1;
  }
  const int hi = static_cast<int>(it - planes.begin());
  return (v - planes[hi - 1] <= planes[hi] - v) ? hi - 1 : hi;
}

}  // namespace

SceneModel realize(const Scene &scene)
{
  std::optional<Grid> grid;
  try
  {
    grid.emplace(scene.planes[0], scene.planes[1], scene.planes[2]);
  }
  catch (const GridError &e)
  {
    throw SceneError(std::string("scene: grid: ") + e.what());
  }
  MaterialMap map = MaterialMap::vacuum(*grid);
  std::vector<SnapInfo> snaps;
  for (std::size_t b = 0; b < scene.blocks.size(); b++)
  {
    const auto &blk = scene.blocks[b];
    const std::string f = "materials[" + std::to_string(b) + "]";
    std::array<int, 3> c0{}, c1{};
    for (int a = 0; a < 3; a++)
    {
      const auto &p = grid->planes(static_cast<Axis>(a));
      const double tol = 1e-9 * (p.back() - p.front());
      if (blk.lo[a] < p.front() - tol || blk.hi[a] > p.back() + tol)
      {
        fail(f + ".box", std::string("extends outside the grid along ") + kAxisNames[a]);
      }
      if (!(blk.hi[a] > blk.lo[a]))
      {
        fail(f + ".box", std::string("max must exceed min along ") + kAxisNames[a]);
      }
      c0[a] = nearest_plane(p, blk.lo[a]);
      c1[a] = nearest_plane(p, blk.hi[a]);
      snaps.push_back({blk.name, a, false, blk.lo[a], p[c0[a]]});
      snaps.push_back({blk.name, a, true, blk.hi[a], p[c1[a]]});
      if (c1[a] <= c0[a])
      {
        fail(f + ".box", std::string("collapses to zero thickness along ") + kAxisNames[a] +
                           " after snapping to the grid");
      }
    }
    for (int k = c0[2]; k < c1[2]; k++)
    {
      for (int j = c0[1]; j < c1[1]; j++)
      {
        for (int i = c0[0]; i < c1[0]; i++)
        {
          const auto c = map.cell(i, j, k);
          map.eps_r[c] = blk.pec ? Complex(1.0) : blk.eps_r;
          map.mu_r[c] = blk.mu_r;
          map.sigma[c] = blk.pec ? 0.0 : blk.sigma;
          map.pec[c] = blk.pec ? 1 : 0;
        }
      }
    }
  }
  const auto mask = boundary_mask(*grid, map, scene.walls);
  SceneModel model{*grid, std::move(map), scene.walls, {}, {}, scene.z0, std::move(snaps)};
  std::set<std::string> names;
  for (std::size_t p = 0; p < scene.ports.size(); p++)
  {
    const auto &spec = scene.ports[p];
    const std::string f = "ports[" + std::to_string(p) + "]";
    if (!names.insert(spec.name).second)
    {
      fail(f + ".name", "duplicate port name '" + spec.name + "'");
    }
    Port port{spec.name, {}, spec.current};
    try
    {
      port.segments = trace_path(model.grid, spec.path);
      validate_path(port.segments, mask, f);
    }
    catch (const PortError &e)
    {
      fail(f + ".path", e.what());
    }
    model.ports.push_back(std::move(port));
  }
  for (std::size_t p = 0; p < scene.probes.size(); p++)
  {
    const auto &spec = scene.probes[p];
    Probe probe{spec.name, {}};
    try
    {
      probe.segments = trace_path(model.grid, spec.path);
    }
    catch (const PortError &e)
    {
      fail("probes[" + std::to_string(p) + "].path", e.what());
    }
    model.probes.push_back(std::move(probe));
  }
  return model;
}

}  // namespace fitmf
