// SPDX-License-Identifier: Apache-2.0

#include "fitmf/results.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fitmf
{

namespace
{

std::string pair_label(int m, int n, int count)
{
  return count > 9 ? std::to_string(m) + "_" + std::to_string(n)
                   : std::to_string(m) + std::to_string(n);
}

}  // namespace

ResultTable to_table(const SweepResult &result)
{
  ResultTable t;
  const int np = static_cast<int>(result.port_names.size());
  const bool superposed = result.superposed;
  t.columns.push_back("freq_hz");
  if (superposed)
  {
    // One voltage per port path, then one per extra probe.
    const auto nv = result.rows.empty() ? std::size_t(np)
                                        : result.rows.front().probe_voltages.front().size();
    for (std::size_t m = 1; m <= nv; m++)
    {
      t.columns.push_back("re_V" + std::to_string(m));
      t.columns.push_back("im_V" + std::to_string(m));
    }
  }
  else
  {
    for (const char *name : {"Z", "S"})
    {
      for (int m = 1; m <= np; m++)
      {
        for (int n = 1; n <= np; n++)
        {
          t.columns.push_back(std::string("re_") + name + pair_label(m, n, np));
          t.columns.push_back(std::string("im_") + name + pair_label(m, n, np));
        }
      }
    }
  }
  t.columns.insert(t.columns.end(), {"iters", "resid", "wall_s"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto &row : result.rows)
  {
    std::vector<double> r{row.freq_hz};
    if (superposed)
    {
      for (const auto &v : row.probe_voltages.front())
      {
        r.push_back(v.real());
        r.push_back(v.imag());
      }
    }
    else
    {
      for (const CMatrix *mat : {&row.z, &row.s})
      {
        for (int m = 0; m < np; m++)
        {
          for (int n = 0; n < np; n++)
          {
            const bool ok = mat->n == np;
            r.push_back(ok ? (*mat)(m, n).real() : nan);
            r.push_back(ok ? (*mat)(m, n).imag() : nan);
          }
        }
      }
    }
    r.push_back(row.total_iterations());
    r.push_back(row.max_residual());
    r.push_back(row.wall_s);
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_csv(const ResultTable &table, std::ostream &os)
{
  for (std::size_t c = 0; c < table.columns.size(); c++)
  {
    os << (c ? "," : "") << table.columns[c];
  }
  os << '\n';
  char buf[64];
  for (const auto &row : table.rows)
  {
    for (std::size_t c = 0; c < row.size(); c++)
    {
      std::snprintf(buf, sizeof(buf), "%.17e", row[c]);
      os << (c ? "," : "") << buf;
    }
    os << '\n';
  }
}

void write_results(const SweepResult &result, const std::string &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot write results to '" + path + "'");
  }
  write_csv(to_table(result), out);
  if (!out)
  {
    throw std::runtime_error("error while writing '" + path + "'");
  }
}

ResultTable read_csv(std::istream &is)
{
  ResultTable t;
  std::string line;
  if (!std::getline(is, line))
  {
    throw std::runtime_error("csv: missing header");
  }
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ','))
    {
      t.columns.push_back(col);
    }
  }
  while (std::getline(is, line))
  {
    if (line.empty())
    {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
    {
      row.push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (row.size() != t.columns.size())
    {
      throw std::runtime_error("csv: row " + std::to_string(t.rows.size() + 1) + " has " +
                               std::to_string(row.size()) + " fields, header has " +
                               std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ResultTable read_results(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  return read_csv(in);
}

}  // namespace fitmf
