// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_RESULTS_HPP
#define FITMF_RESULTS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "fitmf/sweep.hpp"

namespace fitmf
{

// Flat numeric table as written to CSV.
struct ResultTable
{
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  bool operator==(const ResultTable &) const = default;
};

// Columns: freq_hz, re_Z<m><n>, im_Z<m><n> (row-major), re_S.., im_S.., iters, resid,
// wall_s. Superposed sweeps carry re_V<m>, im_V<m> probe voltages instead of Z and S.
// Rows without a network result hold NaN in those columns.
ResultTable to_table(const SweepResult &result);

// Full double precision scientific notation.
void write_csv(const ResultTable &table, std::ostream &os);
void write_results(const SweepResult &result, const std::string &path);
ResultTable read_csv(std::istream &is);
ResultTable read_results(const std::string &path);

}  // namespace fitmf

#endif  // FITMF_RESULTS_HPP
