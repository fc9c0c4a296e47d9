// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <random>
#include <sstream>

#include "fitmf/oracle.hpp"
#include "fitmf/topology.hpp"
#include "test_util.hpp"

using namespace fitmf;

namespace
{

// Exact product C*G with integer accumulators.
std::int64_t max_abs_curl_grad(const Grid &g)
{
  const auto c = build_curl(g).matrix;
  const auto gr = build_gradient(g).matrix;
  std::int64_t worst = 0;
  std::vector<std::int64_t> row(g.num_nodes(), 0);
  for (std::int32_t r = 0; r < c.n_rows; r++)
  {
    std::fill(row.begin(), row.end(), 0);
    for (auto p = c.row_ptr[r]; p < c.row_ptr[r + 1]; p++)
    {
      const auto e = c.col_idx[p];
      const auto ce = static_cast<std::int64_t>(c.values[p]);
      for (auto q = gr.row_ptr[e]; q < gr.row_ptr[e + 1]; q++)
      {
        row[gr.col_idx[q]] += ce * static_cast<std::int64_t>(gr.values[q]);
      }
    }
    for (auto v : row)
    {
      worst = std::max(worst, std::abs(v));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("z facet of a single cell follows the right-hand rule")
{
  const Grid g({0, 1}, {0, 1}, {0, 1});
  const auto c = build_curl(g).matrix;
  const auto row = g.edge_index({0, 0, 0}, Axis::z);
  CHECK(c.row_nnz(row) == 4);
  CHECK(c.coeff(row, g.edge_index({0, 0, 0}, Axis::x)) == 1.0);
  CHECK(c.coeff(row, g.edge_index({0, 1, 0}, Axis::x)) == -1.0);
  CHECK(c.coeff(row, g.edge_index({0, 0, 0}, Axis::y)) == -1.0);
  CHECK(c.coeff(row, g.edge_index({1, 0, 0}, Axis::y)) == 1.0);
}

TEST_CASE("curl rows hold 0, 2, 3 or 4 entries of +-1")
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; trial++)
  {
    std::uniform_int_distribution<int> n(1, 4);
    const Grid g = test::random_grid(rng, n(rng), n(rng), n(rng));
    const auto c = build_curl(g).matrix;
    CHECK_NOTHROW(c.validate());
    CHECK(c.n_rows == g.num_edges());
    CHECK(c.n_cols == g.num_edges());
    CHECK(c.nnz() <= 4 * g.num_edges());
    for (std::int32_t r = 0; r < c.n_rows; r++)
    {
      const int k = c.row_nnz(r);
      CHECK((k == 0 || k == 2 || k == 3 || k == 4));
    }
    for (double v : c.values)
    {
      CHECK((v == 1.0 || v == -1.0));
    }
  }
}

TEST_CASE("15x10x10 curl is block banded with bandwidth of one node layer")
{
  const Grid g(uniform_planes(0, 1, 15), uniform_planes(0, 1, 10), uniform_planes(0, 1, 10));
  const auto c = build_curl(g).matrix;
  std::int64_t band = 0;
  for (std::int32_t r = 0; r < c.n_rows; r++)
  {
    for (auto p = c.row_ptr[r]; p < c.row_ptr[r + 1]; p++)
    {
      band = std::max<std::int64_t>(band, std::abs(c.col_idx[p] - r));
    }
  }
  // Partner edges are one node step away along x, y or z. The z step spans one layer plus
  // the offset between the facet component and the edge component (at most 2).
  CHECK(band > 3 * 16);
  CHECK(band <= g.layer_size() + 2);
}

TEST_CASE("gradient of a single cell")
{
  const Grid g({0, 1}, {0, 1}, {0, 1});
  const auto gr = build_gradient(g).matrix;
  CHECK(gr.n_rows == 24);
  CHECK(gr.n_cols == 8);
  const auto row = g.edge_index({0, 0, 0}, Axis::x);
  CHECK(gr.row_nnz(row) == 2);
  CHECK(gr.coeff(row, g.node_index({1, 0, 0})) == 1.0);
  CHECK(gr.coeff(row, g.node_index({0, 0, 0})) == -1.0);
}

TEST_CASE("curl of gradient vanishes exactly")
{
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> n(1, 5);
  for (int trial = 0; trial < 25; trial++)
  {
    const Grid g = test::random_grid(rng, n(rng), n(rng), n(rng));
    CHECK(max_abs_curl_grad(g) == 0);
  }
}

TEST_CASE("random integer potential on 3x3x3 cells has zero curl of gradient")
{
  std::mt19937_64 rng(23);
  const Grid g = test::random_grid(rng, 3, 3, 3);
  std::uniform_int_distribution<int> d(-1000, 1000);
  std::vector<double> phi(g.num_nodes());
  for (auto &p : phi)
  {
    p = d(rng);
  }
  std::vector<double> e(g.num_edges()), f(g.num_edges());
  spmv<double, double>(build_gradient(g), phi, e);
  spmv<double, double>(build_curl(g), e, f);
  for (double v : f)
  {
    CHECK(v == 0.0);
  }
}

TEST_CASE("spmv of the curl against the dense loop oracle")
{
  const Grid g(uniform_planes(0, 1, 2), {0, 0.5, 2}, {0, 1, 1.5});
  const auto c = build_curl(g);
  const Eigen::MatrixXd dense = dense_curl(g);
  std::vector<double> x(g.num_edges(), 0.0), y(g.num_edges());
  spmv<double, double>(c, x, y);
  for (double v : y)
  {
    CHECK(v == 0.0);
  }
  for (std::int64_t e = 0; e < g.num_edges(); e++)
  {
    std::fill(x.begin(), x.end(), 0.0);
    x[e] = 1.0;
    spmv<double, double>(c, x, y);
    int nz = 0;
    for (std::int64_t r = 0; r < g.num_edges(); r++)
    {
      CHECK(y[r] == dense(r, e));
      nz += y[r] != 0.0;
    }
    // An edge bounds at most four facets.
    CHECK(nz <= 4);
  }
}

TEST_CASE("transpose product is the adjoint")
{
  std::mt19937_64 rng(29);
  const Grid g = test::random_grid(rng, 4, 3, 5);
  auto c = build_curl(g);
  const auto n = static_cast<std::size_t>(g.num_edges());
  const auto x = test::random_vector<double>(rng, n);
  const auto y = test::random_vector<double>(rng, n);
  std::vector<double> cx(n), cty(n);
  spmv<double, double>(c, x, cx);
  spmv_transpose<double, double>(c, y, cty);
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; i++)
  {
    lhs += cx[i] * y[i];
    rhs += x[i] * cty[i];
    scale += std::abs(cx[i] * y[i]);
  }
  CHECK(std::abs(lhs - rhs) <= 1e-13 * scale);

  // Scatter (no stored transpose) and gather agree bitwise on integer data.
  std::uniform_int_distribution<int> d(-50, 50);
  std::vector<double> yi(n);
  for (auto &v : yi)
  {
    v = d(rng);
  }
  std::vector<double> scatter(n), gather(n), explicit_t(n);
  spmv_transpose<double, double>(c, yi, scatter);
  c.materialize_transpose();
  spmv_transpose<double, double>(c, yi, gather);
  spmv<double, double>(transpose(c.matrix), yi, explicit_t);
  CHECK(scatter == gather);
  CHECK(gather == explicit_t);
}

TEST_CASE("parallel spmv matches serial bitwise")
{
  std::mt19937_64 rng(31);
  const Grid g = test::random_grid(rng, 6, 5, 7);
  auto c = build_curl(g);
  c.materialize_transpose();
  const auto n = static_cast<std::size_t>(g.num_edges());
  const auto x = test::random_vector<Complex>(rng, n);
  std::vector<Complex> y1(n), y2(n), t1(n), t2(n);
  spmv<double, Complex>(c, x, y1);
  spmv_transpose<double, Complex>(c, x, t1);
  WorkerPool pool(3);
  const Exec ex = Exec::serial(g.num_edges(), g.layer_size()).with_pool(&pool);
  spmv<double, Complex>(c, x, y2, &ex);
  spmv_transpose<double, Complex>(c, x, t2, &ex);
  CHECK(y1 == y2);
  CHECK(t1 == t2);
}

TEST_CASE("dimension mismatch is an error")
{
  const Grid g({0, 1}, {0, 1}, {0, 1});
  const auto c = build_curl(g);
  std::vector<double> x(23), y(24);
  CHECK_THROWS_AS((spmv<double, double>(c, x, y)), DimensionError);
  CHECK_THROWS_AS((spmv_transpose<double, double>(c, y, x)), DimensionError);
}

TEST_CASE("curl memory follows the CSR byte model")
{
  const Grid g(uniform_planes(0, 1, 4), uniform_planes(0, 1, 4), uniform_planes(0, 1, 4));
  const auto c = build_curl(g).matrix;
  CHECK(c.bytes() == (4 + 8) * c.nnz() + 4 * (g.num_edges() + 1));
}

TEST_CASE("matrix market export")
{
  const Grid g({0, 1}, {0, 1}, {0, 1});
  std::ostringstream os;
  write_matrix_market(build_curl(g).matrix, os);
  const std::string text = os.str();
  CHECK(text.rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
  CHECK(text.find("24 24 ") != std::string::npos);
}
