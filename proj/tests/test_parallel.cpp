// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <atomic>
#include <random>

#include "fitmf/parallel.hpp"
#include "fitmf/vector_ops.hpp"

using namespace fitmf;

TEST_CASE("balanced_split gives near-equal contiguous blocks")
{
  const auto r = balanced_split(10, 3);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == IndexRange{0, 4});
  CHECK(r[1] == IndexRange{4, 7});
  CHECK(r[2] == IndexRange{7, 10});

  // More parts than items: trailing parts are empty.
  const auto idle = balanced_split(2, 4);
  CHECK(idle[0].size() == 1);
  CHECK(idle[1].size() == 1);
  CHECK(idle[2].size() == 0);
  CHECK(idle[3].size() == 0);
}

TEST_CASE("worker pool runs every worker once per call")
{
  WorkerPool pool(4);
  std::vector<int> hits(4, 0);
  for (int round = 0; round < 50; round++)
  {
    pool.run([&](int w) { hits[w]++; });
  }
  for (int h : hits)
  {
    CHECK(h == 50);
  }
}

TEST_CASE("chunked executor covers the index space once")
{
  WorkerPool pool(3);
  std::vector<std::int64_t> offsets{0, 5, 9, 20, 21, 40};
  Exec ex(offsets, &pool);
  CHECK(ex.size() == 40);
  CHECK(ex.n_chunks() == 5);
  std::vector<std::atomic<int>> seen(40);
  ex.for_ranges(
    [&](IndexRange r)
    {
      for (auto i = r.begin; i < r.end; i++)
      {
        seen[i]++;
      }
    });
  for (auto &s : seen)
  {
    CHECK(s.load() == 1);
  }
}

TEST_CASE("explicit worker assignment is validated")
{
  std::vector<std::int64_t> offsets{0, 5, 10};
  WorkerPool pool(2);
  CHECK_NOTHROW(Exec(offsets, std::vector<int>{0, 1, 2}, &pool));
  CHECK_THROWS(Exec(offsets, std::vector<int>{0, 2, 1}, &pool));
  CHECK_THROWS(Exec(offsets, std::vector<int>{0, 1}, &pool));
}

TEST_CASE("reductions do not depend on the worker count")
{
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  const std::int64_t n = 10007;
  std::vector<double> x(n), y(n);
  for (auto i = 0; i < n; i++)
  {
    x[i] = d(rng) * std::pow(10.0, d(rng));
    y[i] = d(rng);
  }
  const Exec serial = Exec::serial(n, 1000);
  const double ref = vec::dotu<double>(serial, x, y);
  const double nrm = vec::norm2<double>(serial, x);
  for (int w : {2, 3, 4, 7})
  {
    WorkerPool pool(w);
    const Exec par = serial.with_pool(&pool);
    CHECK(vec::dotu<double>(par, x, y) == ref);
    CHECK(vec::norm2<double>(par, x) == nrm);
  }
}
