// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_VECTOR_OPS_HPP
#define FITMF_VECTOR_OPS_HPP

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "fitmf/parallel.hpp"

namespace fitmf
{

// Vector kernels over an Exec. Reductions keep one partial per chunk and add the partials
// in chunk order, so the result is bitwise independent of the worker count.
namespace vec
{

template <typename T>
inline T conj_if(const T &v)
{
  if constexpr (std::is_floating_point_v<T>)
  {
    return v;
  }
  else
  {
    return std::conj(v);
  }
}

template <typename T, typename F>
T reduce(const Exec &exec, F &&partial)
{
  std::vector<T> parts(exec.n_chunks(), T(0));
  exec.for_chunks([&](int c, IndexRange r) { parts[c] = partial(r); });
  T sum(0);
  for (const auto &p : parts)
  {
    sum += p;
  }
  return sum;
}

// Unconjugated bilinear form sum x_i y_i.
template <typename T>
T dotu(const Exec &exec, std::span<const T> x, std::span<const T> y)
{
  return reduce<T>(exec,
                   [&](IndexRange r)
                   {
                     T s(0);
                     for (auto i = r.begin; i < r.end; i++)
                     {
                       s += x[i] * y[i];
                     }
                     return s;
                   });
}

// Hermitian inner product sum conj(x_i) y_i.
template <typename T>
T dotc(const Exec &exec, std::span<const T> x, std::span<const T> y)
{
  return reduce<T>(exec,
                   [&](IndexRange r)
                   {
                     T s(0);
                     for (auto i = r.begin; i < r.end; i++)
                     {
                       s += conj_if(x[i]) * y[i];
                     }
                     return s;
                   });
}

template <typename T>
double norm2(const Exec &exec, std::span<const T> x)
{
  return std::sqrt(reduce<double>(exec,
                                  [&](IndexRange r)
                                  {
                                    double s = 0.0;
                                    for (auto i = r.begin; i < r.end; i++)
                                    {
                                      s += std::norm(x[i]);
                                    }
                                    return s;
                                  }));
}

// y += a x
template <typename T>
void axpy(const Exec &exec, T a, std::span<const T> x, std::span<T> y)
{
  exec.for_ranges(
    [&](IndexRange r)
    {
      for (auto i = r.begin; i < r.end; i++)
      {
        y[i] += a * x[i];
      }
    });
}

// y = x + b y
template <typename T>
void xpby(const Exec &exec, std::span<const T> x, T b, std::span<T> y)
{
  exec.for_ranges(
    [&](IndexRange r)
    {
      for (auto i = r.begin; i < r.end; i++)
      {
        y[i] = x[i] + b * y[i];
      }
    });
}

template <typename T>
void scale(const Exec &exec, T a, std::span<T> x)
{
  exec.for_ranges(
    [&](IndexRange r)
    {
      for (auto i = r.begin; i < r.end; i++)
      {
        x[i] *= a;
      }
    });
}

template <typename T>
void copy(const Exec &exec, std::span<const T> x, std::span<T> y)
{
  exec.for_ranges(
    [&](IndexRange r)
    {
      for (auto i = r.begin; i < r.end; i++)
      {
        y[i] = x[i];
      }
    });
}

template <typename T>
void fill(const Exec &exec, T v, std::span<T> x)
{
  exec.for_ranges(
    [&](IndexRange r)
    {
      for (auto i = r.begin; i < r.end; i++)
      {
        x[i] = v;
      }
    });
}

}  // namespace vec

}  // namespace fitmf

#endif  // FITMF_VECTOR_OPS_HPP
