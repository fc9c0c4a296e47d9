// SPDX-License-Identifier: Apache-2.0

#include "fitmf/parallel.hpp"

#include <stdexcept>

namespace fitmf
{

WorkerPool::WorkerPool(int n_workers) : n_workers_(n_workers)
{
  if (n_workers < 1)
  {
    throw std::invalid_argument("WorkerPool: worker count must be >= 1");
  }
  threads_.reserve(n_workers - 1);
  for (int w = 1; w < n_workers; w++)
  {
    threads_.emplace_back([this, w] { worker_loop(w); });
  }
}

WorkerPool::~WorkerPool()
{
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto &t : threads_)
  {
    t.join();
  }
}

void WorkerPool::worker_loop(int w)
{
  std::uint64_t seen = 0;
  while (true)
  {
    const std::function<void(int)> *task;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_)
      {
        return;
      }
      seen = generation_;
      task = task_;
    }
    (*task)(w);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0)
      {
        done_cv_.notify_one();
      }
    }
  }
}

void WorkerPool::run(const std::function<void(int)> &task)
{
  if (n_workers_ == 1)
  {
    task(0);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    task_ = &task;
    pending_ = n_workers_ - 1;
    generation_++;
  }
  start_cv_.notify_all();
  task(0);
  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [&] { return pending_ == 0; });
}

std::vector<IndexRange> balanced_split(std::int64_t n, int parts)
{
  std::vector<IndexRange> out(parts);
  const std::int64_t base = n / parts, rem = n % parts;
  std::int64_t pos = 0;
  for (int p = 0; p < parts; p++)
  {
    const std::int64_t len = base + (p < rem ? 1 : 0);
    out[p] = {pos, pos + len};
    pos += len;
  }
  return out;
}

Exec Exec::serial(std::int64_t n, std::int64_t chunk_size)
{
  std::vector<std::int64_t> offsets{0};
  for (std::int64_t i = chunk_size; i < n; i += chunk_size)
  {
    offsets.push_back(i);
  }
  if (n > 0)
  {
    offsets.push_back(n);
  }
  return Exec(std::move(offsets), nullptr);
}

Exec::Exec(std::vector<std::int64_t> chunk_offsets, WorkerPool *pool)
  : offsets_(std::move(chunk_offsets)), pool_(pool)
{
  if (offsets_.empty() || offsets_.front() != 0)
  {
    throw std::invalid_argument("Exec: chunk offsets must start at 0");
  }
  for (std::size_t c = 1; c < offsets_.size(); c++)
  {
    if (offsets_[c] < offsets_[c - 1])
    {
      throw std::invalid_argument("Exec: chunk offsets must be non-decreasing");
    }
  }
  const int nw = n_workers();
  const auto split = balanced_split(n_chunks(), nw);
  worker_first_.resize(nw + 1);
  for (int w = 0; w < nw; w++)
  {
    worker_first_[w] = static_cast<int>(split[w].begin);
  }
  worker_first_[nw] = n_chunks();
}

Exec::Exec(std::vector<std::int64_t> chunk_offsets, std::vector<int> worker_first,
           WorkerPool *pool)
  : Exec(std::move(chunk_offsets), pool)
{
  if (static_cast<int>(worker_first.size()) != n_workers() + 1 || worker_first.front() != 0 ||
      worker_first.back() != n_chunks())
  {
    throw std::invalid_argument("Exec: worker assignment does not match chunks/pool");
  }
  for (std::size_t w = 1; w < worker_first.size(); w++)
  {
    if (worker_first[w] < worker_first[w - 1])
    {
      throw std::invalid_argument("Exec: worker assignment must be non-decreasing");
    }
  }
  worker_first_ = std::move(worker_first);
}

std::pair<int, int> Exec::worker_chunks(int w) const
{
  return {worker_first_[w], worker_first_[w + 1]};
}

void Exec::for_chunks(const std::function<void(int, IndexRange)> &fn) const
{
  auto body = [&](int w)
  {
    const auto [first, last] = worker_chunks(w);
    for (int c = first; c < last; c++)
    {
      fn(c, chunk(c));
    }
  };
  if (pool_)
  {
    pool_->run(body);
  }
  else
  {
    body(0);
  }
}

void Exec::for_ranges(const std::function<void(IndexRange)> &fn) const
{
  auto body = [&](int w)
  {
    const auto [first, last] = worker_chunks(w);
    if (first < last)
    {
      fn({offsets_[first], offsets_[last]});
    }
  };
  if (pool_)
  {
    pool_->run(body);
  }
  else
  {
    body(0);
  }
}

}  // namespace fitmf
