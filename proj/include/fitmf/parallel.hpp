// SPDX-License-Identifier: Apache-2.0

#ifndef FITMF_PARALLEL_HPP
#define FITMF_PARALLEL_HPP

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fitmf
{

// Half-open index range.
struct IndexRange
{
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t size() const { return end - begin; }
  bool operator==(const IndexRange &) const = default;
};

//
// Persistent pool of worker threads. run() executes task(w) for every worker w (the
// calling thread acts as worker 0) and returns after all of them finished, so every call
// is a full barrier.
//
class WorkerPool
{
public:
  explicit WorkerPool(int n_workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool &) = delete;
  WorkerPool &operator=(const WorkerPool &) = delete;

  int size() const { return n_workers_; }
  void run(const std::function<void(int)> &task);

private:
  void worker_loop(int w);

  int n_workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_, done_cv_;
  const std::function<void(int)> *task_ = nullptr;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

//
// Fixed chunking of a vector index space plus an assignment of contiguous chunk ranges
// to workers. Reductions accumulate one partial per chunk and sum the partials in chunk
// order, so results do not depend on the worker count.
//
class Exec
{
public:
  // Serial executor over n entries, chunked in blocks of chunk_size.
  static Exec serial(std::int64_t n, std::int64_t chunk_size = 4096);

  // chunk_offsets has n_chunks+1 increasing entries starting at 0. pool may be null.
  Exec(std::vector<std::int64_t> chunk_offsets, WorkerPool *pool);

  // Explicit worker assignment: worker w owns chunks [worker_first[w], worker_first[w+1]).
  // worker_first has pool->size()+1 entries (2 when pool is null).
  Exec(std::vector<std::int64_t> chunk_offsets, std::vector<int> worker_first,
       WorkerPool *pool);

  std::int64_t size() const { return offsets_.back(); }
  int n_chunks() const { return static_cast<int>(offsets_.size()) - 1; }
  int n_workers() const { return pool_ ? pool_->size() : 1; }
  IndexRange chunk(int c) const { return {offsets_[c], offsets_[c + 1]}; }
  const std::vector<std::int64_t> &chunk_offsets() const { return offsets_; }

  // Chunks [first, last) owned by worker w.
  std::pair<int, int> worker_chunks(int w) const;

  // Calls fn(chunk_index, range) for every chunk, distributed over workers.
  void for_chunks(const std::function<void(int, IndexRange)> &fn) const;

  // Calls fn(range) once per worker with the worker's contiguous index range.
  void for_ranges(const std::function<void(IndexRange)> &fn) const;

  // Same chunking on another pool; chunks are rebalanced over the new worker count.
  Exec with_pool(WorkerPool *pool) const { return Exec(offsets_, pool); }

private:
  std::vector<std::int64_t> offsets_;
  std::vector<int> worker_first_;  // n_workers+1 entries
  WorkerPool *pool_;
};

// Near-equal split of n items into `parts` contiguous blocks (sizes differ by at most 1,
// larger blocks first). Blocks beyond n are empty.
std::vector<IndexRange> balanced_split(std::int64_t n, int parts);

}  // namespace fitmf

#endif  // FITMF_PARALLEL_HPP
