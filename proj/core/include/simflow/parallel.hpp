#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace simflow {

/// Fixed set of worker threads running contiguous index ranges. Results
/// never depend on the worker count: every index is processed by exactly
/// one call and callers only write to per-index outputs.
class WorkerPool {
 public:
  explicit WorkerPool(int workers = 1);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return workers_; }

  /// Calls fn(begin, end) over a partition of [0, n). Rethrows the first
  /// exception raised by any chunk.
  void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

  static int hardware();

 private:
  void loop(int id);

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t n_ = 0;
  std::size_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace simflow
