#pragma once

// Weighted accumulation over independent items (samples or leaf patterns).
//
// The parallel path splits [0, count) into a partition that depends only on
// count, sums each part in order, then combines parts pairwise in a fixed
// tree. The result is therefore bitwise identical for any thread count. The
// serial path is the plain reference: one in-order pass with compensated
// summation.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cfn {

enum class Backend { kParallel, kSerial };

// Caps OpenMP workers; n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

// item(i, out) adds item i's contribution into out (zeroed per item).
using ItemFn = std::function<void(std::size_t, std::span<double>)>;

struct Accumulation {
  std::vector<double> sum;
  std::vector<double> sum_sq;  // empty unless squares were requested
};

Accumulation accumulate(std::size_t count, std::size_t dim, const ItemFn& item, bool squares,
                        Backend backend = Backend::kParallel);

// Number of parts used by the parallel path for a given item count.
std::size_t partition_count(std::size_t count);

// Calls fn(i) for i in [0, count). Items must write disjoint outputs. The first
// exception thrown by any item is rethrown after the loop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  Backend backend = Backend::kParallel);

}  // namespace cfn
