#include "cfn/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>

namespace cfn {

namespace {

int default_threads = -1;

constexpr std::size_t kMaxParts = 256;

// Neumaier's variant of Kahan summation, one compensator per component.
struct CompensatedSum {
  std::vector<double> sum;
  std::vector<double> carry;

  explicit CompensatedSum(std::size_t dim) : sum(dim, 0.0), carry(dim, 0.0) {}

  void add(std::size_t k, double x) {
    double t = sum[k] + x;
    if (std::fabs(sum[k]) >= std::fabs(x)) {
      carry[k] += (sum[k] - t) + x;
    } else {
      carry[k] += (x - t) + sum[k];
    }
    sum[k] = t;
  }

  std::vector<double> result() const {
    std::vector<double> out(sum.size());
    for (std::size_t k = 0; k < sum.size(); ++k) out[k] = sum[k] + carry[k];
    return out;
  }
};

void accumulate_range(std::size_t begin, std::size_t end, std::size_t dim, const ItemFn& item,
                      bool squares, std::vector<double>& scratch, CompensatedSum& sum,
                      CompensatedSum* sq) {
  for (std::size_t i = begin; i < end; ++i) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    item(i, scratch);
    for (std::size_t k = 0; k < dim; ++k) {
      sum.add(k, scratch[k]);
      if (squares) sq->add(k, scratch[k] * scratch[k]);
    }
  }
}

// Fixed-shape pairwise reduction of per-part results.
void pairwise_combine(std::vector<std::vector<double>>& parts) {
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      auto& dst = parts[i];
      const auto& src = parts[i + stride];
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

}  // namespace

void set_thread_count(int n) {
  if (default_threads < 0) default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
}

int thread_count() { return omp_get_max_threads(); }

std::size_t partition_count(std::size_t count) { return std::min(count, kMaxParts); }

Accumulation accumulate(std::size_t count, std::size_t dim, const ItemFn& item, bool squares,
                        Backend backend) {
  Accumulation out;
  if (backend == Backend::kSerial || count == 0) {
    std::vector<double> scratch(dim);
    CompensatedSum sum(dim), sq(squares ? dim : 0);
    accumulate_range(0, count, dim, item, squares, scratch, sum, &sq);
    out.sum = sum.result();
    if (squares) out.sum_sq = sq.result();
    if (count == 0) out.sum.assign(dim, 0.0);
    return out;
  }

  const std::size_t parts = partition_count(count);
  std::vector<std::vector<double>> part_sum(parts), part_sq(squares ? parts : 0);
  const auto nparts = static_cast<std::int64_t>(parts);
  // Exceptions may not leave a parallel region; keep the first and rethrow.
  std::exception_ptr failure;
#pragma omp parallel
  {
    std::vector<double> scratch(dim);
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t p = 0; p < nparts; ++p) {
      try {
        const std::size_t begin = count * p / parts;
        const std::size_t end = count * (p + 1) / parts;
        CompensatedSum sum(dim), sq(squares ? dim : 0);
        accumulate_range(begin, end, dim, item, squares, scratch, sum, &sq);
        part_sum[p] = sum.result();
        if (squares) part_sq[p] = sq.result();
      } catch (...) {
#pragma omp critical(cfn_accumulate_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  pairwise_combine(part_sum);
  out.sum = std::move(part_sum[0]);
  if (squares) {
    pairwise_combine(part_sq);
    out.sum_sq = std::move(part_sq[0]);
  }
  return out;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  Backend backend) {
  if (backend == Backend::kSerial) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const auto n = static_cast<std::int64_t>(count);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(cfn_parallel_for_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cfn
