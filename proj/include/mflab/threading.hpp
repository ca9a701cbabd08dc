#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace mflab {

// chunked parallel loop over [0, n); fn(begin, end) must write disjoint
// output ranges so the result is identical for any worker count
template <class Fn>
void parallel_for(Eigen::Index n, int workers, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n < 4096) {
    fn(Eigen::Index(0), n);
    return;
  }
  const Eigen::Index chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index b = std::min<Eigen::Index>(n, w * chunk);
    const Eigen::Index e = std::min<Eigen::Index>(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mflab
