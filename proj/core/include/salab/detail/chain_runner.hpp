#pragma once

#include "salab/rng.hpp"
#include "salab/types.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

namespace salab::detail {

struct ChainSchedule {
  int n_chains = 1;
  long burn_in = 0;
  int samples_per_chain = 1;
  long thin = 1;
};

struct ChainRecord {
  std::vector<double> samples;  // samples_per_chain x d, row-major
  std::vector<double> final_state;
  bool diverged = false;
};

/// Runs independent chains from x0. `make_stepper()` must return a callable
/// `bool(std::span<double> x, RngState&)` that advances x by one step in
/// place and returns false once x is non-finite. Chain c draws from stream
/// stream_base + c, and each chain writes only its own record, so the result
/// does not depend on `threads`.
template <class MakeStepper>
std::vector<ChainRecord> run_chains(const Vec& x0, const Vec& center,
                                    double inv_scale,
                                    const ChainSchedule& schedule,
                                    std::uint64_t seed,
                                    std::uint64_t stream_base, int threads,
                                    MakeStepper make_stepper) {
  const auto d = static_cast<std::size_t>(x0.size());
  std::vector<ChainRecord> records(static_cast<std::size_t>(schedule.n_chains));
  std::atomic<int> next{0};

  auto worker = [&]() {
    auto stepper = make_stepper();
    std::vector<double> x(d);
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= schedule.n_chains) return;
      ChainRecord& rec = records[static_cast<std::size_t>(c)];
      RngState rng(seed, stream_base + static_cast<std::uint64_t>(c));
      std::copy(x0.data(), x0.data() + d, x.begin());
      std::span<double> xs(x);

      bool ok = true;
      for (long k = 0; k < schedule.burn_in && ok; ++k) ok = stepper(xs, rng);
      if (ok) {
        rec.samples.resize(static_cast<std::size_t>(schedule.samples_per_chain) * d);
        for (int s = 0; s < schedule.samples_per_chain && ok; ++s) {
          for (long k = 0; k < schedule.thin && ok; ++k) ok = stepper(xs, rng);
          double* row = rec.samples.data() + static_cast<std::size_t>(s) * d;
          for (std::size_t i = 0; i < d; ++i) {
            row[i] = (x[i] - center[static_cast<Eigen::Index>(i)]) * inv_scale;
          }
        }
      }
      rec.diverged = !ok;
      if (!ok) rec.samples.clear();
      rec.final_state = x;
    }
  };

  const int n_threads = std::clamp(threads, 1, std::max(1, schedule.n_chains));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

inline bool finite_span(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace salab::detail
