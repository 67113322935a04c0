#pragma once

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>

namespace salab {

/// One reproducible random stream. A stream is identified by the pair
/// (seed, stream_id); the pair is expanded through std::seed_seq into the
/// full Mersenne-Twister state, so streams with different ids start from
/// unrelated states and chains can run in any order on any thread.
///
/// Variates are produced with Boost.Random distributions (ziggurat normal),
/// whose output is specified by the algorithm rather than by the standard
/// library vendor.
class RngState {
 public:
  RngState(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  /// +1 or -1 with equal probability.
  double rademacher() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

RngState seed_rng(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace salab
