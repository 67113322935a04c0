#include "salab/rng.hpp"

#include <array>

namespace salab {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  // Fixed domain tag keeps (seed, stream) from colliding with plain
  // seed_seq{seed} uses elsewhere.
  const std::array<std::uint32_t, 5> words{
      static_cast<std::uint32_t>(seed),
      static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream_id),
      static_cast<std::uint32_t>(stream_id >> 32),
      0x5a5a1f0du,
  };
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngState::RngState(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      engine_(make_engine(seed, stream_id)),
      normal_(0.0, 1.0) {}

RngState seed_rng(std::uint64_t seed, std::uint64_t stream_id) {
  return RngState(seed, stream_id);
}

}  // namespace salab
