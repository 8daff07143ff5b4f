#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace modetest {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3"). Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Counter-based random stream. The key is the 64-bit seed, the upper half of
// the counter is the stream id, and the lower half counts blocks, so the draw
// sequence of (seed, stream_id) never depends on which thread consumes it.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal (Marsaglia polar method, spare value cached).
  double standard_normal();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives a child seed from a parent seed and a path of integers (SplitMix64
// finalizer applied per component). Used to key simulation replicates.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Uniform on [lo, hi). Throws InvalidArgument unless lo < hi.
double draw_uniform(RngStream& rng, double lo, double hi);

}  // namespace modetest
