#pragma once

#include <cstdint>
#include <random>

namespace shelterq {

// SplitMix64 mixing step (Steele, Lea & Flood); advances state and returns one output.
std::uint64_t splitmix64_next(std::uint64_t& state);

// Purposes of the four per-replication random input streams. Keeping them separate
// means common-random-number comparisons stay synchronized even when one stream's
// usage pattern changes between scenarios (e.g. a parameter sweep).
enum : std::uint64_t {
  kStreamInterarrival = 0,
  kStreamProfile = 1,
  kStreamService = 2,
  kStreamPatience = 3,
};

// Seed for the (replicationIndex, purpose) substream of a base seed. Deterministic,
// and distinct substreams get well-separated seeds by construction.
std::uint64_t derive_stream_seed(std::uint64_t baseSeed, std::uint64_t replicationIndex,
                                 std::uint64_t purpose);

// Deterministic uniform random stream: a mt19937_64 engine (whose output sequence the
// standard fully specifies) with inverse-CDF samplers on top. std::*_distribution
// wrappers are deliberately avoided — their algorithms are implementation-defined and
// would break byte-identical reproducibility across platforms.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Exponential with the given rate via inversion; always consumes exactly one
  // uniform. rate == 0 returns +infinity (a draw that never fires), which keeps
  // streams aligned across abandonment-rate sweeps that include zero.
  double exponential(double rate);

  // True with probability p; consumes exactly one uniform.
  bool bernoulli(double p);

private:
  std::mt19937_64 eng_;
};

}  // namespace shelterq
