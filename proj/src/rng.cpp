#include "shelterq/rng.hpp"

#include <cmath>
#include <limits>

#include "shelterq/errors.hpp"

namespace shelterq {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t baseSeed, std::uint64_t replicationIndex,
                                 std::uint64_t purpose) {
  // Two mixing rounds fold the replication index and purpose into the base seed;
  // SplitMix64 is a bijective avalanche, so distinct inputs give well-spread outputs.
  std::uint64_t state = baseSeed;
  std::uint64_t a = splitmix64_next(state);
  state = a ^ (replicationIndex * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  std::uint64_t b = splitmix64_next(state);
  state = b + purpose;
  return splitmix64_next(state);
}

double RandomStream::uniform() {
  // Top 53 bits of the engine output scaled into [0, 1).
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RandomStream::exponential(double rate) {
  double u = uniform();
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw ValidationError("bad-rate", "exponential sampler needs a finite rate >= 0");
  }
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-u) / rate;  // u in [0,1) so log1p(-u) is finite
}

bool RandomStream::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("bad-probability", "bernoulli needs p in [0, 1]");
  }
  return uniform() < p;
}

}  // namespace shelterq
