#pragma once

#include <cstdint>
#include <random>

namespace bandit {

// Deterministic random stream. Substreams are derived by hashing
// (seed, tag, index) triples so that parallel replications and shared
// Monte Carlo draw sets never interleave.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // One variate from U[0,1).
  double uniform01() {
    return std::generate_canonical<double, 53>(gen_);
  }

  double normal() { return normal_(gen_); }

  // Consumes exactly one uniform variate.
  int bernoulli(double p) { return uniform01() < p ? 1 : 0; }

  // splitmix64 finalizer; used to combine seeds into substream seeds.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return mix(a ^ mix(b));
  }
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Substream tags. Keeping them in one place documents the stream layout:
// each (base_seed, tag, index) triple owns an independent generator.
enum class StreamTag : std::uint64_t {
  Replication = 1,   // index = replication number
  ValueDraws = 2,    // index = checkpoint time (shared across replications)
  Oracle = 3,
  SyntheticLog = 4,
  Replay = 5,
};

inline Rng substream(std::uint64_t base_seed, StreamTag tag, std::uint64_t index = 0) {
  return Rng(Rng::mix(base_seed, static_cast<std::uint64_t>(tag), index));
}

}  // namespace bandit
