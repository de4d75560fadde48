#pragma once

#include <cstdint>
#include <random>

namespace scb {

// SplitMix64 finalizer. Only used to mix seeds for substream derivation;
// never used as the draw generator itself.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for the substream named by `key`. Derivations compose, so a
// whole experiment hangs off one base seed:
//   derive_seed(derive_seed(base, kEpisodes), replication)
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) {
  return splitmix64(parent ^ splitmix64(key));
}

// Deterministic random stream.
//
// mt19937_64 is chosen because the standard pins its output bit-for-bit, so
// runs reproduce across compilers and platforms. The uniform conversion is
// done by hand for the same reason: std::uniform_real_distribution is
// implementation-defined and not portable.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53 random bits. Never returns 1.0.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // P(true) = p exactly for p in [0, 1]: uniform01() < 1 always holds short
  // of p == 1 being forced, and uniform01() < 0 never does.
  bool bernoulli(double p) { return uniform01() < p; }

  // Independent child stream keyed off this stream's construction seed.
  // Stable no matter how many draws the parent has consumed.
  RngStream substream(std::uint64_t key) const {
    return RngStream(derive_seed(seed_, key));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace scb
