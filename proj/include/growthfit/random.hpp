#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace growthfit {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream `index` under `master`. Streams do not
/// depend on how many other streams were drawn or in what order.
inline constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t master, std::uint64_t index) { return Rng(stream_seed(master, index)); }

/// Standard normal draws (ziggurat; the sequence for a given engine state is
/// fixed by Boost rather than by the standard library implementation).
class NormalSource {
public:
  explicit NormalSource(Rng rng) : rng_(rng) {}
  double operator()() { return dist_(rng_); }
  Rng& engine() { return rng_; }

private:
  Rng rng_;
  boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace growthfit
