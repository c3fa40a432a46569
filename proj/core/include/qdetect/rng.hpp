#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <boost/random/normal_distribution.hpp>

namespace qdetect {

/// SplitMix64 output function. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Purposes keep the noise stream and the detector's bridge draws disjoint.
enum class StreamPurpose : std::uint64_t { PathNoise = 1, Bridge = 2, Replay = 3 };

/// Key of the stream used by (seed, replication, sensor) for a given purpose.
std::uint64_t stream_key(std::uint64_t seed, StreamPurpose purpose, std::uint64_t replication,
                         std::uint64_t sensor) noexcept;

/// Counter-based uniform on the open interval (0, 1): a pure function of (key, counter).
inline double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t bits = mix64(key ^ mix64(counter));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// One independent standard-normal stream per sensor.
class GaussianStreams {
 public:
  GaussianStreams(std::uint64_t seed, std::uint64_t replication, std::size_t n_sensors);

  std::size_t size() const noexcept { return engines_.size(); }

  /// Fills out[i] with the next draw of stream i.
  void draw(std::span<double> out);

 private:
  std::vector<std::mt19937_64> engines_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace qdetect
