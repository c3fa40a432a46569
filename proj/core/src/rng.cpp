#include "qdetect/rng.hpp"

namespace qdetect {

std::uint64_t stream_key(std::uint64_t seed, StreamPurpose purpose, std::uint64_t replication,
                         std::uint64_t sensor) noexcept {
  std::uint64_t key = mix64(seed ^ (static_cast<std::uint64_t>(purpose) << 56));
  key = mix64(key ^ replication);
  return mix64(key + 0x632be59bd9b4e019ULL * (sensor + 1));
}

GaussianStreams::GaussianStreams(std::uint64_t seed, std::uint64_t replication,
                                 std::size_t n_sensors) {
  engines_.reserve(n_sensors);
  for (std::size_t i = 0; i < n_sensors; ++i) {
    engines_.emplace_back(stream_key(seed, StreamPurpose::PathNoise, replication, i));
  }
}

void GaussianStreams::draw(std::span<double> out) {
  for (std::size_t i = 0; i < engines_.size(); ++i) out[i] = normal_(engines_[i]);
}

}  // namespace qdetect
