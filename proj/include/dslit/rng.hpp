#pragma once

#include <cstdint>

namespace dslit {

/// SplitMix64 (Steele, Lea and Flood 2014; reference code by S. Vigna).
/// Output i of a generator seeded with s is mix(s + (i + 1) * gamma), so any
/// position of the stream can be reached in O(1) with discard().
///
/// Reference outputs for seed 1234567:
///   6457827717110365317, 3203168211198807973, 9817491932198370423,
///   4593380528125082431, 16408922859458223821
class SplitMix64 {
public:
  static constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    state_ += gamma;
    return mix(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  void discard(std::uint64_t count) { state_ += count * gamma; }

private:
  std::uint64_t state_;
};

/// Independent sub-stream seed: mix(master ^ mix(stream + gamma)).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return SplitMix64::mix(master ^ SplitMix64::mix(stream + SplitMix64::gamma));
}

/// Stream identifiers used by the event generator and frame renderer.
enum class Stream : std::uint64_t { position = 1, arrival = 2, vertical = 3, frame_noise = 4 };

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream) {
  return derive_seed(master, static_cast<std::uint64_t>(stream));
}

} // namespace dslit
