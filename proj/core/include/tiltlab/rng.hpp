#pragma once

// Counter-based random streams. Every chain/worker owns an independent
// Philox4x32-10 stream keyed by (seed, stream id), so results depend only on
// the master seed and the stream index, never on scheduling.

#include <array>
#include <cstdint>
#include <random>

namespace tiltlab {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

/// Deterministic stream id for a child of `parent`.
std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t index);

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  std::size_t below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  /// Independent stream for sub-task `index`.
  Rng child(std::uint64_t index) const {
    return Rng(engine_.seed(), derive_stream(engine_.stream(), index));
  }

  Philox4x32& engine() { return engine_; }

 private:
  Philox4x32 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace tiltlab
