#pragma once

#include <cstdint>
#include <random>

namespace manyclass {

// Every random decision in the library draws from a named stream derived from
// (master seed, tag, salt, salt2). Runs are reproducible bit-for-bit and
// per-iteration/per-datapoint draws come from independent streams.
enum class StreamTag : std::uint64_t {
  kInputs = 1,
  kTrueWeights,
  kLabels,
  kShuffle,
  kNegatives,
  kNoise,
  kZVector,
  kTrials,
  kInstance,
};

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); never returns 0, safe for logs.
  double next_uniform_open() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Consumes two words per call.
  double next_gaussian();

  // Uniform integer in [0, n).
  std::size_t next_index(std::size_t n);

  bool next_bernoulli(double p) { return next_uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

RngStream derive_stream(std::uint64_t master, StreamTag tag, std::uint64_t salt = 0,
                        std::uint64_t salt2 = 0);

}  // namespace manyclass
