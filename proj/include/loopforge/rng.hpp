#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace loopforge {

// Philox4x32-10 counter-based generator. A stream is identified by
// (seed, stream id); the 64-bit block counter advances within the stream.
// Streams with different ids are independent for all practical purposes,
// which is what lets work be partitioned by task index instead of by thread.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  std::uint64_t next();

  // Independent child stream; deterministic in (this stream's identity, k),
  // and does not consume draws from this stream.
  Rng split(std::uint64_t k) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> ctr,
                                                   std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

// [0, 1) with 53 random bits.
double uniform01(Rng& rng);
// (0, 1) strictly; safe as an argument to inverse CDFs.
double uniform_open01(Rng& rng);
// Uniform integer in [0, n), n > 0, unbiased (Lemire).
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);
// Standard normal by inversion of a single open uniform.
double standard_normal(Rng& rng);
double standard_normal_quantile(double u);
double standard_normal_cdf(double x);
// Poisson(mean): inversion for mean < 10, PTRS transformed rejection otherwise.
std::uint64_t poisson(Rng& rng, double mean);

std::uint64_t mix64(std::uint64_t x);

}  // namespace loopforge
