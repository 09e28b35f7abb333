// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams. Every random decision in the simulator is
// drawn from a stream addressed by (seed, purpose, a, b, c), so the value a
// draw produces depends only on its address and never on which thread asked
// for it or in which order.
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace wash {

/// Distinguishes independent uses of the same seed.
enum class Purpose : std::uint32_t {
  kInit = 1,
  kDataGen = 2,
  kDataOrder = 3,
  kJitter = 4,
  kHeteroMenu = 5,
  kShuffleSelect = 6,
  kShufflePerm = 7,
  kToyNoise = 8,
  kToyShuffle = 9,
  kTest = 10,
};

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// 64-bit finalizer from SplitMix64.
std::uint64_t mix64(std::uint64_t x);

/// A stream of random numbers at a fixed address. Satisfies
/// UniformRandomBitGenerator. Distributions are implemented here rather than
/// through <random> so draws are identical across standard libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, Purpose purpose, std::uint64_t a = 0,
             std::uint32_t b = 0, std::uint32_t c = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  /// Standard normal (Box-Muller, second value cached).
  double normal();
  /// Uniform integer in [0, n), unbiased (Lemire's method). n > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  /// Number of failures before the first success, success probability p in
  /// (0, 1). Saturates at UINT64_MAX.
  std::uint64_t geometric(double p);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::uint32_t b_ = 0;
  std::uint32_t c_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace wash
