// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace sfbf {

/// Philox4x64-10 block function (Salmon et al., SC'11).
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

/// Counter-based random stream keyed by (seed, stream_id).
///
/// The 256-bit counter is laid out as (block, channel, iteration, 0), so the
/// draws made at a given (iteration, channel) position depend only on
/// (seed, stream_id, iteration, channel) and not on anything drawn before.
/// Distinct stream ids give independent streams.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Moves to the start of the (iteration, channel) substream.
  void seek(std::uint64_t iteration, std::uint64_t channel = 0);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }
  std::uint64_t iteration() const { return counter_[2]; }
  std::uint64_t channel() const { return counter_[1]; }
  /// Number of 64-bit words consumed at the current position.
  std::uint64_t counter() const { return consumed_; }

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{};
  std::array<std::uint64_t, 4> block_{};
  unsigned buffered_ = 0;
  std::uint64_t consumed_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sfbf
