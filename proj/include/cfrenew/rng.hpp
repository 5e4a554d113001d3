// Copyright 2026 The cfrenew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFRENEW_RNG_HPP
#define CFRENEW_RNG_HPP

// Counter-based random streams (Philox4x32-10).
//
// A stream is addressed by (seed, index); draws within a stream advance a
// private counter. Sample i of any Monte-Carlo run always reads stream i, so
// results do not depend on how samples are distributed over workers.

#include <gmpxx.h>

#include <array>
#include <cstdint>

namespace cfrenew {

using philox_block = std::array<std::uint32_t, 4>;
using philox_key = std::array<std::uint32_t, 2>;

inline philox_block philox4x32_10(philox_block ctr, philox_key key) {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    auto lo0 = static_cast<std::uint32_t>(p0);
    auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// A uniform variate on (0,1) represented exactly as (2k+1) / 2^(bits+1).
struct dyadic_uniform {
  mpz_class odd_numerator;
  unsigned bits = 128;

  mpq_class value() const {
    mpq_class q(odd_numerator);
    mpz_mul_2exp(q.get_den_mpz_t(), q.get_den_mpz_t(), bits + 1);
    q.canonicalize();
    return q;
  }
  double to_double() const { return value().get_d(); }
};

class random_stream {
 public:
  random_stream(std::uint64_t seed, std::uint64_t index) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, index_(index) {}

  std::uint64_t next_u64() noexcept {
    if (used_ == 2) refill();
    return buffer_[used_++];
  }

  /// Uniform on [0,1) with 53 random bits.
  double next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1) as an exact dyadic with 128 random bits.
  dyadic_uniform next_dyadic() {
    dyadic_uniform u;
    mpz_class hi(static_cast<unsigned long>(next_u64()));
    mpz_class lo(static_cast<unsigned long>(next_u64()));
    u.odd_numerator = ((hi << 64) + lo) * 2 + 1;
    u.bits = 128;
    return u;
  }

  std::uint64_t index() const noexcept { return index_; }

 private:
  void refill() noexcept {
    philox_block ctr{static_cast<std::uint32_t>(draw_), static_cast<std::uint32_t>(draw_ >> 32),
                     static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)};
    philox_block out = philox4x32_10(ctr, key_);
    buffer_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    buffer_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    ++draw_;
    used_ = 0;
  }

  philox_key key_;
  std::uint64_t index_;
  std::uint64_t draw_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int used_ = 2;
};

}  // namespace cfrenew

#endif  // CFRENEW_RNG_HPP
