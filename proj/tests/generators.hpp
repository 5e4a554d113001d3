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

#ifndef CFRENEW_TESTS_GENERATORS_HPP
#define CFRENEW_TESTS_GENERATORS_HPP

// Seeded generators for the property tests. Each property draws its cases
// from its own stream so failures reproduce from the printed case index.

#include <cmath>
#include <cstdint>
#include <vector>

#include "cfrenew/cfrenew.hpp"

namespace cfrenew::testing {

class gen {
 public:
  explicit gen(std::uint64_t property, std::uint64_t index = 0) : rng_(0xC0FFEE ^ property, index) {}

  double uniform() { return rng_.next_double(); }
  std::uint64_t below(std::uint64_t n) { return rng_.next_u64() % n; }

  /// Digits mostly from the Gauss-Kuzmin law, occasionally very large.
  std::uint64_t digit() {
    if (below(50) == 0) return 1 + below(1000000);
    const double u = uniform();
    const double x = std::exp2(u) - 1.0;  // mu1 quantile
    return static_cast<std::uint64_t>(1.0 / std::max(x, 1e-12));
  }

  std::vector<std::uint64_t> digits(std::size_t n) {
    std::vector<std::uint64_t> d(n);
    for (auto& a : d) a = std::max<std::uint64_t>(1, digit());
    return d;
  }

  /// log-uniform on [lo, hi].
  double log_uniform(double lo, double hi) { return std::exp(std::log(lo) + uniform() * std::log(hi / lo)); }

  natural_ext_point mu2_point(int bits) { return sample_mu2(rng_, bits); }
  hp_real mu1_point(int bits) { return sample_mu1(rng_, bits); }
  random_stream& stream() { return rng_; }

 private:
  random_stream rng_;
};

/// The golden point (g, g) enclosed at `bits` bits.
inline natural_ext_point golden_point(int bits = 512) {
  mpfr_t lo, hi;
  mpfr_init2(lo, bits + 16);
  mpfr_init2(hi, bits + 16);
  mpfr_set_ui(lo, 5, MPFR_RNDN);
  mpfr_set_ui(hi, 5, MPFR_RNDN);
  mpfr_sqrt(lo, lo, MPFR_RNDD);
  mpfr_sqrt(hi, hi, MPFR_RNDU);
  mpfr_sub_ui(lo, lo, 1, MPFR_RNDD);
  mpfr_sub_ui(hi, hi, 1, MPFR_RNDU);
  mpfr_div_2ui(lo, lo, 1, MPFR_RNDD);
  mpfr_div_2ui(hi, hi, 1, MPFR_RNDU);
  hp_real g = hp_real::from_mpfr(lo, hi, bits);
  mpfr_clear(lo);
  mpfr_clear(hi);
  return natural_ext_point(g, g);
}

/// sqrt(2) - 1 enclosed at `bits` bits.
inline hp_real silver(int bits = 512) {
  mpfr_t lo, hi;
  mpfr_init2(lo, bits + 16);
  mpfr_init2(hi, bits + 16);
  mpfr_set_ui(lo, 2, MPFR_RNDN);
  mpfr_set_ui(hi, 2, MPFR_RNDN);
  mpfr_sqrt(lo, lo, MPFR_RNDD);
  mpfr_sqrt(hi, hi, MPFR_RNDU);
  mpfr_sub_ui(lo, lo, 1, MPFR_RNDD);
  mpfr_sub_ui(hi, hi, 1, MPFR_RNDU);
  hp_real s = hp_real::from_mpfr(lo, hi, bits);
  mpfr_clear(lo);
  mpfr_clear(hi);
  return s;
}

/// pi - 3 enclosed at `bits` bits.
inline hp_real pi_minus_3(int bits = 512) {
  mpfr_t lo, hi;
  mpfr_init2(lo, bits + 16);
  mpfr_init2(hi, bits + 16);
  mpfr_const_pi(lo, MPFR_RNDD);
  mpfr_const_pi(hi, MPFR_RNDU);
  mpfr_sub_ui(lo, lo, 3, MPFR_RNDD);
  mpfr_sub_ui(hi, hi, 3, MPFR_RNDU);
  hp_real s = hp_real::from_mpfr(lo, hi, bits);
  mpfr_clear(lo);
  mpfr_clear(hi);
  return s;
}

}  // namespace cfrenew::testing

#endif  // CFRENEW_TESTS_GENERATORS_HPP
