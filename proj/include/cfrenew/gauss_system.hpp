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

#ifndef CFRENEW_GAUSS_SYSTEM_HPP
#define CFRENEW_GAUSS_SYSTEM_HPP

// The Gauss map G(x) = {1/x}, its natural extension on pairs
// (alpha-, alpha+) = ([a_0, a_-1, ...], [a_1, a_2, ...]),
//
//   step(alpha-, alpha+) = (1 / (a_1 + alpha-), {1 / alpha+}),
//
// the invariant measures
//
//   d mu1 = dx / (ln 2 (1 + x)),   d mu2 = dx dy / (ln 2 (1 + xy)^2),
//
// exact samplers for both, and cylinder sets.

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cfrenew/cf_core.hpp"
#include "cfrenew/errors.hpp"
#include "cfrenew/hp_real.hpp"
#include "cfrenew/quadrature.hpp"
#include "cfrenew/rng.hpp"

namespace cfrenew {

/// {1/x} for x in (0,1).
inline hp_real gauss_map(const hp_real& x) {
  reciprocal_split s = split_reciprocal(x);
  switch (s.status) {
    case split_status::ok: break;
    case split_status::zero_remainder: throw error(errc::rational_input, "G(x) = 0");
    case split_status::overflow: throw error(errc::digit_overflow, "1/x exceeds 64 bits");
    case split_status::uncertain:
      throw error(x.is_exact() ? errc::rational_input : errc::precision_exhausted, "floor(1/x) not certified");
  }
  return std::move(s.remainder);
}

inline std::optional<std::uint64_t> certified_first_digit(const hp_real& x) {
  reciprocal_split s = split_reciprocal(x);
  if (s.status == split_status::ok) return s.digit;
  return std::nullopt;
}

/// A point (alpha-, alpha+) of the natural-extension domain. The first digit of
/// each component is certified (or found uncertain) once, at construction.
class natural_ext_point {
 public:
  natural_ext_point(hp_real minus, hp_real plus) : minus_(std::move(minus)), plus_(std::move(plus)) {
    if (minus_.is_exact() || plus_.is_exact()) {
      throw error(errc::rational_input, "natural-extension components must not be exact rationals");
    }
    if (!minus_.inside_unit_interval() || !plus_.inside_unit_interval()) {
      throw error(errc::precision_exhausted, "component enclosure leaves (0,1)");
    }
    a1_ = certified_first_digit(plus_);
    a0_ = certified_first_digit(minus_);
  }

  const hp_real& minus() const noexcept { return minus_; }
  const hp_real& plus() const noexcept { return plus_; }
  int bits() const noexcept { return std::min(minus_.bits(), plus_.bits()); }

  /// a_1 = floor(1 / alpha+), when certified.
  std::optional<std::uint64_t> a1() const noexcept { return a1_; }
  /// a_0 = floor(1 / alpha-), when certified.
  std::optional<std::uint64_t> a0() const noexcept { return a0_; }

  std::uint64_t require_a1() const {
    if (!a1_) throw error(errc::precision_exhausted, "a_1 not certified");
    return *a1_;
  }
  std::uint64_t require_a0() const {
    if (!a0_) throw error(errc::precision_exhausted, "a_0 not certified");
    return *a0_;
  }

 private:
  hp_real minus_;
  hp_real plus_;
  std::optional<std::uint64_t> a1_;
  std::optional<std::uint64_t> a0_;
};

inline natural_ext_point natural_extension_step(const natural_ext_point& p) {
  reciprocal_split s = split_reciprocal(p.plus());
  if (s.status != split_status::ok) throw error(errc::precision_exhausted, "a_1 not certified");
  return natural_ext_point(prepend_digit(s.digit, p.minus()), std::move(s.remainder));
}

inline natural_ext_point natural_extension_inverse(const natural_ext_point& p) {
  reciprocal_split s = split_reciprocal(p.minus());
  if (s.status != split_status::ok) throw error(errc::precision_exhausted, "a_0 not certified");
  return natural_ext_point(std::move(s.remainder), prepend_digit(s.digit, p.plus()));
}

/// Digits a_lo .. a_hi of the bi-infinite coding of p (a_k for k >= 1 from
/// alpha+, a_0, a_-1, ... from alpha-).
inline digit_sequence two_sided_window(const natural_ext_point& p, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw error(errc::invalid_argument, "empty window");
  std::vector<std::uint64_t> out(static_cast<std::size_t>(hi - lo + 1));
  if (hi >= 1) {
    digit_stream s(p.plus());
    for (std::int64_t k = 1; k <= hi; ++k) {
      auto a = s.next();
      if (!a || (s.status() && k < hi)) throw error(errc::precision_exhausted, "alpha+ digit not certified");
      if (k >= lo) out[static_cast<std::size_t>(k - lo)] = *a;
    }
  }
  if (lo <= 0) {
    digit_stream s(p.minus());
    for (std::int64_t k = 0; k >= lo; --k) {
      auto a = s.next();
      if (!a || (s.status() && k > lo)) throw error(errc::precision_exhausted, "alpha- digit not certified");
      if (k <= hi) out[static_cast<std::size_t>(k - lo)] = *a;
    }
  }
  return digit_sequence(std::move(out), lo, sidedness::two_sided);
}

// ---------------------------------------------------------------------------
// Samplers

/// 2^u - 1, the mu1 quantile at u, enclosed at `bits` bits.
inline hp_real mu1_quantile(const mpq_class& u, int bits) {
  if (!(u > 0 && u < 1)) throw error(errc::invalid_argument, "quantile level must lie in (0,1)");
  const mpfr_prec_t prec = std::max<mpfr_prec_t>(bits, 64);
  mpfr_t lo, hi;
  mpfr_init2(lo, prec);
  mpfr_init2(hi, prec);
  // Exponent bounds first, then the monotone map x -> 2^x - 1 with outward rounding.
  mpfr_set_q(lo, u.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(hi, u.get_mpq_t(), MPFR_RNDU);
  mpfr_exp2(lo, lo, MPFR_RNDD);
  mpfr_exp2(hi, hi, MPFR_RNDU);
  mpfr_sub_ui(lo, lo, 1, MPFR_RNDD);
  mpfr_sub_ui(hi, hi, 1, MPFR_RNDU);
  hp_real out = hp_real::from_mpfr(lo, hi, bits);
  mpfr_clear(lo);
  mpfr_clear(hi);
  return out;
}

inline hp_real mu1_quantile(const dyadic_uniform& u, int bits) { return mu1_quantile(u.value(), bits); }

inline hp_real sample_mu1(random_stream& rng, int bits = default_precision_bits) {
  return mu1_quantile(rng.next_dyadic(), bits);
}

/// alpha- given alpha+ under mu2: the conditional CDF F(t) = t(1 + a)/(1 + t a)
/// inverted at level v, t = v / (1 + a - v a). Exact on enclosure endpoints.
inline hp_real mu2_conditional_minus(const hp_real& plus, const mpq_class& v) {
  if (!(v >= 0 && v <= 1)) throw error(errc::invalid_argument, "conditional level must lie in [0,1]");
  const mpz_class V = v.get_num();
  const mpz_class W = v.get_den();
  auto map = [&](const ratio& x) {
    return ratio{V * x.den, W * x.den + x.num * (W - V)};
  };
  if (plus.is_exact()) return hp_real::exact(map(plus.lower()).to_mpq(), plus.bits());
  // Decreasing in alpha+.
  return hp_real::enclosure(map(plus.upper()), map(plus.lower()), plus.bits());
}

inline natural_ext_point mu2_from_uniforms(const mpq_class& u, const mpq_class& v, int bits) {
  hp_real plus = mu1_quantile(u, bits);
  hp_real minus = mu2_conditional_minus(plus, v);
  return natural_ext_point(std::move(minus), std::move(plus));
}

inline natural_ext_point sample_mu2(random_stream& rng, int bits = default_precision_bits) {
  dyadic_uniform u = rng.next_dyadic();
  dyadic_uniform v = rng.next_dyadic();
  return mu2_from_uniforms(u.value(), v.value(), bits);
}

// ---------------------------------------------------------------------------
// Cylinders

/// Digit constraints a_k = b_k on a contiguous index range. One-sided
/// cylinders start at index 1.
struct cylinder {
  sidedness side = sidedness::one_sided;
  std::int64_t first_index = 1;
  std::vector<std::uint64_t> digits;

  static cylinder one_sided(std::vector<std::uint64_t> b) {
    cylinder c{sidedness::one_sided, 1, std::move(b)};
    c.validate();
    return c;
  }

  /// C[b_-m, ..., b_0; b_1, ..., b_n] from the backward digits (b_0, b_-1, ...,
  /// b_-m) and the forward digits (b_1, ..., b_n).
  static cylinder two_sided(const std::vector<std::uint64_t>& backward, const std::vector<std::uint64_t>& forward) {
    cylinder c;
    c.side = sidedness::two_sided;
    c.first_index = 1 - static_cast<std::int64_t>(backward.size());
    c.digits.assign(backward.rbegin(), backward.rend());
    c.digits.insert(c.digits.end(), forward.begin(), forward.end());
    c.validate();
    return c;
  }

  static cylinder window(std::int64_t first, std::vector<std::uint64_t> b) {
    cylinder c{sidedness::two_sided, first, std::move(b)};
    c.validate();
    return c;
  }

  void validate() const {
    for (auto b : digits) {
      if (b == 0) throw error(errc::invalid_digits, "cylinder digits must be >= 1");
    }
    if (side == sidedness::one_sided && first_index != 1) {
      throw error(errc::invalid_digits, "one-sided cylinders constrain a_1 ... a_n");
    }
  }

  std::int64_t last_index() const noexcept { return first_index + static_cast<std::int64_t>(digits.size()) - 1; }
  std::uint64_t at(std::int64_t k) const { return digits.at(static_cast<std::size_t>(k - first_index)); }

  bool contains(const natural_ext_point& p) const {
    if (digits.empty()) return true;
    digit_sequence w = two_sided_window(p, first_index, last_index());
    return w.digits == digits;
  }
};

/// The open interval of x in (0,1) whose expansion starts with b_1 ... b_n:
/// endpoints p_n/q_n and (p_n + p_{n-1}) / (q_n + q_{n-1}).
inline std::pair<mpq_class, mpq_class> cylinder_interval(std::span<const std::uint64_t> b) {
  if (b.empty()) return {mpq_class(0), mpq_class(1)};
  convergent_recursion rec;
  for (auto a : b) {
    if (a == 0) throw error(errc::invalid_digits, "cylinder digits must be >= 1");
    rec.push(a);
  }
  mpq_class e1(rec.p(), rec.q());
  mpq_class e2(rec.p() + rec.p_prev(), rec.q() + rec.q_prev());
  e1.canonicalize();
  e2.canonicalize();
  if (e1 > e2) std::swap(e1, e2);
  return {e1, e2};
}

inline std::pair<mpq_class, mpq_class> cylinder_interval(const cylinder& c) {
  if (c.side != sidedness::one_sided) throw error(errc::invalid_argument, "cylinder_interval needs a one-sided cylinder");
  return cylinder_interval(std::span<const std::uint64_t>(c.digits));
}

inline double mu1_interval_mass(double lo, double hi) {
  return std::log1p((hi - lo) / (1.0 + lo)) / std::numbers::ln2;
}

inline double mu1_interval_mass(const mpq_class& lo, const mpq_class& hi) {
  mpq_class r = (hi - lo) / (1 + lo);
  return std::log1p(r.get_d()) / std::numbers::ln2;
}

/// mu2 density 1 / (ln 2 (1 + x y)^2).
inline double mu2_density(double minus, double plus) {
  const double d = 1.0 + minus * plus;
  return 1.0 / (std::numbers::ln2 * d * d);
}

enum class measure_kind { mu1, mu2 };

struct cylinder_rectangle {
  std::pair<mpq_class, mpq_class> minus;  // alpha- range
  std::pair<mpq_class, mpq_class> plus;   // alpha+ range
};

/// Shifts a cylinder by a power of the natural extension (which preserves mu2)
/// so that it becomes a product of an alpha- and an alpha+ cylinder.
inline cylinder_rectangle cylinder_as_rectangle(const cylinder& c) {
  std::int64_t lo = c.first_index;
  std::int64_t hi = c.last_index();
  std::int64_t shift = 0;
  if (c.digits.empty()) return {{0, 1}, {0, 1}};
  if (lo >= 1) {
    shift = lo - 1;
  } else if (hi <= 0) {
    shift = hi;
  }
  std::vector<std::uint64_t> forward, backward;
  for (std::int64_t k = lo; k <= hi; ++k) {
    const std::int64_t shifted = k - shift;
    if (shifted >= 1) forward.push_back(c.at(k));
  }
  for (std::int64_t k = hi; k >= lo; --k) {
    const std::int64_t shifted = k - shift;
    if (shifted <= 0) backward.push_back(c.at(k));
  }
  // backward was collected from high to low index: b_0, b_-1, ...
  return {cylinder_interval(std::span<const std::uint64_t>(backward)),
          cylinder_interval(std::span<const std::uint64_t>(forward))};
}

/// mu1 (one-sided, closed form) or mu2 (quadrature of the density over the
/// cylinder rectangle) measure of a cylinder.
inline double cylinder_measure(const cylinder& c, measure_kind which, double tol = 1e-10) {
  c.validate();
  if (which == measure_kind::mu1) {
    if (c.side != sidedness::one_sided) throw error(errc::invalid_argument, "mu1 measures one-sided cylinders");
    auto [lo, hi] = cylinder_interval(c);
    return mu1_interval_mass(lo, hi);
  }
  cylinder_rectangle r = cylinder_as_rectangle(c);
  const rect box{r.minus.first.get_d(), r.minus.second.get_d(), r.plus.first.get_d(), r.plus.second.get_d()};
  static const gauss_legendre rule(10);
  auto f = [](double x, double y) { return mu2_density(x, y); };
  return integrate_rect(f, box, rule, tol, 20).value;
}

}  // namespace cfrenew

#endif  // CFRENEW_GAUSS_SYSTEM_HPP
