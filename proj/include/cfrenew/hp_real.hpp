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

#ifndef CFRENEW_HP_REAL_HPP
#define CFRENEW_HP_REAL_HPP

// High-precision reals as rational enclosures.
//
// A value is a closed interval [lo, hi] whose endpoints are exact rationals.
// Every map the dynamics needs (x -> {1/x}, x -> 1/(a + x)) is a Moebius map
// with integer coefficients, so endpoints are transported exactly and the only
// uncertainty is the one present at construction. Digits are emitted only when
// both endpoints agree, which is what "certified" means throughout.

#include <gmpxx.h>
#include <mpfr.h>

#include <boost/multiprecision/mpfr.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>

#include "cfrenew/errors.hpp"

namespace cfrenew {

inline constexpr int default_precision_bits = 4096;

using real = boost::multiprecision::mpfr_float;

inline unsigned digits10_for_bits(int bits) {
  return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

/// A fraction num/den with den > 0, kept unreduced. The Euclid and prepend
/// steps are unimodular so coprime inputs stay coprime.
struct ratio {
  mpz_class num;
  mpz_class den{1};

  mpq_class to_mpq() const {
    mpq_class q(num, den);
    q.canonicalize();
    return q;
  }
  double to_double() const { return to_mpq().get_d(); }

  static ratio from_mpq(const mpq_class& q) { return ratio{q.get_num(), q.get_den()}; }
};

inline int compare(const ratio& a, const ratio& b) {
  mpz_class l = a.num * b.den;
  mpz_class r = b.num * a.den;
  return cmp(l, r);
}

inline ratio ratio_from_mpfr(mpfr_srcptr x) {
  mpz_class m;
  mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), x);
  ratio out;
  if (e >= 0) {
    mpz_mul_2exp(out.num.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(e));
    out.den = 1;
  } else {
    out.num = m;
    mpz_set_ui(out.den.get_mpz_t(), 1);
    mpz_mul_2exp(out.den.get_mpz_t(), out.den.get_mpz_t(), static_cast<mp_bitcnt_t>(-e));
  }
  return out;
}

class hp_real {
 public:
  hp_real() = default;

  static hp_real exact(const mpq_class& q, int bits = default_precision_bits) {
    hp_real r;
    r.lo_ = ratio::from_mpq(q);
    r.hi_ = r.lo_;
    r.bits_ = bits;
    r.exact_ = true;
    return r;
  }

  static hp_real enclosure(ratio lo, ratio hi, int bits = default_precision_bits) {
    if (lo.den <= 0 || hi.den <= 0) throw error(errc::invalid_argument, "non-positive denominator");
    if (compare(lo, hi) > 0) std::swap(lo, hi);
    hp_real r;
    r.exact_ = compare(lo, hi) == 0;
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    r.bits_ = bits;
    return r;
  }

  /// Enclosure with lo < hi already known, as for the image of a non-exact
  /// enclosure under a monotone Moebius map. Skips the endpoint comparison.
  static hp_real ordered(ratio lo, ratio hi, int bits) {
    hp_real r;
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    r.bits_ = bits;
    r.exact_ = false;
    return r;
  }

  /// A double read as a real known to `bits` bits: [x - 2^-(bits+1), x + 2^-(bits+1)].
  static hp_real from_double(double x, int bits = default_precision_bits) {
    if (!std::isfinite(x)) throw error(errc::invalid_argument, "non-finite double");
    mpq_class c(x);
    mpq_class h(1);
    mpz_mul_2exp(h.get_den_mpz_t(), h.get_den_mpz_t(), static_cast<mp_bitcnt_t>(bits + 1));
    return enclosure(ratio::from_mpq(c - h), ratio::from_mpq(c + h), bits);
  }

  /// Exact value of a decimal literal such as "0.14159", "-2.5e-3" or "7".
  static hp_real from_decimal(std::string_view text, int bits = default_precision_bits) {
    return exact(parse_decimal(text), bits);
  }

  static hp_real from_mpfr(mpfr_srcptr lo, mpfr_srcptr hi, int bits) {
    return enclosure(ratio_from_mpfr(lo), ratio_from_mpfr(hi), bits);
  }

  static mpq_class parse_decimal(std::string_view text) {
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
    std::string digits;
    long frac_digits = 0;
    bool seen_point = false;
    bool any = false;
    for (; i < text.size(); ++i) {
      char c = text[i];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits.push_back(c);
        any = true;
        if (seen_point) ++frac_digits;
      } else if (c == '.' && !seen_point) {
        seen_point = true;
      } else {
        break;
      }
    }
    long exponent = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
      ++i;
      std::string exp_text(text.substr(i));
      if (exp_text.empty()) throw error(errc::invalid_argument, "malformed exponent");
      std::size_t used = 0;
      try {
        exponent = std::stol(exp_text, &used);
      } catch (const std::exception&) {
        throw error(errc::invalid_argument, "malformed exponent");
      }
      i += used;
    }
    if (!any || i != text.size()) {
      throw error(errc::invalid_argument, "not a decimal number: " + std::string(text));
    }
    mpz_class num(digits, 10);
    if (negative) num = -num;
    long scale = exponent - frac_digits;
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    mpq_class q = scale < 0 ? mpq_class(num, pow10) : mpq_class(num * pow10);
    q.canonicalize();
    return q;
  }

  const ratio& lower() const { return lo_; }
  const ratio& upper() const { return hi_; }
  bool is_exact() const { return exact_; }
  int bits() const { return bits_; }

  mpq_class midpoint() const {
    if (exact_) return lo_.to_mpq();
    return (lo_.to_mpq() + hi_.to_mpq()) / 2;
  }
  double to_double() const { return midpoint().get_d(); }

  mpq_class width() const { return hi_.to_mpq() - lo_.to_mpq(); }

  /// Remaining reliable bits, i.e. -log2(hi - lo); +inf for exact values.
  double precision_budget() const {
    if (exact_) return std::numeric_limits<double>::infinity();
    mpz_class n = hi_.num * lo_.den - lo_.num * hi_.den;
    mpz_class d = hi_.den * lo_.den;
    long en = 0;
    long ed = 0;
    double mn = mpz_get_d_2exp(&en, n.get_mpz_t());
    double md = mpz_get_d_2exp(&ed, d.get_mpz_t());
    return -(std::log2(mn) + static_cast<double>(en) - std::log2(md) - static_cast<double>(ed));
  }

  bool contains(const mpq_class& q) const {
    ratio r = ratio::from_mpq(q);
    return compare(lo_, r) <= 0 && compare(r, hi_) <= 0;
  }

  /// True when the whole enclosure lies in the open unit interval.
  bool inside_unit_interval() const {
    return sgn(lo_.num) > 0 && cmp(hi_.num, hi_.den) < 0;
  }

  real to_real(int bits) const {
    real r(0, digits10_for_bits(bits));
    mpq_class m = midpoint();
    mpfr_set_q(r.backend().data(), m.get_mpq_t(), MPFR_RNDN);
    return r;
  }
  real to_real() const { return to_real(bits_); }

 private:
  ratio lo_;
  ratio hi_;
  int bits_ = default_precision_bits;
  bool exact_ = true;
};

enum class split_status { ok, zero_remainder, uncertain, overflow };

struct reciprocal_split {
  split_status status = split_status::uncertain;
  std::uint64_t digit = 0;
  hp_real remainder;
};

/// Writes 1/x = digit + remainder with digit certified for every point of the
/// enclosure. zero_remainder only arises for exact inputs and marks the last
/// digit of a rational.
inline reciprocal_split split_reciprocal(const hp_real& x) {
  reciprocal_split out;
  const ratio& lo = x.lower();
  const ratio& hi = x.upper();
  if (sgn(lo.num) <= 0 || cmp(hi.num, hi.den) > 0) return out;

  mpz_class q_lo, r_lo, q_hi, r_hi;
  mpz_fdiv_qr(q_lo.get_mpz_t(), r_lo.get_mpz_t(), lo.den.get_mpz_t(), lo.num.get_mpz_t());
  if (x.is_exact()) {
    if (!mpz_fits_ulong_p(q_lo.get_mpz_t())) {
      out.status = split_status::overflow;
      return out;
    }
    out.digit = mpz_get_ui(q_lo.get_mpz_t());
    out.status = sgn(r_lo) == 0 ? split_status::zero_remainder : split_status::ok;
    out.remainder = hp_real::exact(mpq_class(r_lo, lo.num), x.bits());
    return out;
  }
  mpz_fdiv_qr(q_hi.get_mpz_t(), r_hi.get_mpz_t(), hi.den.get_mpz_t(), hi.num.get_mpz_t());
  if (q_lo != q_hi) return out;
  if (!mpz_fits_ulong_p(q_lo.get_mpz_t())) {
    out.status = split_status::overflow;
    return out;
  }
  out.digit = mpz_get_ui(q_lo.get_mpz_t());
  out.status = split_status::ok;
  // 1/x is decreasing: the upper endpoint of x gives the lower remainder.
  out.remainder = hp_real::ordered(ratio{std::move(r_hi), hi.num}, ratio{std::move(r_lo), lo.num}, x.bits());
  return out;
}

/// 1/(a + x), transported exactly.
inline hp_real prepend_digit(std::uint64_t a, const hp_real& x) {
  const ratio& lo = x.lower();
  const ratio& hi = x.upper();
  mpz_class d_lo = lo.den * a + lo.num;
  mpz_class d_hi = hi.den * a + hi.num;
  if (x.is_exact()) {
    return hp_real::exact(mpq_class(lo.den, d_lo), x.bits());
  }
  return hp_real::ordered(ratio{hi.den, std::move(d_hi)}, ratio{lo.den, std::move(d_lo)}, x.bits());
}

}  // namespace cfrenew

#endif  // CFRENEW_HP_REAL_HPP
