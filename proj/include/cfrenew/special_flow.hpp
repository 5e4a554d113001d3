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

#ifndef CFRENEW_SPECIAL_FLOW_HPP
#define CFRENEW_SPECIAL_FLOW_HPP

// The special flow over the natural extension with roof
//
//   phi(alpha-, alpha+) = ln(a_1 + alpha-) = -ln (G^ alpha)^-,
//
// Birkhoff sums S_r phi, the correction f = lim (ln q_n - S_n phi), the
// renewal time r(x, t) and the flow itself. Heights are MPFR reals at the
// precision of the base point.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "cfrenew/cf_core.hpp"
#include "cfrenew/errors.hpp"
#include "cfrenew/gauss_system.hpp"
#include "cfrenew/hp_real.hpp"

namespace cfrenew {

inline real real_zero(int bits) { return real(0, digits10_for_bits(bits)); }

/// ln(a_1 + alpha-) at the precision of the point.
inline real roof_phi(const natural_ext_point& p) {
  real x = p.minus().to_real(p.bits());
  x += p.require_a1();
  return log(x);
}

/// Double-precision roof, for Monte-Carlo paths that only need indicators.
inline double roof_phi_double(const natural_ext_point& p) {
  return std::log(static_cast<double>(p.require_a1()) + p.minus().to_double());
}

/// S_r phi(p) = sum_{i<r} phi(G^i p).
inline real birkhoff_sum(const natural_ext_point& p, std::size_t r) {
  real s = real_zero(p.bits());
  natural_ext_point x = p;
  for (std::size_t i = 0; i < r; ++i) {
    s += roof_phi(x);
    if (i + 1 < r) x = natural_extension_step(x);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Correction function

struct correction_series {
  std::vector<double> partials;    // f_0 = 0, f_1, ..., f_n
  std::vector<double> increments;  // f_{k+1} - f_k
  double limit = 0;
  double error_bound = 0;  // 2^(3-n)

  std::size_t terms() const noexcept { return increments.size(); }
};

/// f_n = ln q_n - S_n phi through its increments
///
///   f_{k+1} - f_k = ln(a_{k+1} + q_{k-1}/q_k) - ln(a_{k+1} + alpha-_k)
///                 = log1p((q_{k-1}/q_k - alpha-_k) / (a_{k+1} + alpha-_k)),
///
/// where alpha-_k is the backward coordinate of G^k p. The difference inside
/// the log1p is formed exactly, so the partials carry no cancellation error.
/// Stops at the first n with 2^(3-n) < tol.
inline correction_series correction_f(const natural_ext_point& p, double tol = 1e-9) {
  if (!(tol > 0)) throw error(errc::invalid_argument, "tol must be positive");
  std::size_t n = 0;
  while (std::ldexp(1.0, 3 - static_cast<int>(n)) >= tol) ++n;

  correction_series out;
  out.partials.reserve(n + 1);
  out.increments.reserve(n);
  out.partials.push_back(0.0);
  digit_stream plus(p.plus());
  hp_real minus = p.minus();
  mpz_class q_prev = 0;
  mpz_class q = 1;
  double f = 0;
  for (std::size_t k = 0; k < n; ++k) {
    std::optional<std::uint64_t> a = plus.next();
    if (!a) throw error(errc::precision_exhausted, "alpha+ digit " + std::to_string(k + 1) + " not certified");
    const mpq_class am = minus.midpoint();
    mpq_class diff = mpq_class(q_prev, q) - am;
    diff.canonicalize();
    mpq_class ratio = diff / (am + *a);
    const double delta = std::log1p(ratio.get_d());
    f += delta;
    out.increments.push_back(delta);
    out.partials.push_back(f);
    mpz_class q_next = q * *a + q_prev;
    q_prev = std::move(q);
    q = std::move(q_next);
    minus = prepend_digit(*a, minus);
  }
  out.limit = f;
  out.error_bound = std::ldexp(1.0, 3 - static_cast<int>(n));
  return out;
}

/// Reference value of f on a two-sided cylinder: f at the point of the
/// cylinder whose unconstrained digits are all 1 (golden tails on both sides).
inline double cylinder_reference_f(const std::vector<std::uint64_t>& backward, const std::vector<std::uint64_t>& forward,
                                   int bits = 512, double tol = 1e-9) {
  const mpfr_prec_t prec = bits + 16;
  mpfr_t lo, hi;
  mpfr_init2(lo, prec);
  mpfr_init2(hi, prec);
  // g = (sqrt 5 - 1) / 2, enclosed.
  mpfr_set_ui(lo, 5, MPFR_RNDN);
  mpfr_set_ui(hi, 5, MPFR_RNDN);
  mpfr_sqrt(lo, lo, MPFR_RNDD);
  mpfr_sqrt(hi, hi, MPFR_RNDU);
  mpfr_sub_ui(lo, lo, 1, MPFR_RNDD);
  mpfr_sub_ui(hi, hi, 1, MPFR_RNDU);
  mpfr_div_2ui(lo, lo, 1, MPFR_RNDD);
  mpfr_div_2ui(hi, hi, 1, MPFR_RNDU);
  const hp_real golden = hp_real::from_mpfr(lo, hi, bits);
  mpfr_clear(lo);
  mpfr_clear(hi);

  auto build = [&](const std::vector<std::uint64_t>& d) {
    hp_real x = golden;
    for (auto it = d.rbegin(); it != d.rend(); ++it) x = prepend_digit(*it, x);
    return x;
  };
  return correction_f(natural_ext_point(build(backward), build(forward)), tol).limit;
}

// ---------------------------------------------------------------------------
// Renewal time and the flow

/// Minimal r with S_r phi(p) > t.
inline std::size_t renewal_time(const natural_ext_point& p, const real& t) {
  if (t < 0) throw error(errc::invalid_argument, "renewal time needs t >= 0");
  real s = real_zero(p.bits());
  natural_ext_point x = p;
  std::size_t r = 0;
  while (true) {
    s += roof_phi(x);
    ++r;
    if (s > t) return r;
    x = natural_extension_step(x);
  }
}

inline std::size_t renewal_time(const natural_ext_point& p, double t) {
  real tt = real_zero(p.bits());
  tt = t;
  return renewal_time(p, tt);
}

/// A point (x, y) of the phase space, 0 <= y < phi(x).
struct flow_point {
  natural_ext_point base;
  real height;

  flow_point(natural_ext_point x, real y) : base(std::move(x)), height(std::move(y)) {
    if (height < 0 || height >= roof_phi(base)) {
      throw error(errc::invalid_argument, "height outside [0, phi(x))");
    }
  }
  flow_point(natural_ext_point x, double y) : flow_point(x, from_double(y, x.bits())) {}

  int bits() const noexcept { return base.bits(); }

 private:
  static real from_double(double y, int bits) {
    real r = real_zero(bits);
    r = y;
    return r;
  }
};

struct flow_result {
  flow_point point;
  std::int64_t jumps = 0;  // signed number of roof crossings
};

/// Phi_t: vertical motion at unit speed, (x, phi(x)) identified with (G^ x, 0).
/// Negative t runs the inverse extension map; y = 0 belongs to the fiber above.
inline flow_result flow_evolve(const flow_point& fp, const real& t) {
  natural_ext_point x = fp.base;
  real y = fp.height + t;
  std::int64_t jumps = 0;
  if (t >= 0) {
    real phi = roof_phi(x);
    while (y >= phi) {
      y -= phi;
      x = natural_extension_step(x);
      phi = roof_phi(x);
      ++jumps;
    }
  } else {
    while (y < 0) {
      x = natural_extension_inverse(x);
      y += roof_phi(x);
      --jumps;
    }
  }
  return {flow_point(std::move(x), std::move(y)), jumps};
}

inline flow_result flow_evolve(const flow_point& fp, double t) {
  real tt = real_zero(fp.bits());
  tt = t;
  return flow_evolve(fp, tt);
}

// ---------------------------------------------------------------------------
// Renewal index against the renewal time

struct renewal_flow_report {
  std::size_t n_R = 0;
  std::size_t r_T = 0;
  double T = 0;
  bool equal = false;
  double defect = 0;  // |ln q_{n_R} - S_{n_R} phi - f(p)|
  double bound = 0;   // 2^(3 - n_R)
};

inline renewal_flow_report renewal_vs_flow_check(const natural_ext_point& p, double R, double f_ref) {
  digit_stream s(p.plus());
  auto next = [&] { return s.next(); };
  std::optional<renewal_result> rr = renewal_index_from(next, R, 0);
  if (!rr) throw error(errc::precision_exhausted, "alpha+ digits ran out before q_n > R");

  renewal_flow_report out;
  out.n_R = rr->n_R;
  out.T = std::log(R) - f_ref;
  out.r_T = renewal_time(p, out.T);
  out.equal = out.n_R == out.r_T;

  const correction_series f = correction_f(p, 1e-12);
  const real S = birkhoff_sum(p, out.n_R);
  real lq = real_zero(p.bits());
  mpfr_set_z(lq.backend().data(), rr->q_nR.get_mpz_t(), MPFR_RNDN);
  lq = log(lq);
  const double fn = static_cast<double>(real(lq - S));
  out.defect = std::abs(fn - f.limit);
  out.bound = std::ldexp(1.0, 3 - static_cast<int>(out.n_R));
  return out;
}

}  // namespace cfrenew

#endif  // CFRENEW_SPECIAL_FLOW_HPP
