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

#ifndef CFRENEW_MIXING_DIAG_HPP
#define CFRENEW_MIXING_DIAG_HPP

// Leaves of the special flow and the mixing diagnostics built on them.
//
//   stable leaf through (a-_0, a+_0, y_0):   a+ = a+_0,  y = y_0 + ln((1 + a- a+_0) / (1 + a-_0 a+_0))
//   unstable leaf:                           a- = a-_0,  y = y_0
//
// The quantity a+ e^y / (1 + a- a+) is constant along stable leaves and along
// unstable leaves it varies with a+; two points of a chart are joined by a
// stable-unstable-stable chain exactly when their invariants differ.

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfrenew/errors.hpp"
#include "cfrenew/gauss_system.hpp"
#include "cfrenew/hp_real.hpp"
#include "cfrenew/parallel.hpp"
#include "cfrenew/rng.hpp"
#include "cfrenew/special_flow.hpp"

namespace cfrenew {

inline constexpr double chart_size = 0.1;
inline constexpr double holonomy_tie_tolerance = 1e-12;

/// A tight enclosure [x - ulp, x + ulp] around an MPFR value.
inline hp_real enclose(const real& x, int bits) {
  const mpfr_prec_t prec = mpfr_get_prec(x.backend().data());
  mpfr_t lo, hi;
  mpfr_init2(lo, prec);
  mpfr_init2(hi, prec);
  mpfr_set(lo, x.backend().data(), MPFR_RNDN);
  mpfr_set(hi, x.backend().data(), MPFR_RNDN);
  mpfr_nextbelow(lo);
  mpfr_nextabove(hi);
  hp_real out = hp_real::from_mpfr(lo, hi, bits);
  mpfr_clear(lo);
  mpfr_clear(hi);
  return out;
}

/// Point of the stable leaf through `base` with backward coordinate `minus`;
/// nullopt when the leaf leaves the chart (height outside [0, phi)).
inline std::optional<flow_point> stable_leaf_point(const flow_point& base, const hp_real& minus) {
  const int bits = base.bits();
  const real m0 = base.base.minus().to_real(bits);
  const real p0 = base.base.plus().to_real(bits);
  const real m = minus.to_real(bits);
  real y = base.height + log((1 + m * p0) / (1 + m0 * p0));
  if (!minus.inside_unit_interval()) return std::nullopt;
  natural_ext_point x(minus, base.base.plus());
  if (y < 0 || y >= roof_phi(x)) return std::nullopt;
  return flow_point(std::move(x), std::move(y));
}

/// Point of the unstable leaf through `base` with forward coordinate `plus`.
inline std::optional<flow_point> unstable_leaf_point(const flow_point& base, const hp_real& plus) {
  if (!plus.inside_unit_interval()) return std::nullopt;
  natural_ext_point x(base.base.minus(), plus);
  if (!x.a1() || base.height >= roof_phi(x)) return std::nullopt;
  return flow_point(std::move(x), base.height);
}

/// a+ e^y / (1 + a- a+).
inline real holonomy_invariant(const flow_point& fp) {
  const int bits = fp.bits();
  const real m = fp.base.minus().to_real(bits);
  const real p = fp.base.plus().to_real(bits);
  return p * exp(fp.height) / (1 + m * p);
}

inline double chart_distance(const flow_point& p, const flow_point& q) {
  const double dm = std::abs(p.base.minus().to_double() - q.base.minus().to_double());
  const double dp = std::abs(p.base.plus().to_double() - q.base.plus().to_double());
  const double dy = std::abs(static_cast<double>(real(p.height - q.height)));
  return std::max({dm, dp, dy});
}

struct leaf_chain {
  bool reachable = false;
  std::string reason;
  /// ((s, a+_0), y_1) on the stable leaf of `from` and ((s, a+), y_1) on the
  /// stable leaf of `to`, joined by an unstable segment.
  std::vector<flow_point> points;
};

/// Stable-unstable-stable chain from `from` to `to`. With
/// K = e^y / (1 + a- a+) the middle backward coordinate is
///
///   s = (K - K_0) / (K_0 a+_0 - K a+),   y_1 = y_0 + ln((1 + s a+_0) / (1 + a-_0 a+_0)).
inline leaf_chain connect_via_leaves(const flow_point& from, const flow_point& to) {
  if (chart_distance(from, to) > chart_size) {
    throw error(errc::out_of_chart, "points are more than one chart apart");
  }
  leaf_chain out;
  const int bits = std::min(from.bits(), to.bits());
  const real m0 = from.base.minus().to_real(bits);
  const real p0 = from.base.plus().to_real(bits);
  const real m = to.base.minus().to_real(bits);
  const real p = to.base.plus().to_real(bits);
  if (m0 == m && p0 == p && from.height == to.height) {
    out.reachable = true;
    out.points = {from, from};
    return out;
  }
  const real K0 = exp(from.height) / (1 + m0 * p0);
  const real K = exp(to.height) / (1 + m * p);
  const real inv0 = K0 * p0;
  const real inv = K * p;
  if (abs(inv - inv0) <= holonomy_tie_tolerance * abs(inv)) {
    out.reason = "equal holonomy invariants";
    return out;
  }
  const real s = (K - K0) / (inv0 - inv);
  if (!(s > 0 && s < 1) || abs(s - m0) > chart_size || abs(s - m) > chart_size) {
    out.reason = "connecting coordinate leaves the chart";
    return out;
  }
  const hp_real s_enc = enclose(s, bits);
  std::optional<flow_point> first = stable_leaf_point(from, s_enc);
  if (!first) {
    out.reason = "first stable segment leaves the chart";
    return out;
  }
  std::optional<flow_point> second = unstable_leaf_point(*first, to.base.plus());
  if (!second) {
    out.reason = "unstable segment leaves the chart";
    return out;
  }
  out.reachable = true;
  out.points = {std::move(*first), std::move(*second)};
  return out;
}

// ---------------------------------------------------------------------------
// Contraction along leaves

struct trace_sample {
  double t = 0;
  bool aligned = false;  // both orbits have crossed the roof equally often
  double distance = 0;   // chart distance, meaningful only when aligned
};

/// Distance between Phi_t(p) and Phi_t(q) at t = 0, dt, ..., t_max (or the
/// negatives for backward = true). Orbits are compared only while their jump
/// counts agree; after a simultaneous crossing they are compared again.
inline std::vector<trace_sample> contraction_trace(const flow_point& p, const flow_point& q, double t_max, double dt,
                                                   bool backward = false) {
  if (!(dt > 0) || !(t_max >= 0)) throw error(errc::invalid_argument, "trace needs dt > 0 and t_max >= 0");
  std::vector<trace_sample> out;
  flow_point a = p, b = q;
  std::int64_t ja = 0, jb = 0;
  const double step = backward ? -dt : dt;
  const auto n = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    if (i > 0) {
      flow_result ra = flow_evolve(a, step);
      flow_result rb = flow_evolve(b, step);
      a = std::move(ra.point);
      b = std::move(rb.point);
      ja += ra.jumps;
      jb += rb.jumps;
    }
    trace_sample s;
    s.t = static_cast<double>(i) * dt;
    s.aligned = ja == jb;
    if (s.aligned) s.distance = chart_distance(a, b);
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation decay

/// (cylinder of the base) x [y_lo, y_hi).
struct flow_box {
  cylinder base;
  double y_lo = 0;
  double y_hi = 0;
};

struct correlation_point {
  double t = 0;
  double value = 0;  // mu3(Phi_-t A  cap  B) - mu3(A) mu3(B)
  double standard_error = 0;
  double mu_a = 0;
  double mu_b = 0;
};

struct correlation_options {
  std::uint64_t seed = 20260101;
  int start_bits = 192;
  int max_bits = 4096;
  unsigned workers = 0;
  std::uint64_t block_size = 4096;
  double max_rejected_fraction = 1e-3;
};

namespace detail {

/// Lazy two-sided digits and double-precision roof values of one orbit.
class orbit_digits {
 public:
  orbit_digits(const natural_ext_point& p) : plus_(p.plus()), minus_(p.minus()), alpha_minus_(p.minus().to_double()) {}

  /// a_k for any k (k >= 1 from alpha+, k <= 0 from alpha-).
  std::uint64_t digit(std::int64_t k) {
    if (k >= 1) {
      while (static_cast<std::int64_t>(forward_.size()) < k) {
        auto a = plus_.next();
        if (!a) throw error(errc::precision_exhausted, "alpha+ digit not certified");
        forward_.push_back(*a);
      }
      return forward_[static_cast<std::size_t>(k - 1)];
    }
    while (static_cast<std::int64_t>(backward_.size()) < 1 - k) {
      auto a = minus_.next();
      if (!a) throw error(errc::precision_exhausted, "alpha- digit not certified");
      backward_.push_back(*a);
    }
    return backward_[static_cast<std::size_t>(-k)];
  }

  /// phi(G^r p) for r = 0, 1, ... in order.
  double next_roof() {
    const std::uint64_t a = digit(static_cast<std::int64_t>(steps_) + 1);
    const double phi = std::log(static_cast<double>(a) + alpha_minus_);
    alpha_minus_ = 1.0 / (static_cast<double>(a) + alpha_minus_);
    ++steps_;
    return phi;
  }

 private:
  digit_stream plus_;
  digit_stream minus_;
  std::vector<std::uint64_t> forward_;
  std::vector<std::uint64_t> backward_;
  double alpha_minus_;
  std::size_t steps_ = 0;
};

inline bool in_box(orbit_digits& orbit, std::int64_t shift, double y, const flow_box& box) {
  if (!(y >= box.y_lo && y < box.y_hi)) return false;
  for (std::size_t i = 0; i < box.base.digits.size(); ++i) {
    const std::int64_t k = box.base.first_index + static_cast<std::int64_t>(i) + shift;
    if (orbit.digit(k) != box.base.digits[i]) return false;
  }
  return true;
}

struct correlation_sums {
  // Weighted sums of 1, z = a b, a, b with weights w and w^2, per time.
  std::vector<double> w, wz, wa, wb, w2, w2z, w2a, w2b;
  double wb0 = 0;
  std::uint64_t rejected = 0;

  explicit correlation_sums(std::size_t n = 0)
      : w(n), wz(n), wa(n), wb(n), w2(n), w2z(n), w2a(n), w2b(n) {}
};

}  // namespace detail

/// Self-normalized estimate of mu3(Phi_-t A cap B) - mu3(A) mu3(B): x ~ mu2
/// with weight phi(x), y uniform on [0, phi(x)), B tested at (x, y) and A at
/// Phi_t(x, y). The standard error comes from the influence function of the
/// ratio estimator. Heights are tracked in double precision; digits are exact.
inline std::vector<correlation_point> correlation_estimate(const flow_box& A, const flow_box& B,
                                                           std::vector<double> times, std::uint64_t M,
                                                           const correlation_options& opt = {}) {
  if (M == 0) throw error(errc::invalid_sample_count, "M must be >= 1");
  for (double t : times) {
    if (!(t >= 0) || !std::isfinite(t)) throw error(errc::invalid_argument, "correlation times must be >= 0");
  }
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return times[i] < times[j]; });
  const std::size_t nt = times.size();

  auto blocks = map_blocks(M, opt.block_size, opt.workers, [&](std::uint64_t begin, std::uint64_t end) {
    detail::correlation_sums s(nt);
    for (std::uint64_t i = begin; i < end; ++i) {
      random_stream rng(opt.seed, i);
      const mpq_class u = rng.next_dyadic().value();
      const mpq_class v = rng.next_dyadic().value();
      const double h = rng.next_double();
      bool done = false;
      for (int bits = opt.start_bits; !done; bits *= 2) {
        try {
          const natural_ext_point x = mu2_from_uniforms(u, v, bits);
          detail::orbit_digits orbit(x);
          std::vector<double> roofs;
          roofs.push_back(orbit.next_roof());
          const double w = roofs[0];
          const double y = h * w;
          const double b = detail::in_box(orbit, 0, y, B) ? 1.0 : 0.0;
          std::vector<double> a(nt);
          std::int64_t r = 0;  // completed jumps
          double height = y;
          double elapsed = 0;
          for (std::size_t oi : order) {
            height += times[oi] - elapsed;
            elapsed = times[oi];
            while (height >= roofs[static_cast<std::size_t>(r)]) {
              height -= roofs[static_cast<std::size_t>(r)];
              ++r;
              roofs.push_back(orbit.next_roof());
            }
            a[oi] = detail::in_box(orbit, r, height, A) ? 1.0 : 0.0;
          }
          for (std::size_t k = 0; k < nt; ++k) {
            const double z = a[k] * b;
            s.w[k] += w;
            s.wz[k] += w * z;
            s.wa[k] += w * a[k];
            s.wb[k] += w * b;
            s.w2[k] += w * w;
            s.w2z[k] += w * w * z;
            s.w2a[k] += w * w * a[k];
            s.w2b[k] += w * w * b;
          }
          done = true;
        } catch (const error& e) {
          if (e.code() != errc::precision_exhausted) throw;
          if (bits >= opt.max_bits) {
            ++s.rejected;
            done = true;
          }
        }
      }
    }
    return s;
  });

  detail::correlation_sums total(nt);
  for (const auto& b : blocks) {
    total.rejected += b.rejected;
    for (std::size_t k = 0; k < nt; ++k) {
      total.w[k] += b.w[k];
      total.wz[k] += b.wz[k];
      total.wa[k] += b.wa[k];
      total.wb[k] += b.wb[k];
      total.w2[k] += b.w2[k];
      total.w2z[k] += b.w2z[k];
      total.w2a[k] += b.w2a[k];
      total.w2b[k] += b.w2b[k];
    }
  }
  if (static_cast<double>(total.rejected) > opt.max_rejected_fraction * static_cast<double>(M)) {
    throw error(errc::budget_exceeded, std::to_string(total.rejected) + " of " + std::to_string(M) +
                                           " samples rejected for precision");
  }

  std::vector<correlation_point> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const double W = total.w[k];
    const double mab = total.wz[k] / W;
    const double ma = total.wa[k] / W;
    const double mb = total.wb[k] / W;
    // Influence of unit i: (w_i / mean w) (z_i - mb a_i - ma b_i + c0), c0 = 2 ma mb - mab.
    // Indicators make z^2 = z a = z b = a b = z, a^2 = a, b^2 = b.
    const double c0 = 2 * ma * mb - mab;
    const double sum_e2 = total.w2z[k] * (1 - 2 * mb - 2 * ma + 2 * c0 + 2 * ma * mb) +
                          total.w2a[k] * (mb * mb - 2 * c0 * mb) + total.w2b[k] * (ma * ma - 2 * c0 * ma) +
                          total.w2[k] * c0 * c0;
    const double n = static_cast<double>(M - total.rejected);
    const double mean_w = W / n;
    const double var = std::max(0.0, sum_e2) / (mean_w * mean_w) / (n * n);
    out[k] = {times[k], mab - ma * mb, std::sqrt(var), ma, mb};
  }
  return out;
}

}  // namespace cfrenew

#endif  // CFRENEW_MIXING_DIAG_HPP
