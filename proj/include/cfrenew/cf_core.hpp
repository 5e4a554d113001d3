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

#ifndef CFRENEW_CF_CORE_HPP
#define CFRENEW_CF_CORE_HPP

// Continued-fraction digits, convergents and the renewal index
//
//   n_R = min { n : q_n > R }.
//
// Denominators are exact big integers. Digits come from a digit_stream, which
// runs the Euclidean algorithm on both endpoints of an hp_real enclosure and
// stops as soon as they disagree.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfrenew/errors.hpp"
#include "cfrenew/hp_real.hpp"

namespace cfrenew {

enum class sidedness { one_sided, two_sided };

/// A contiguous window of digits a_k, k = index_origin, index_origin + 1, ...
struct digit_sequence {
  std::vector<std::uint64_t> digits;
  std::int64_t index_origin = 1;
  sidedness sided = sidedness::one_sided;

  digit_sequence() = default;
  digit_sequence(std::vector<std::uint64_t> d, std::int64_t origin = 1,
                 sidedness s = sidedness::one_sided)
      : digits(std::move(d)), index_origin(origin), sided(s) {
    validate();
  }

  void validate() const {
    for (auto a : digits) {
      if (a == 0) throw error(errc::invalid_digits, "continued-fraction digits must be >= 1");
    }
    if (sided == sidedness::one_sided && index_origin < 1) {
      throw error(errc::invalid_digits, "one-sided sequences start at index >= 1");
    }
  }

  std::size_t size() const noexcept { return digits.size(); }
  bool empty() const noexcept { return digits.empty(); }
  /// Digit a_k, with k counted from index_origin.
  std::uint64_t at(std::int64_t k) const {
    return digits.at(static_cast<std::size_t>(k - index_origin));
  }
};

enum class stop_reason { complete, rational, precision_exhausted, digit_overflow };

/// Lazily extracts certified digits of a value in (0,1).
class digit_stream {
 public:
  explicit digit_stream(hp_real x) : rest_(std::move(x)) {
    if (!rest_.is_exact() && !rest_.inside_unit_interval()) {
      // An enclosure reaching 0 or 1 cannot certify the first digit.
      stopped_ = stop_reason::precision_exhausted;
    } else if (rest_.is_exact() && !rest_.inside_unit_interval()) {
      throw error(errc::invalid_argument, "expansion requires 0 < x < 1");
    }
  }

  /// Next digit, or nullopt once the stream has stopped (see status()).
  std::optional<std::uint64_t> next() {
    if (stopped_) return std::nullopt;
    reciprocal_split s = split_reciprocal(rest_);
    switch (s.status) {
      case split_status::uncertain:
        stopped_ = rest_.is_exact() ? stop_reason::rational : stop_reason::precision_exhausted;
        return std::nullopt;
      case split_status::overflow:
        stopped_ = stop_reason::digit_overflow;
        return std::nullopt;
      case split_status::zero_remainder:
        // Last digit of an exact rational.
        stopped_ = stop_reason::rational;
        ++count_;
        rest_ = std::move(s.remainder);
        return s.digit;
      case split_status::ok:
        ++count_;
        rest_ = std::move(s.remainder);
        return s.digit;
    }
    return std::nullopt;
  }

  /// Why the stream stopped, if it has.
  std::optional<stop_reason> status() const noexcept { return stopped_; }
  std::size_t count() const noexcept { return count_; }
  /// The current remainder G^count(x).
  const hp_real& remainder() const noexcept { return rest_; }

 private:
  hp_real rest_;
  std::optional<stop_reason> stopped_;
  std::size_t count_ = 0;
};

struct expansion {
  digit_sequence digits;
  stop_reason reason = stop_reason::complete;
  double remaining_bits = 0;
};

/// Non-throwing expansion: up to n_max digits and the reason for stopping.
inline expansion expand(const hp_real& x, std::size_t n_max) {
  expansion out;
  digit_stream stream(x);
  out.digits.digits.reserve(n_max);
  while (out.digits.size() < n_max) {
    auto a = stream.next();
    if (!a) break;
    out.digits.digits.push_back(*a);
    if (stream.status()) break;
  }
  if (out.digits.size() == n_max && (!stream.status() || *stream.status() != stop_reason::rational)) {
    out.reason = stop_reason::complete;
  } else if (stream.status()) {
    out.reason = *stream.status();
  }
  out.remaining_bits = stream.remainder().precision_budget();
  return out;
}

/// First n_max digits of x in (0,1); throws rational_input when the remainder
/// vanishes and precision_exhausted when a digit cannot be certified.
inline digit_sequence expand_digits(const hp_real& x, std::size_t n_max) {
  if (n_max == 0) throw error(errc::invalid_argument, "n_max must be positive");
  expansion e = expand(x, n_max);
  switch (e.reason) {
    case stop_reason::complete: return std::move(e.digits);
    case stop_reason::rational:
      throw error(errc::rational_input, "remainder reached 0 after " + std::to_string(e.digits.size()) + " digits");
    case stop_reason::precision_exhausted:
      throw error(errc::precision_exhausted,
                  "digit " + std::to_string(e.digits.size() + 1) + " cannot be certified");
    case stop_reason::digit_overflow:
      throw error(errc::digit_overflow, "digit " + std::to_string(e.digits.size() + 1) + " exceeds 64 bits");
  }
  return std::move(e.digits);
}

struct convergent {
  mpz_class p;
  mpz_class q;
  std::size_t n = 0;
};

/// Incremental q_n / p_n recursion with q_0 = 1, q_{-1} = 0, p_0 = 0, p_{-1} = 1.
class convergent_recursion {
 public:
  void push(std::uint64_t a) {
    mpz_class q_next = q_ * a + q_prev_;
    mpz_class p_next = p_ * a + p_prev_;
    q_prev_ = std::move(q_);
    p_prev_ = std::move(p_);
    q_ = std::move(q_next);
    p_ = std::move(p_next);
    ++n_;
  }
  const mpz_class& q() const noexcept { return q_; }
  const mpz_class& q_prev() const noexcept { return q_prev_; }
  const mpz_class& p() const noexcept { return p_; }
  const mpz_class& p_prev() const noexcept { return p_prev_; }
  std::size_t n() const noexcept { return n_; }

 private:
  mpz_class q_{1}, q_prev_{0};
  mpz_class p_{0}, p_prev_{1};
  std::size_t n_ = 0;
};

inline std::vector<convergent> convergents(const digit_sequence& digits) {
  if (digits.empty()) throw error(errc::invalid_digits, "empty digit sequence");
  if (digits.sided != sidedness::one_sided || digits.index_origin != 1) {
    throw error(errc::invalid_digits, "convergents need a one-sided sequence starting at a_1");
  }
  digits.validate();
  std::vector<convergent> out;
  out.reserve(digits.size());
  convergent_recursion rec;
  for (auto a : digits.digits) {
    rec.push(a);
    out.push_back(convergent{rec.p(), rec.q(), rec.n()});
  }
  return out;
}

/// head + 1/(a_1 + 1/(... + 1/a_n)) as an exact rational.
inline mpq_class evaluate_cf_exact(const digit_sequence& digits, std::uint64_t head = 0) {
  digits.validate();
  mpq_class x(0);
  for (auto it = digits.digits.rbegin(); it != digits.digits.rend(); ++it) {
    mpq_class denom = x + mpq_class(mpz_class(static_cast<unsigned long>(*it)));
    x = 1 / denom;
  }
  return x + mpq_class(mpz_class(static_cast<unsigned long>(head)));
}

inline double evaluate_cf(const digit_sequence& digits, std::uint64_t head = 0) {
  return evaluate_cf_exact(digits, head).get_d();
}

struct renewal_result {
  std::size_t n_R = 0;
  mpz_class q_nR;
  mpz_class q_prev;
  double ratio = 0;
  /// trailing_digits[k] = a_{n_R - k}.
  std::vector<std::uint64_t> trailing_digits;
};

/// Integer threshold equivalent to R: for integers q, q > R iff q > floor(R).
/// R is the double nearest the caller's value and is used exactly from there.
inline mpz_class renewal_threshold(double R) {
  if (!(R >= 1) || !std::isfinite(R)) throw error(errc::invalid_argument, "R must be a finite real >= 1");
  mpz_class t;
  mpz_set_d(t.get_mpz_t(), std::floor(R));
  return t;
}

/// Renewal index over any digit source `next()` returning optional digits.
/// Returns nullopt when the source runs dry before some q_n exceeds R.
template <class NextDigit>
std::optional<renewal_result> renewal_index_from(NextDigit&& next, double R, std::size_t N,
                                                 std::vector<std::uint64_t>* seen = nullptr) {
  const mpz_class threshold = renewal_threshold(R);
  convergent_recursion rec;
  std::vector<std::uint64_t> local;
  std::vector<std::uint64_t>& window = seen ? *seen : local;
  window.clear();
  while (true) {
    std::optional<std::uint64_t> a = next();
    if (!a) return std::nullopt;
    window.push_back(*a);
    rec.push(*a);
    if (rec.q() > threshold) break;
  }
  renewal_result out;
  out.n_R = rec.n();
  out.q_nR = rec.q();
  out.q_prev = rec.q_prev();
  mpq_class r(out.q_nR);
  r /= mpq_class(R);
  out.ratio = r.get_d();
  if (out.n_R < N) {
    throw error(errc::trailing_underflow,
                "n_R = " + std::to_string(out.n_R) + " < N = " + std::to_string(N));
  }
  out.trailing_digits.reserve(N);
  for (std::size_t k = 0; k < N; ++k) out.trailing_digits.push_back(window[out.n_R - 1 - k]);
  return out;
}

inline renewal_result renewal_index(const digit_sequence& digits, double R, std::size_t N = 0) {
  if (digits.sided != sidedness::one_sided || digits.index_origin != 1) {
    throw error(errc::invalid_digits, "renewal index needs a one-sided sequence starting at a_1");
  }
  digits.validate();
  std::size_t i = 0;
  auto next = [&]() -> std::optional<std::uint64_t> {
    if (i == digits.size()) return std::nullopt;
    return digits.digits[i++];
  };
  auto r = renewal_index_from(next, R, N);
  if (!r) {
    throw error(errc::insufficient_digits,
                "no q_n exceeds R within " + std::to_string(digits.size()) + " digits");
  }
  return std::move(*r);
}

/// Natural log of a positive big integer.
inline double log_mpz(const mpz_class& z) {
  long e = 0;
  double m = mpz_get_d_2exp(&e, z.get_mpz_t());
  return std::log(m) + static_cast<double>(e) * 0.69314718055994530942;
}

/// ln q_n through two routes: the big-integer logarithm and the telescoping sum
/// of ln [a_k; a_{k-1}, ..., a_1]. Throws std::logic_error if they disagree.
inline double log_q(const digit_sequence& digits, std::size_t n) {
  if (n == 0 || n > digits.size()) throw error(errc::invalid_argument, "log_q index out of range");
  digit_sequence head(std::vector<std::uint64_t>(digits.digits.begin(), digits.digits.begin() + n));
  convergent_recursion rec;
  for (auto a : head.digits) rec.push(a);
  const double direct = log_mpz(rec.q());

  long double ratio = 0;
  long double sum = 0;
  long double compensation = 0;
  for (auto a : head.digits) {
    ratio = static_cast<long double>(a) + (ratio == 0 ? 0.0L : 1.0L / ratio);
    long double term = std::log(ratio) - compensation;
    long double t = sum + term;
    compensation = (t - sum) - term;
    sum = t;
  }
  const double telescoped = static_cast<double>(sum);
  const double scale = std::max(1.0, std::abs(direct));
  if (std::abs(direct - telescoped) > 1e-12 * scale) {
    throw std::logic_error("log_q routes disagree: " + std::to_string(direct) + " vs " +
                           std::to_string(telescoped));
  }
  return direct;
}

}  // namespace cfrenew

#endif  // CFRENEW_CF_CORE_HPP
