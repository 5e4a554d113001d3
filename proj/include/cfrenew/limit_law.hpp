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

#ifndef CFRENEW_LIMIT_LAW_HPP
#define CFRENEW_LIMIT_LAW_HPP

// The joint law of (q_{n_R} / R, a_{n_R}, ..., a_{n_R - N + 1}): Monte-Carlo
// estimates at finite R, and the limit
//
//   P_N((a, b), c) = (1/Z) int_{C_N} |{0 <= y < phi : phi - ln b < y < phi - ln a}| d mu2,
//   Z = int phi d mu2,
//
// by quadrature. C_N fixes a_1(alpha+) = c_0 and the leading digits of alpha-
// to c_1, ..., c_{N-1}. Off those constraints the integrand depends on alpha+
// only through a_1, so the domain is cut into strips a_1 = k; phi = ln(k + alpha-)
// is analytic on each strip.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfrenew/cf_core.hpp"
#include "cfrenew/errors.hpp"
#include "cfrenew/gauss_system.hpp"
#include "cfrenew/parallel.hpp"
#include "cfrenew/quadrature.hpp"
#include "cfrenew/rng.hpp"

namespace cfrenew {

using digit_tuple = std::vector<std::uint64_t>;

// ---------------------------------------------------------------------------
// Tables

/// Ratio bins [e_0, e_1), ..., [e_{m-2}, e_{m-1}) plus the overflow row
/// [e_{m-1}, inf); digit columns for each listed tuple plus an "other" column.
struct distribution_table {
  std::string kind = "empirical";  // or "theoretical"
  std::size_t N = 0;
  std::vector<double> edges;
  std::vector<digit_tuple> tuples;
  std::vector<double> mass;   // row-major, rows() x cols()
  std::vector<double> error;  // standard error (empirical) or error bound (theoretical)
  std::vector<std::uint64_t> counts;  // empirical only
  std::uint64_t sample_count = 0;
  std::uint64_t rejected = 0;
  std::optional<double> R;
  double normalization = 0;  // Z for theoretical tables
  double normalization_error = 0;
  nlohmann::json config = nlohmann::json::object();

  std::size_t rows() const noexcept { return edges.size(); }
  std::size_t cols() const noexcept { return tuples.size() + 1; }
  std::size_t other_column() const noexcept { return tuples.size(); }
  double& at(std::size_t r, std::size_t c) { return mass[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return mass[r * cols() + c]; }
  double err(std::size_t r, std::size_t c) const { return error[r * cols() + c]; }

  double row_upper(std::size_t r) const {
    return r + 1 < edges.size() ? edges[r + 1] : std::numeric_limits<double>::infinity();
  }

  void resize() {
    mass.assign(rows() * cols(), 0.0);
    error.assign(rows() * cols(), 0.0);
  }

  double total_mass() const {
    double s = 0;
    for (double m : mass) s += m;
    return s;
  }

  std::vector<double> ratio_marginal() const {
    std::vector<double> out(rows(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < cols(); ++c) out[r] += at(r, c);
    }
    return out;
  }

  std::vector<double> digit_marginal() const {
    std::vector<double> out(cols(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < cols(); ++c) out[c] += at(r, c);
    }
    return out;
  }

  std::optional<std::size_t> column_of(const digit_tuple& t) const {
    auto it = std::find(tuples.begin(), tuples.end(), t);
    if (it == tuples.end()) return std::nullopt;
    return static_cast<std::size_t>(it - tuples.begin());
  }
};

inline void validate_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw error(errc::invalid_bins, "need at least two ratio edges");
  if (edges.front() != 1.0) throw error(errc::invalid_bins, "ratio edges must start at 1");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) throw error(errc::invalid_bins, "ratio edges must be finite");
    if (i > 0 && !(edges[i] > edges[i - 1])) throw error(errc::invalid_bins, "ratio edges must increase strictly");
  }
}

/// exp(j * step) for j = 0..count.
inline std::vector<double> log_spaced_edges(double step = 0.05, int count = 120) {
  if (!(step > 0) || count < 1) throw error(errc::invalid_bins, "log-spaced edges need step > 0 and count >= 1");
  std::vector<double> e;
  e.reserve(static_cast<std::size_t>(count) + 1);
  for (int j = 0; j <= count; ++j) e.push_back(std::exp(step * j));
  e.front() = 1.0;
  return e;
}

/// Every N-tuple with entries in 1..cap, lexicographic.
inline std::vector<digit_tuple> all_tuples(std::size_t N, std::uint64_t cap) {
  std::vector<digit_tuple> out;
  if (N == 0) return {digit_tuple{}};
  if (cap == 0) throw error(errc::invalid_argument, "tuple cap must be >= 1");
  digit_tuple t(N, 1);
  while (true) {
    out.push_back(t);
    std::size_t i = N;
    while (i > 0 && t[i - 1] == cap) t[--i] = 1;
    if (i == 0) break;
    ++t[i - 1];
  }
  return out;
}

/// Default columns: a_{n_R} in 1..10 for N = 1, 1..5 for N = 2, 1..3 beyond.
inline std::vector<digit_tuple> default_tuples(std::size_t N) {
  const std::uint64_t cap = N <= 1 ? 10 : (N == 2 ? 5 : 3);
  return all_tuples(N, cap);
}

inline void validate_tuples(std::size_t N, const std::vector<digit_tuple>& tuples) {
  for (const auto& t : tuples) {
    if (t.size() != N) throw error(errc::invalid_digits, "tuple length differs from N");
    for (auto d : t) {
      if (d == 0) throw error(errc::invalid_digits, "digits must be >= 1");
    }
  }
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    for (std::size_t j = i + 1; j < tuples.size(); ++j) {
      if (tuples[i] == tuples[j]) throw error(errc::invalid_digits, "duplicate digit tuple");
    }
  }
}

// ---------------------------------------------------------------------------
// Limit law by quadrature

/// Length of {0 <= y < phi} intersected with (phi - ln b, phi - ln a).
inline double region_fiber_length(double phi, double ln_a, double ln_b) {
  if (phi <= ln_a) return 0.0;
  if (phi <= ln_b) return phi - ln_a;
  return ln_b - ln_a;
}

/// mu1(a_1 = k) = log2(1 + 1/(k(k+2))).
inline double strip_mass(std::uint64_t k) {
  const double kd = static_cast<double>(k);
  return std::log1p(1.0 / (kd * (kd + 2.0))) / std::numbers::ln2;
}

/// sum_{k=k1}^{k2} mu1(a_1 = k); k2 = 0 means infinity.
inline double strip_mass_sum(std::uint64_t k1, std::uint64_t k2 = 0) {
  const double a = static_cast<double>(k1);
  if (k2 == 0) return std::log1p(1.0 / a) / std::numbers::ln2;
  if (k2 < k1) return 0.0;
  const double b = static_cast<double>(k2);
  return (std::log1p(1.0 / a) - std::log1p(1.0 / (b + 1.0))) / std::numbers::ln2;
}

struct estimate {
  double value = 0;
  double error = 0;
};

namespace detail {

/// Bounds sum_{k=k1}^{k2} ln(k) m_k <= sum J_k <= sum_{k=k1}^{k2} ln(k+1) m_k
/// (k2 = 0 means infinity), as midpoint and half-width. Explicit up to 2^21;
/// beyond that the sums are replaced by int ln x / (ln 2 x^2) dx.
inline estimate strip_phi_bracket(std::uint64_t k1, std::uint64_t k2) {
  constexpr std::uint64_t explicit_limit = std::uint64_t{1} << 21;
  long double lo = 0, hi = 0;
  const std::uint64_t stop = k2 == 0 ? explicit_limit : std::min(k2, explicit_limit);
  for (std::uint64_t k = k1; k <= stop; ++k) {
    const long double m = strip_mass(k);
    lo += std::log(static_cast<long double>(k)) * m;
    hi += std::log(static_cast<long double>(k) + 1.0L) * m;
  }
  auto tail_integral = [](double x) { return (std::log(x) + 1.0) / (x * std::numbers::ln2); };
  if (k2 == 0 || k2 > explicit_limit) {
    const double from = static_cast<double>(std::max(k1, explicit_limit + 1)) - 0.5;
    double t = tail_integral(from);
    if (k2 != 0) t -= tail_integral(static_cast<double>(k2) + 0.5);
    lo += t;
    hi += t;
    // Slack for the integral replacement and for ln(k+1) - ln k ~ 1/k.
    hi += 2.0 / (from * from);
  }
  return {static_cast<double>(0.5L * (lo + hi)), static_cast<double>(0.5L * (hi - lo))};
}

}  // namespace detail

/// Strip quadratures shared by the normalization and by every P_N evaluation.
class limit_law_quadrature {
 public:
  explicit limit_law_quadrature(quadrature_spec spec = {}) : spec_(spec), rule_((spec.validate(), spec.gauss_order)) {
    const std::uint64_t K = spec_.max_a1;
    J_.resize(K + 1, 0.0);
    J_err_.resize(K + 1, 0.0);
    prefix_.resize(K + 1, 0.0);
    prefix_err_.resize(K + 1, 0.0);
    for (std::uint64_t k = 1; k <= K; ++k) {
      const double kd = static_cast<double>(k);
      auto f = [kd](double x, double y) { return std::log(kd + x) * mu2_density(x, y); };
      const rect box{0.0, 1.0, 1.0 / (kd + 1.0), 1.0 / kd};
      const quad_result q = integrate_rect(f, box, rule_, spec_.target_tol * strip_mass(k), spec_.max_depth);
      J_[k] = q.value;
      J_err_[k] = q.error;
      prefix_[k] = prefix_[k - 1] + q.value;
      prefix_err_[k] = prefix_err_[k - 1] + q.error;
    }
    tail_ = detail::strip_phi_bracket(K + 1, 0);
    Z_.value = prefix_[K] + tail_.value;
    Z_.error = prefix_err_[K] + tail_.error;
  }

  const quadrature_spec& spec() const noexcept { return spec_; }

  /// Z = int phi d mu2.
  estimate normalization() const noexcept { return Z_; }

  /// int phi d mu2 over the strip a_1 = k.
  double strip_phi(std::uint64_t k) const { return k <= spec_.max_a1 ? J_[k] : strip_phi_sum(k, k).value; }

  /// sum_{k=k1}^{k2} int_{a_1 = k} phi d mu2; k2 = 0 means infinity.
  estimate strip_phi_sum(std::uint64_t k1, std::uint64_t k2) const {
    estimate out;
    const std::uint64_t K = spec_.max_a1;
    if (k2 != 0 && k2 < k1) return out;
    if (k1 <= K) {
      const std::uint64_t hi = k2 == 0 ? K : std::min(k2, K);
      out.value += prefix_[hi] - prefix_[k1 - 1];
      out.error += prefix_err_[hi] - prefix_err_[k1 - 1];
    }
    if (k2 == 0 || k2 > K) {
      const estimate t = k2 == 0 && k1 <= K + 1 ? tail_ : detail::strip_phi_bracket(std::max(k1, K + 1), k2);
      out.value += t.value;
      out.error += t.error;
    }
    return out;
  }

  /// Unnormalized mass int_{C_N} fiber length d mu2, for 1 <= a < b <= inf.
  estimate region_integral(double a, double b, const digit_tuple& c) const {
    check_range(a, b);
    const double ln_a = std::log(a);
    const double ln_b = std::log(b);
    if (!c.empty()) return constrained_integral(a, b, ln_a, ln_b, c);

    estimate out;
    // Strips with a <= k and k + 1 <= b: the fiber is phi - ln a throughout.
    const auto k_lo = static_cast<std::uint64_t>(std::ceil(a));
    if (std::isinf(b)) {
      const estimate s = strip_phi_sum(k_lo, 0);
      out.value += s.value - ln_a * strip_mass_sum(k_lo, 0);
      out.error += s.error;
    } else {
      const auto k_hi = static_cast<std::uint64_t>(std::floor(b)) - 1;
      if (k_hi >= k_lo) {
        const estimate s = strip_phi_sum(k_lo, k_hi);
        out.value += s.value - ln_a * strip_mass_sum(k_lo, k_hi);
        out.error += s.error;
      }
      // Strips with k >= b: the fiber is ln b - ln a throughout.
      const auto k_b = static_cast<std::uint64_t>(std::ceil(b));
      out.value += (ln_b - ln_a) * strip_mass_sum(k_b, 0);
    }
    // At most two strips straddle ln a or ln b and need quadrature.
    std::vector<std::uint64_t> straddling;
    if (std::floor(a) != a) straddling.push_back(static_cast<std::uint64_t>(std::floor(a)));
    if (std::isfinite(b) && std::floor(b) != b) straddling.push_back(static_cast<std::uint64_t>(std::floor(b)));
    straddling.erase(std::unique(straddling.begin(), straddling.end()), straddling.end());
    for (std::uint64_t k : straddling) {
      const double kd = static_cast<double>(k);
      const rect box{0.0, 1.0, 1.0 / (kd + 1.0), 1.0 / kd};
      const quad_result q = strip_integral(kd, box, a, b, ln_a, ln_b, spec_.target_tol * strip_mass(k));
      out.value += q.value;
      out.error += q.error;
    }
    return out;
  }

  /// P_N((a, b), c) with its error bound.
  estimate pn(double a, double b, const digit_tuple& c) const {
    const estimate I = region_integral(a, b, c);
    const double p = I.value / Z_.value;
    return {p, I.error / Z_.value + std::abs(p) * Z_.error / Z_.value};
  }

 private:
  static void check_range(double a, double b) {
    if (!(a >= 1.0) || !std::isfinite(a)) throw error(errc::invalid_argument, "need a >= 1");
    if (!(b > a)) throw error(errc::invalid_argument, "need b > a");
  }

  template <class Box>
  quad_result strip_integral(double k, const Box& box, double a, double b, double ln_a, double ln_b,
                             double tol) const {
    auto f = [=](double x, double y) {
      return region_fiber_length(std::log(k + x), ln_a, ln_b) * mu2_density(x, y);
    };
    const double breaks[2] = {a - k, std::isfinite(b) ? b - k : 2.0};
    return integrate_rect(f, box, std::span<const double>(breaks), rule_, tol, spec_.max_depth);
  }

  estimate constrained_integral(double a, double b, double ln_a, double ln_b, const digit_tuple& c) const {
    for (auto d : c) {
      if (d == 0) throw error(errc::invalid_digits, "digits must be >= 1");
    }
    const double c0 = static_cast<double>(c[0]);
    const auto minus = cylinder_interval(std::span<const std::uint64_t>(c).subspan(1));
    const rect box{minus.first.get_d(), minus.second.get_d(), 1.0 / (c0 + 1.0), 1.0 / c0};
    const double box_mass = std::max(box.area() * mu2_density(box.x1, box.y1), 1e-300);
    const quad_result q = strip_integral(c0, box, a, b, ln_a, ln_b, spec_.target_tol * box_mass);
    return {q.value, q.error};
  }

  quadrature_spec spec_;
  gauss_legendre rule_;
  std::vector<double> J_, J_err_, prefix_, prefix_err_;
  estimate tail_;
  estimate Z_;
};

inline estimate normalization_constant(const quadrature_spec& spec = {}) {
  return limit_law_quadrature(spec).normalization();
}

inline estimate theoretical_pn(double a, double b, const digit_tuple& c, const quadrature_spec& spec = {}) {
  return limit_law_quadrature(spec).pn(a, b, c);
}

inline distribution_table theoretical_table(const limit_law_quadrature& quad, std::vector<double> edges, std::size_t N,
                                            std::vector<digit_tuple> tuples) {
  validate_edges(edges);
  if (N == 0) tuples = {digit_tuple{}};
  validate_tuples(N, tuples);
  distribution_table t;
  t.kind = "theoretical";
  t.N = N;
  t.edges = std::move(edges);
  t.tuples = std::move(tuples);
  t.resize();
  const estimate Z = quad.normalization();
  t.normalization = Z.value;
  t.normalization_error = Z.error;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double a = t.edges[r];
    const double b = t.row_upper(r);
    if (N == 0) {
      const estimate p = quad.pn(a, b, {});
      t.at(r, 0) = p.value;
      t.error[r * t.cols()] = p.error;
      continue;
    }
    const estimate row = quad.pn(a, b, {});
    double listed = 0;
    double listed_err = 0;
    for (std::size_t c = 0; c < t.tuples.size(); ++c) {
      const estimate p = quad.pn(a, b, t.tuples[c]);
      t.at(r, c) = p.value;
      t.error[r * t.cols() + c] = p.error;
      listed += p.value;
      listed_err += p.error;
    }
    t.at(r, t.other_column()) = std::max(0.0, row.value - listed);
    t.error[r * t.cols() + t.other_column()] = row.error + listed_err;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Empirical law

struct sampling_options {
  std::uint64_t seed = 20260101;
  int precision_bits = default_precision_bits;  // ceiling for adaptive retries
  unsigned workers = 0;                         // 0: hardware concurrency
  std::uint64_t block_size = 4096;
  double max_rejected_fraction = 1e-3;
};

/// Starting precision for renewal sampling at R: roughly 2 log2 q_{n_R} bits
/// are consumed, with a margin for the digit that crosses R.
inline int renewal_start_bits(double R) {
  return 128 + static_cast<int>(std::ceil(4.0 * std::log2(std::max(R, 2.0))));
}

enum class sample_outcome { ok, rejected };

struct renewal_sample {
  sample_outcome outcome = sample_outcome::rejected;
  renewal_result result;
};

/// Renewal statistics of alpha = 2^u - 1 for the u drawn from `rng`, retrying at
/// doubled precision (same u) until the digits certify q_n > R.
inline renewal_sample draw_renewal(random_stream& rng, double R, std::size_t N, int max_bits) {
  const dyadic_uniform u = rng.next_dyadic();
  const mpq_class uq = u.value();
  renewal_sample out;
  for (int bits = std::min(renewal_start_bits(R), max_bits);; bits = std::min(2 * bits, max_bits)) {
    digit_stream s(mu1_quantile(uq, bits));
    auto next = [&] { return s.next(); };
    try {
      std::optional<renewal_result> r = renewal_index_from(next, R, N);
      if (r) {
        out.outcome = sample_outcome::ok;
        out.result = std::move(*r);
        return out;
      }
    } catch (const error& e) {
      if (e.code() == errc::trailing_underflow) return out;
      throw;
    }
    if (s.status() != stop_reason::precision_exhausted || bits >= max_bits) return out;
  }
}

namespace detail {

struct count_block {
  std::vector<std::uint64_t> counts;
  std::uint64_t rejected = 0;
};

inline std::size_t row_of(const std::vector<double>& edges, double ratio) {
  auto it = std::upper_bound(edges.begin(), edges.end(), ratio);
  if (it == edges.begin()) return 0;
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

}  // namespace detail

inline distribution_table empirical_pn(double R, std::uint64_t M, std::size_t N, std::vector<double> edges,
                                       std::vector<digit_tuple> tuples, const sampling_options& opt = {}) {
  if (M == 0) throw error(errc::invalid_sample_count, "M must be >= 1");
  if (!(R >= 10) || !std::isfinite(R)) throw error(errc::invalid_argument, "empirical sampling needs R >= 10");
  validate_edges(edges);
  if (N == 0) tuples = {digit_tuple{}};
  validate_tuples(N, tuples);

  distribution_table t;
  t.kind = "empirical";
  t.N = N;
  t.edges = std::move(edges);
  t.tuples = std::move(tuples);
  t.R = R;
  t.sample_count = M;
  t.resize();

  std::map<digit_tuple, std::size_t> column;
  for (std::size_t c = 0; c < t.tuples.size(); ++c) column.emplace(t.tuples[c], c);
  const std::size_t cells = t.rows() * t.cols();

  auto blocks = map_blocks(M, opt.block_size, opt.workers, [&](std::uint64_t begin, std::uint64_t end) {
    detail::count_block b;
    b.counts.assign(cells, 0);
    for (std::uint64_t i = begin; i < end; ++i) {
      random_stream rng(opt.seed, i);
      const renewal_sample s = draw_renewal(rng, R, N, opt.precision_bits);
      if (s.outcome != sample_outcome::ok) {
        ++b.rejected;
        continue;
      }
      const std::size_t row = detail::row_of(t.edges, s.result.ratio);
      auto it = column.find(s.result.trailing_digits);
      const std::size_t col = it == column.end() ? t.other_column() : it->second;
      ++b.counts[row * t.cols() + col];
    }
    return b;
  });

  t.counts.assign(cells, 0);
  for (const auto& b : blocks) {
    t.rejected += b.rejected;
    for (std::size_t i = 0; i < cells; ++i) t.counts[i] += b.counts[i];
  }
  if (static_cast<double>(t.rejected) > opt.max_rejected_fraction * static_cast<double>(M)) {
    throw error(errc::budget_exceeded, std::to_string(t.rejected) + " of " + std::to_string(M) +
                                           " samples rejected (precision or n_R < N)");
  }
  const double m = static_cast<double>(M);
  for (std::size_t i = 0; i < cells; ++i) {
    const double p = static_cast<double>(t.counts[i]) / m;
    t.mass[i] = p;
    t.error[i] = std::sqrt(p * (1.0 - p) / m);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Comparison

inline void check_compatible(const distribution_table& t1, const distribution_table& t2) {
  if (t1.edges != t2.edges) throw error(errc::incompatible_tables, "ratio edges differ");
  if (t1.tuples != t2.tuples) throw error(errc::incompatible_tables, "digit tuples differ");
  if (t1.mass.size() != t1.rows() * t1.cols() || t2.mass.size() != t2.rows() * t2.cols()) {
    throw error(errc::incompatible_tables, "mass matrix has the wrong shape");
  }
}

struct distance_report {
  double ratio_ks = 0;  // sup |CDF_1 - CDF_2| of the ratio marginals
  double digit_tv = 0;  // total variation between the digit marginals
  double value = 0;     // max of the two
};

/// Marginals are renormalized to unit mass before comparison, so rejected
/// samples and quadrature truncation do not register as distance.
inline distance_report ks_distance(const distribution_table& t1, const distribution_table& t2) {
  check_compatible(t1, t2);
  auto normalized = [](std::vector<double> v) {
    double s = 0;
    for (double x : v) s += x;
    if (s > 0) {
      for (double& x : v) x /= s;
    }
    return v;
  };
  const auto r1 = normalized(t1.ratio_marginal());
  const auto r2 = normalized(t2.ratio_marginal());
  distance_report out;
  double c1 = 0, c2 = 0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    c1 += r1[i];
    c2 += r2[i];
    out.ratio_ks = std::max(out.ratio_ks, std::abs(c1 - c2));
  }
  const auto d1 = normalized(t1.digit_marginal());
  const auto d2 = normalized(t2.digit_marginal());
  for (std::size_t i = 0; i < d1.size(); ++i) out.digit_tv += 0.5 * std::abs(d1[i] - d2[i]);
  out.value = std::max(out.ratio_ks, out.digit_tv);
  return out;
}

/// max over cells of |mass_1 - mass_2|.
inline double sup_norm_gap(const distribution_table& t1, const distribution_table& t2) {
  check_compatible(t1, t2);
  double gap = 0;
  for (std::size_t i = 0; i < t1.mass.size(); ++i) gap = std::max(gap, std::abs(t1.mass[i] - t2.mass[i]));
  return gap;
}

}  // namespace cfrenew

#endif  // CFRENEW_LIMIT_LAW_HPP
