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

#ifndef CFRENEW_QUADRATURE_HPP
#define CFRENEW_QUADRATURE_HPP

// Adaptive tensor-product Gauss-Legendre quadrature on rectangles.
//
// A rectangle is accepted when the rule on the whole and the sum of the rule on
// its four quarters agree to the local tolerance; otherwise each quarter is
// refined with a quarter of the tolerance. Known kinks of the integrand are
// passed as x-breakpoints so that every leaf region sees an analytic function.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cfrenew/errors.hpp"

namespace cfrenew {

struct quadrature_spec {
  int gauss_order = 10;
  std::uint64_t max_a1 = 10000;  // K_max: number of a_1-strips integrated explicitly
  int max_depth = 12;            // subdivision depth per rectangle
  double target_tol = 1e-12;

  void validate() const {
    if (gauss_order < 2) throw error(errc::invalid_argument, "gauss_order must be >= 2");
    if (max_a1 < 2) throw error(errc::invalid_argument, "max_a1 must be >= 2");
    if (max_depth < 0) throw error(errc::invalid_argument, "max_depth must be >= 0");
    if (!(target_tol > 0)) throw error(errc::invalid_argument, "target_tol must be positive");
  }
};

class gauss_legendre {
 public:
  explicit gauss_legendre(int order) : nodes_(order), weights_(order) {
    if (order < 1) throw error(errc::invalid_argument, "Gauss-Legendre order must be >= 1");
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double pp = 0;
      for (int iter = 0; iter < 100; ++iter) {
        double p1 = 1.0;
        double p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        double z_old = z;
        z = z_old - p1 / pp;
        if (std::abs(z - z_old) < 1e-15) break;
      }
      nodes_[i] = -z;
      nodes_[n - 1 - i] = z;
      weights_[i] = weights_[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
  }

  int order() const noexcept { return static_cast<int>(nodes_.size()); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(mid + half * nodes_[i]);
    return s * half;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct rect {
  double x0, x1, y0, y1;
  double area() const noexcept { return (x1 - x0) * (y1 - y0); }
};

struct quad_result {
  double value = 0;
  double error = 0;
  std::size_t regions = 0;

  quad_result& operator+=(const quad_result& o) {
    value += o.value;
    error += o.error;
    regions += o.regions;
    return *this;
  }
};

namespace detail {

template <class F>
double tensor_rule(F& f, const rect& r, const gauss_legendre& rule) {
  const auto x = rule.nodes();
  const auto w = rule.weights();
  const double hx = 0.5 * (r.x1 - r.x0), mx = 0.5 * (r.x0 + r.x1);
  const double hy = 0.5 * (r.y1 - r.y0), my = 0.5 * (r.y0 + r.y1);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = mx + hx * x[i];
    double row = 0;
    for (std::size_t j = 0; j < x.size(); ++j) row += w[j] * f(xi, my + hy * x[j]);
    s += w[i] * row;
  }
  return s * hx * hy;
}

template <class F>
quad_result adapt(F& f, const rect& r, double whole, const gauss_legendre& rule, double tol, int depth) {
  const double xm = 0.5 * (r.x0 + r.x1);
  const double ym = 0.5 * (r.y0 + r.y1);
  const rect q[4] = {{r.x0, xm, r.y0, ym}, {xm, r.x1, r.y0, ym}, {r.x0, xm, ym, r.y1}, {xm, r.x1, ym, r.y1}};
  double parts[4];
  double sum = 0;
  for (int i = 0; i < 4; ++i) {
    parts[i] = tensor_rule(f, q[i], rule);
    sum += parts[i];
  }
  const double err = std::abs(sum - whole);
  if (err <= tol) return quad_result{sum, err, 4};
  if (depth == 0) {
    throw error(errc::quadrature_failure,
                "tolerance " + std::to_string(tol) + " not met (estimate " + std::to_string(err) + ")");
  }
  quad_result out;
  for (int i = 0; i < 4; ++i) out += adapt(f, q[i], parts[i], rule, 0.25 * tol, depth - 1);
  return out;
}

}  // namespace detail

/// Integral of f(x, y) over r to absolute tolerance tol.
template <class F>
quad_result integrate_rect(F&& f, const rect& r, const gauss_legendre& rule, double tol, int max_depth) {
  if (r.x1 <= r.x0 || r.y1 <= r.y0) return {};
  const double whole = detail::tensor_rule(f, r, rule);
  return detail::adapt(f, r, whole, rule, tol, max_depth);
}

/// As above, first cutting r along every x-breakpoint strictly inside it.
/// The tolerance is shared among the pieces in proportion to their width.
template <class F>
quad_result integrate_rect(F&& f, const rect& r, std::span<const double> x_breaks, const gauss_legendre& rule,
                           double tol, int max_depth) {
  std::vector<double> cuts{r.x0};
  for (double b : x_breaks) {
    if (b > r.x0 && b < r.x1) cuts.push_back(b);
  }
  cuts.push_back(r.x1);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  quad_result out;
  const double width = r.x1 - r.x0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const rect piece{cuts[i], cuts[i + 1], r.y0, r.y1};
    out += integrate_rect(f, piece, rule, tol * (piece.x1 - piece.x0) / width, max_depth);
  }
  return out;
}

}  // namespace cfrenew

#endif  // CFRENEW_QUADRATURE_HPP
