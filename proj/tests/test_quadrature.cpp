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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cfrenew/quadrature.hpp"

namespace cfrenew {
namespace {

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const gauss_legendre rule(5);
  // Exact through degree 9.
  EXPECT_NEAR(rule.integrate([](double x) { return std::pow(x, 9) + x * x; }, 0.0, 2.0), 1024.0 / 10 + 8.0 / 3, 1e-12);
  double wsum = 0;
  for (double w : rule.weights()) wsum += w;
  EXPECT_NEAR(wsum, 2.0, 1e-14);
}

TEST(GaussLegendre, NodesAreSymmetric) {
  const gauss_legendre rule(10);
  const auto x = rule.nodes();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], -x[x.size() - 1 - i], 1e-15);
}

TEST(IntegrateRect, SmoothIntegrand) {
  const gauss_legendre rule(10);
  const quad_result r = integrate_rect([](double x, double y) { return std::exp(x + y); }, rect{0, 1, 0, 1}, rule,
                                       1e-13, 10);
  EXPECT_NEAR(r.value, (std::numbers::e - 1) * (std::numbers::e - 1), 1e-12);
}

TEST(IntegrateRect, KinkHandledByBreakpoint) {
  const gauss_legendre rule(10);
  auto f = [](double x, double) { return std::abs(x - 0.3); };
  const double exact = (0.3 * 0.3 + 0.7 * 0.7) / 2;
  const double breaks[] = {0.3};
  const quad_result r = integrate_rect(f, rect{0, 1, 0, 1}, std::span<const double>(breaks), rule, 1e-14, 6);
  EXPECT_NEAR(r.value, exact, 1e-14);
}

TEST(IntegrateRect, FailsLoudlyWhenDepthRunsOut) {
  const gauss_legendre rule(2);
  auto f = [](double x, double y) { return 1.0 / std::sqrt(x + y + 1e-12); };
  try {
    integrate_rect(f, rect{0, 1, 0, 1}, rule, 1e-15, 1);
    FAIL() << "expected quadrature_failure";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::quadrature_failure);
  }
}

TEST(QuadratureSpec, Validation) {
  quadrature_spec s;
  EXPECT_NO_THROW(s.validate());
  s.gauss_order = 1;
  EXPECT_THROW(s.validate(), error);
  s = {};
  s.max_a1 = 1;
  EXPECT_THROW(s.validate(), error);
}

}  // namespace
}  // namespace cfrenew
