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

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "generators.hpp"

namespace cfrenew {
namespace {

using testing::gen;

// Closed-form mu2 mass of [x0, x1] x [y0, y1]: d^2/dx dy ln(1 + xy) = (1 + xy)^-2.
double mu2_rect_mass(double x0, double x1, double y0, double y1) {
  auto F = [](double x, double y) { return std::log1p(x * y); };
  return (F(x1, y1) - F(x0, y1) - F(x1, y0) + F(x0, y0)) / std::numbers::ln2;
}

TEST(GaussMap, FixedPointsAndPi) {
  const natural_ext_point golden = testing::golden_point(256);
  EXPECT_NEAR(gauss_map(golden.plus()).to_double(), golden.plus().to_double(), 1e-15);
  const hp_real s = testing::silver(256);
  EXPECT_NEAR(gauss_map(s).to_double(), 0.41421356237309505, 1e-15);
  EXPECT_NEAR(gauss_map(testing::pi_minus_3(256)).to_double(), 0.062513305931045770, 1e-15);
}

TEST(GaussMap, ShiftsDigits) {
  const hp_real x = testing::pi_minus_3(512);
  const auto d = expand_digits(x, 20).digits;
  const auto shifted = expand_digits(gauss_map(x), 19).digits;
  EXPECT_TRUE(std::equal(shifted.begin(), shifted.end(), d.begin() + 1));
}

TEST(GaussMap, RejectsRationalZero) { EXPECT_THROW(gauss_map(hp_real::exact(mpq_class(1, 3))), error); }

TEST(NaturalExtension, FixedPoints) {
  const natural_ext_point g = testing::golden_point(256);
  const natural_ext_point gs = natural_extension_step(g);
  EXPECT_NEAR(gs.minus().to_double(), g.minus().to_double(), 1e-15);
  EXPECT_NEAR(gs.plus().to_double(), g.plus().to_double(), 1e-15);

  const natural_ext_point s(testing::silver(256), testing::silver(256));
  const natural_ext_point ss = natural_extension_step(s);
  EXPECT_NEAR(ss.minus().to_double(), 0.41421356237309505, 1e-15);
  EXPECT_NEAR(ss.plus().to_double(), 0.41421356237309505, 1e-15);
}

TEST(NaturalExtension, StepAndInverseOnPiPoint) {
  const natural_ext_point p(testing::golden_point(256).minus(), testing::pi_minus_3(256));
  const natural_ext_point q = natural_extension_step(p);
  // 1/(7 + g) and 1/(pi - 3) - 7, evaluated independently.
  EXPECT_NEAR(q.minus().to_double(), 0.13126746368902695, 1e-15);
  EXPECT_NEAR(q.plus().to_double(), 0.062513305931045770, 1e-15);
  const natural_ext_point back = natural_extension_inverse(q);
  EXPECT_EQ(back.minus().midpoint(), p.minus().midpoint());
  EXPECT_EQ(back.plus().midpoint(), p.plus().midpoint());
}

TEST(NaturalExtension, RejectsExactComponents) {
  EXPECT_THROW(natural_ext_point(hp_real::exact(mpq_class(1, 3)), testing::silver()), error);
}

TEST(Mu1Sampler, QuantileExamples) {
  EXPECT_NEAR(mu1_quantile(mpq_class(1, 2), 128).to_double(), 0.41421356237309505, 1e-16);
  const mpq_class tiny(1, mpz_class(1) << 100);
  const double lo = mu1_quantile(tiny, 256).to_double();
  const double hi = mu1_quantile(1 - tiny, 256).to_double();
  EXPECT_GT(lo, 0);
  EXPECT_LT(lo, 1e-29);
  EXPECT_GT(hi, 1 - 1e-15);
  EXPECT_TRUE(mu1_quantile(tiny, 256).inside_unit_interval());
  EXPECT_TRUE(mu1_quantile(1 - tiny, 256).inside_unit_interval());
}

TEST(Mu1Sampler, MassOfUpperHalf) {
  random_stream r(2026, 0);
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += sample_mu1(r, 64).to_double() > 0.5;
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.41503749927884382, 0.002);
}

TEST(Mu2Sampler, ConditionalExamples) {
  const hp_real half = hp_real::exact(mpq_class(1, 2));
  EXPECT_EQ(mu2_conditional_minus(half, mpq_class(1, 2)).midpoint(), mpq_class(2, 5));
  EXPECT_EQ(mu2_conditional_minus(half, mpq_class(0)).midpoint(), 0);
  EXPECT_EQ(mu2_conditional_minus(half, mpq_class(1)).midpoint(), 1);
}

TEST(Mu2Sampler, ConditionalIsDecreasingInAlphaPlus) {
  const hp_real x = hp_real::enclosure(ratio{1, 3}, ratio{1, 2}, 64);
  const hp_real t = mu2_conditional_minus(x, mpq_class(1, 2));
  // v / (1 + a - v a) at a = 1/2 and a = 1/3.
  EXPECT_EQ(t.lower().to_mpq(), mpq_class(2, 5));
  EXPECT_EQ(t.upper().to_mpq(), mpq_class(3, 7));
}

TEST(Cylinder, Intervals) {
  auto iv = [](std::vector<std::uint64_t> b) { return cylinder_interval(cylinder::one_sided(std::move(b))); };
  EXPECT_EQ(iv({1}), std::make_pair(mpq_class(1, 2), mpq_class(1)));
  EXPECT_EQ(iv({2}), std::make_pair(mpq_class(1, 3), mpq_class(1, 2)));
  EXPECT_EQ(iv({1, 1}), std::make_pair(mpq_class(1, 2), mpq_class(2, 3)));
  EXPECT_EQ(iv({}), std::make_pair(mpq_class(0), mpq_class(1)));
}

TEST(Cylinder, IntervalMatchesGridScan) {
  const std::vector<std::vector<std::uint64_t>> cases = {{1, 1}, {2, 3}, {1, 2, 1}, {3, 1, 4}};
  for (const auto& b : cases) {
    const auto [lo, hi] = cylinder_interval(std::span<const std::uint64_t>(b));
    for (int i = 1; i < 4000; ++i) {
      const mpq_class x(i, 4001);
      const expansion e = expand(hp_real::exact(x), b.size());
      const bool member = e.digits.size() == b.size() && e.digits.digits == b && e.reason == stop_reason::complete;
      const bool inside = x > lo && x < hi;
      ASSERT_EQ(member, inside) << "x = " << x.get_str();
    }
  }
}

TEST(CylinderMeasure, Mu1ClosedForm) {
  EXPECT_NEAR(cylinder_measure(cylinder::one_sided({1}), measure_kind::mu1), 0.41503749927884382, 1e-15);
  double total = 0;
  for (std::uint64_t k = 1; k <= 100000; ++k) {
    const double m = cylinder_measure(cylinder::one_sided({k}), measure_kind::mu1);
    EXPECT_NEAR(m, std::log2(1.0 + 1.0 / (static_cast<double>(k) * (k + 2.0))), 1e-15);
    total += m;
  }
  EXPECT_NEAR(total, 1.0 - std::log2(1.0 + 1.0 / 100001.0), 1e-12);
}

TEST(CylinderMeasure, Mu2MarginalIsMu1) {
  const cylinder c = cylinder::two_sided({}, {1});
  EXPECT_NEAR(cylinder_measure(c, measure_kind::mu2), 0.41503749927884382, 1e-10);
}

TEST(CylinderMeasure, Mu2MatchesClosedFormRectangle) {
  const std::vector<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>> cases = {
      {{1}, {1}}, {{2, 1}, {1, 3}}, {{5}, {2}}, {{1, 1}, {1, 1}}};
  for (const auto& [back, fwd] : cases) {
    const auto mi = cylinder_interval(std::span<const std::uint64_t>(back));
    const auto pi = cylinder_interval(std::span<const std::uint64_t>(fwd));
    const double expect =
        mu2_rect_mass(mi.first.get_d(), mi.second.get_d(), pi.first.get_d(), pi.second.get_d());
    EXPECT_NEAR(cylinder_measure(cylinder::two_sided(back, fwd), measure_kind::mu2), expect, 1e-10);
  }
}

TEST(CylinderMeasure, Mu2IsShiftInvariant) {
  // a_1 a_2 = (2, 3) versus a_0 a_1 = (2, 3) versus a_-1 a_0 = (2, 3).
  const double m1 = cylinder_measure(cylinder::window(1, {2, 3}), measure_kind::mu2);
  const double m0 = cylinder_measure(cylinder::window(0, {2, 3}), measure_kind::mu2);
  const double mm = cylinder_measure(cylinder::window(-1, {2, 3}), measure_kind::mu2);
  const double mu1 = cylinder_measure(cylinder::one_sided({2, 3}), measure_kind::mu1);
  EXPECT_NEAR(m1, mu1, 1e-10);
  EXPECT_NEAR(m0, mu1, 1e-10);
  EXPECT_NEAR(mm, mu1, 1e-10);
}

TEST(CylinderMeasure, OneSidedRequiredForMu1) {
  EXPECT_THROW(cylinder_measure(cylinder::two_sided({1}, {1}), measure_kind::mu1), error);
  EXPECT_THROW(cylinder::one_sided({0}), error);
}

// ---------------------------------------------------------------------------
// Properties

TEST(GaussSystemProperty, ProjectionConjugatesStepToGaussMap) {
  for (std::uint64_t c = 0; c < 10000; ++c) {
    gen g(10, c);
    const natural_ext_point p = g.mu2_point(192);
    const natural_ext_point q = natural_extension_step(p);
    ASSERT_EQ(q.plus().midpoint(), gauss_map(p.plus()).midpoint()) << "case " << c;
  }
}

TEST(GaussSystemProperty, InverseUndoesStep) {
  for (std::uint64_t c = 0; c < 1000; ++c) {
    gen g(11, c);
    const natural_ext_point p = g.mu2_point(256);
    const natural_ext_point back = natural_extension_inverse(natural_extension_step(p));
    ASSERT_EQ(back.minus().midpoint(), p.minus().midpoint()) << "case " << c;
    ASSERT_EQ(back.plus().midpoint(), p.plus().midpoint()) << "case " << c;
  }
}

TEST(GaussSystemProperty, GaussMapPreservesMu1) {
  const std::size_t M = 1000000;
  std::vector<double> x(M);
  random_stream r(12, 0);
  for (auto& v : x) v = gauss_map(sample_mu1(r, 128)).to_double();
  std::sort(x.begin(), x.end());
  double ks = 0;
  for (std::size_t i = 0; i < M; ++i) {
    const double F = std::log2(1.0 + x[i]);
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / M), std::abs(F - static_cast<double>(i + 1) / M)});
  }
  EXPECT_LT(ks, 1.63 / std::sqrt(static_cast<double>(M)));
}

TEST(GaussSystemProperty, GaussKuzminFrequencies) {
  const int M = 200000;
  std::map<std::uint64_t, int> hits;
  random_stream r(13, 0);
  for (int i = 0; i < M; ++i) ++hits[*certified_first_digit(sample_mu1(r, 128))];
  for (std::uint64_t k = 1; k <= 8; ++k) {
    const double p = std::log2(1.0 + 1.0 / (static_cast<double>(k) * (k + 2.0)));
    const double sigma = std::sqrt(p * (1 - p) / M);
    EXPECT_NEAR(static_cast<double>(hits[k]) / M, p, 3 * sigma) << "k = " << k;
  }
}

TEST(GaussSystemProperty, StepPreservesDepthTwoCylinders) {
  const int M = 200000;
  std::map<std::vector<std::uint64_t>, int> before, after;
  for (int i = 0; i < M; ++i) {
    random_stream r(14, static_cast<std::uint64_t>(i));
    const natural_ext_point p = sample_mu2(r, 192);
    ++before[two_sided_window(p, 0, 1).digits];
    ++after[two_sided_window(natural_extension_step(p), 0, 1).digits];
  }
  for (std::uint64_t a0 = 1; a0 <= 3; ++a0) {
    for (std::uint64_t a1 = 1; a1 <= 3; ++a1) {
      const std::vector<std::uint64_t> key{a0, a1};
      const double mass = cylinder_measure(cylinder::window(0, key), measure_kind::mu2);
      const double sigma = std::sqrt(mass * (1 - mass) / M);
      EXPECT_NEAR(static_cast<double>(before[key]) / M, mass, 3 * sigma);
      EXPECT_NEAR(static_cast<double>(after[key]) / M, mass, 3 * sigma);
    }
  }
}

TEST(GaussSystemProperty, CylinderMassScalesLikeInverseSquare) {
  double lo = 1e300, hi = 0;
  for (std::uint64_t k = 1; k <= 10000; ++k) {
    const double s = cylinder_measure(cylinder::one_sided({k}), measure_kind::mu1) * static_cast<double>(k * k);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // k^2 log2(1 + 1/(k(k+2))): log2(4/3) at k = 1, rising towards 1/ln 2.
  EXPECT_NEAR(lo, std::log2(4.0 / 3.0), 1e-12);
  EXPECT_LE(hi, 1 / std::log(2.0));
}

TEST(GaussSystemProperty, SampledComponentsStayInsideUnitInterval) {
  for (std::uint64_t c = 0; c < 2000; ++c) {
    gen g(15, c);
    const natural_ext_point p = g.mu2_point(128);
    ASSERT_TRUE(p.minus().inside_unit_interval());
    ASSERT_TRUE(p.plus().inside_unit_interval());
    ASSERT_TRUE(cylinder::window(0, two_sided_window(p, 0, 1).digits).contains(p));
  }
}

}  // namespace
}  // namespace cfrenew
