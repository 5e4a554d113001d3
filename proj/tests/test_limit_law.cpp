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

#include "generators.hpp"

namespace cfrenew {
namespace {

const double levy = std::numbers::pi * std::numbers::pi / (12 * std::numbers::ln2);

// Independent 1-D oracle: integrating the mu2 density over alpha+ in the strip
// a_1 = k in closed form leaves
//   w_k(x) = (1/k - 1/(k+1)) / ((1 + x/(k+1)) (1 + x/k) ln 2),
// and the region mass is sum_k int_0^1 L(ln(k + x)) w_k(x) dx, evaluated here
// by composite Simpson with the kinks on grid points.
double oracle_strip(std::uint64_t k, double ln_a, double ln_b, double x0 = 0, double x1 = 1) {
  const double kd = static_cast<double>(k);
  const double c = 1 / (kd + 1), d = 1 / kd;
  auto w = [&](double x) { return (d - c) / ((1 + x * c) * (1 + x * d) * std::numbers::ln2); };
  auto f = [&](double x) {
    const double phi = std::log(kd + x);
    return region_fiber_length(phi, ln_a, ln_b) * w(x);
  };
  std::vector<double> cuts{x0};
  for (double b : {std::exp(ln_a) - kd, std::exp(ln_b) - kd}) {
    if (b > x0 && b < x1) cuts.push_back(b);
  }
  cuts.push_back(x1);
  std::sort(cuts.begin(), cuts.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const int n = 2000;
    const double h = (cuts[i + 1] - cuts[i]) / n;
    double s = f(cuts[i]) + f(cuts[i + 1]);
    for (int j = 1; j < n; ++j) s += f(cuts[i] + j * h) * (j % 2 ? 4 : 2);
    total += s * h / 3;
  }
  return total;
}

double oracle_p0(double a, double b) {
  const double ln_a = std::log(a), ln_b = std::log(b);
  double num = 0;
  const auto kb = static_cast<std::uint64_t>(std::ceil(b));
  for (std::uint64_t k = 1; k < kb; ++k) num += oracle_strip(k, ln_a, ln_b);
  num += (ln_b - ln_a) * std::log2(1 + 1.0 / static_cast<double>(kb));
  return num / levy;
}

const limit_law_quadrature& shared_quad() {
  static const limit_law_quadrature q;
  return q;
}

TEST(RegionFiberLength, Examples) {
  EXPECT_EQ(region_fiber_length(std::log(2.0), std::log(2.0), std::log(3.0)), 0.0);
  EXPECT_EQ(region_fiber_length(0.7, 0.0, INFINITY), 0.7);
  EXPECT_NEAR(region_fiber_length(0.9, std::log(2.0), std::log(3.0)), 0.20685281944005469, 1e-15);
  EXPECT_NEAR(region_fiber_length(1.5, std::log(2.0), std::log(3.0)), std::log(1.5), 1e-15);
}

TEST(Normalization, LevyConstant) {
  const estimate Z = shared_quad().normalization();
  EXPECT_NEAR(Z.value, levy, 1e-6);
  EXPECT_LT(Z.error, 1e-6);
  EXPECT_NEAR(Z.value, levy, Z.error + 1e-12);
}

TEST(Normalization, ExceedsEveryPartialStripSum) {
  const limit_law_quadrature& q = shared_quad();
  double partial = 0;
  for (std::uint64_t k = 1; k <= 10000; ++k) {
    partial += q.strip_phi(k);
    if (k % 1000 == 0) {
      ASSERT_LE(partial, q.normalization().value);
    }
  }
}

TEST(TheoreticalPn, FullRangeIsOne) {
  const estimate p = shared_quad().pn(1.0, INFINITY, {});
  EXPECT_NEAR(p.value, 1.0, 1e-9);
}

TEST(TheoreticalPn, AgreesWithOneDimensionalOracle) {
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1, 1.5}, {2, 3}, {1.2, 7.5}, {3.3, 3.4}, {1, 20}}) {
    EXPECT_NEAR(shared_quad().pn(a, b, {}).value, oracle_p0(a, b), 1e-9) << a << " " << b;
  }
}

TEST(TheoreticalPn, DigitConstrainedAgreesWithOracle) {
  // N = 1: a_1 = c0 fixes the strip; alpha- is free.
  for (std::uint64_t c0 : {1, 2, 5}) {
    const double expect = oracle_strip(c0, std::log(1.5), std::log(4.0)) / levy;
    EXPECT_NEAR(shared_quad().pn(1.5, 4.0, {c0}).value, expect, 1e-9);
  }
  // N = 2: alpha- additionally in C+[c1].
  const auto iv = cylinder_interval(cylinder::one_sided({2}));
  const double expect = oracle_strip(1, std::log(1.1), std::log(1.6), iv.first.get_d(), iv.second.get_d()) / levy;
  EXPECT_NEAR(shared_quad().pn(1.1, 1.6, {1, 2}).value, expect, 1e-9);
}

TEST(TheoreticalPn, Additivity) {
  const limit_law_quadrature& q = shared_quad();
  for (auto [a, b, c] : std::vector<std::array<double, 3>>{{1, 1.5, 4}, {2.5, 3, 100}, {1.1, 2, INFINITY}}) {
    EXPECT_NEAR(q.pn(a, c, {}).value, q.pn(a, b, {}).value + q.pn(b, c, {}).value, 1e-10);
    EXPECT_NEAR(q.pn(a, c, {2}).value, q.pn(a, b, {2}).value + q.pn(b, c, {2}).value, 1e-10);
  }
}

TEST(TheoreticalPn, DigitMarginalEqualsStripMass) {
  const limit_law_quadrature& q = shared_quad();
  for (std::uint64_t k = 1; k <= 6; ++k) {
    const double strip = oracle_strip(k, 0.0, INFINITY) / levy;
    EXPECT_NEAR(q.pn(1.0, INFINITY, {k}).value, strip, 1e-9);
    EXPECT_NEAR(q.strip_phi(k) / q.normalization().value, strip, 1e-9);
  }
}

TEST(TheoreticalPn, StableUnderRefinement) {
  quadrature_spec fine;
  fine.gauss_order = 14;
  fine.max_a1 = 20000;
  fine.target_tol = 1e-13;
  const limit_law_quadrature q2(fine);
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1, 1.5}, {2, 3}, {10, INFINITY}}) {
    const estimate coarse = shared_quad().pn(a, b, {});
    EXPECT_NEAR(coarse.value, q2.pn(a, b, {}).value, std::max(coarse.error, 1e-12));
  }
}

TEST(TheoreticalPn, RejectsBadRanges) {
  EXPECT_THROW(shared_quad().pn(2, 1, {}), error);
  EXPECT_THROW(shared_quad().pn(0.5, 2, {}), error);
  EXPECT_THROW(shared_quad().pn(1, 2, {0}), error);
}

TEST(TheoreticalTable, MassesSumToOne) {
  for (std::size_t N : {0, 1, 2}) {
    const distribution_table t = theoretical_table(shared_quad(), log_spaced_edges(), N, default_tuples(N));
    EXPECT_NEAR(t.total_mass(), 1.0, 1e-8) << "N = " << N;
    for (double m : t.mass) EXPECT_GE(m, 0.0);
  }
}

TEST(TheoreticalTable, DigitMarginalDecreasesBeyondOne) {
  const distribution_table t = theoretical_table(shared_quad(), log_spaced_edges(), 1, default_tuples(1));
  const auto marg = t.digit_marginal();
  // a_{n_R} = 2 is more likely than a_{n_R} = 1; from 2 on the law decreases.
  EXPECT_GT(marg[1], marg[0]);
  for (std::size_t k = 1; k + 1 < t.tuples.size(); ++k) EXPECT_GT(marg[k], marg[k + 1]);
}

TEST(EmpiricalPn, RejectsBadArguments) {
  try {
    empirical_pn(1e6, 0, 0, log_spaced_edges(), {});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::invalid_sample_count);
  }
  try {
    empirical_pn(1e6, 10, 0, {2.0, 3.0}, {});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::invalid_bins);
  }
  EXPECT_THROW(empirical_pn(5, 10, 0, log_spaced_edges(), {}), error);
}

TEST(EmpiricalPn, MassAccountsForEverySample) {
  sampling_options opt;
  opt.seed = 5;
  const distribution_table t = empirical_pn(1e6, 1000, 0, log_spaced_edges(), {}, opt);
  EXPECT_NEAR(t.total_mass() + static_cast<double>(t.rejected) / 1000, 1.0, 1e-12);
  EXPECT_EQ(t.edges.front(), 1.0);
}

TEST(EmpiricalPn, WorkerCountDoesNotChangeCounts) {
  sampling_options one, many;
  one.workers = 1;
  many.workers = 4;
  one.block_size = many.block_size = 64;
  const auto a = empirical_pn(1e4, 1000, 1, log_spaced_edges(), default_tuples(1), one);
  const auto b = empirical_pn(1e4, 1000, 1, log_spaced_edges(), default_tuples(1), many);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.mass, b.mass);
}

TEST(EmpiricalPn, DigitMarginalShapeAtOneMillion) {
  sampling_options opt;
  opt.seed = 77;
  const std::uint64_t M = 200000;
  const auto t = empirical_pn(1e6, M, 1, log_spaced_edges(), all_tuples(1, 64), opt);
  const auto marg = t.digit_marginal();
  for (std::size_t k = 1; k + 1 < 8; ++k) EXPECT_GT(marg[k], marg[k + 1]) << "k = " << k + 1;
  // Mass at a_{n_R} >= K falls like 1/K: compare K = 8, 16, 32, 64.
  auto tail = [&](std::size_t K) {
    double s = marg.back();  // "other": digits > 64
    for (std::size_t k = K - 1; k < 64; ++k) s += marg[k];
    return s;
  };
  for (std::size_t K : {8, 16, 32}) {
    const double ratio = tail(K) / tail(2 * K);
    EXPECT_GT(ratio, 1.6) << K;
    EXPECT_LT(ratio, 2.4) << K;
  }
}

TEST(EmpiricalPn, CloseToTheoryAtOneMillion) {
  sampling_options opt;
  opt.seed = 78;
  const auto emp = empirical_pn(1e6, 100000, 0, log_spaced_edges(), {}, opt);
  const auto th = theoretical_table(shared_quad(), log_spaced_edges(), 0, {});
  EXPECT_LT(sup_norm_gap(emp, th), 0.01);
  EXPECT_LT(ks_distance(emp, th).ratio_ks, 0.01);
}

TEST(EmpiricalPn, ConvergesAlongR) {
  const auto th = theoretical_table(shared_quad(), log_spaced_edges(), 0, {});
  const std::uint64_t M = 100000;
  const double slack = 2.0 / std::sqrt(static_cast<double>(M));
  double previous = 1;
  for (double R : {1e3, 1e6, 1e9}) {
    sampling_options opt;
    opt.seed = 79;
    const double ks = ks_distance(empirical_pn(R, M, 0, log_spaced_edges(), {}, opt), th).ratio_ks;
    EXPECT_LE(ks, previous + slack) << "R = " << R;
    previous = ks;
  }
}

TEST(KsDistance, IdentityAndPointMasses) {
  const auto th = theoretical_table(shared_quad(), log_spaced_edges(), 1, default_tuples(1));
  EXPECT_EQ(ks_distance(th, th).value, 0.0);

  distribution_table a = th, b = th;
  std::fill(a.mass.begin(), a.mass.end(), 0.0);
  std::fill(b.mass.begin(), b.mass.end(), 0.0);
  a.at(0, 0) = 1;
  b.at(a.rows() - 1, 3) = 1;
  const distance_report r = ks_distance(a, b);
  EXPECT_DOUBLE_EQ(r.ratio_ks, 1.0);
  EXPECT_DOUBLE_EQ(r.digit_tv, 1.0);
  EXPECT_DOUBLE_EQ(ks_distance(b, a).value, r.value);
}

TEST(KsDistance, IncompatibleTables) {
  const auto t0 = theoretical_table(shared_quad(), log_spaced_edges(), 0, {});
  const auto t1 = theoretical_table(shared_quad(), log_spaced_edges(), 1, default_tuples(1));
  try {
    ks_distance(t0, t1);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::incompatible_tables);
  }
}

}  // namespace
}  // namespace cfrenew
