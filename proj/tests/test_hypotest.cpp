// Copyright 2026 The eaudit Authors
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

#include "eaudit/hypotest.hpp"

#include <chrono>
#include <functional>
#include <cmath>
#include <random>
#include <vector>

#include "eaudit/entropy.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

using namespace eaudit;
using eaudit::testing::phi_plus;
using eaudit::testing::random_density;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no eaudit::Error thrown";
  return ErrorKind::numerical;
}

// Σ_k C(n,k) max(0, a^{n-k} b^k − 2^{yn} c^{n-k} d^k) in long double.
double binary_stein_oracle(double a, double b, double c, double d, int n, double y) {
  long double total = 0.0L;
  for (int k = 0; k <= n; ++k) {
    long double lc = std::lgammal(n + 1.0L) - std::lgammal(k + 1.0L) - std::lgammal(n - k + 1.0L);
    long double lp = lc + (n - k) * std::log(static_cast<long double>(a)) +
                     k * std::log(static_cast<long double>(b));
    long double lq = lc + (n - k) * std::log(static_cast<long double>(c)) +
                     k * std::log(static_cast<long double>(d)) +
                     static_cast<long double>(y) * n * std::log(2.0L);
    long double term = std::exp(lp) - std::exp(lq);
    if (term > 0.0L) total += term;
  }
  return static_cast<double>(total);
}

double kl_bits(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log2(p[i] / q[i]);
  return s;
}

std::vector<double> random_distribution(std::size_t d, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(d);
  double s = 0.0;
  for (auto& v : p) s += (v = e(rng) + 1e-3);
  for (auto& v : p) v /= s;
  return p;
}

TEST(NeymanPearson, Examples) {
  auto p00 = eaudit::testing::basis_product(0, 0);
  auto p11 = eaudit::testing::basis_product(1, 1);
  auto orth = neyman_pearson_point(p00, p11, 1, 1.0);
  EXPECT_NEAR(orth.beta1, 0.0, 1e-12);
  EXPECT_NEAR(orth.beta2, 0.0, 1e-12);

  auto same = neyman_pearson_point(phi_plus(), phi_plus(), 1, 1.0);
  EXPECT_EQ(same.beta1, 1.0);
  EXPECT_EQ(same.beta2, 0.0);

  auto mixed = validate_state(HermitianOperator::identity(4) * 0.25, {2, 2});
  auto pt = neyman_pearson_point(phi_plus(), mixed, 1, 1.0);
  EXPECT_NEAR(pt.beta1, 0.0, 1e-12);
  EXPECT_NEAR(pt.beta2, 0.25, 1e-12);
  EXPECT_EQ(pt.n, 1u);
  EXPECT_EQ(pt.threshold, 1.0);
}

TEST(NeymanPearson, Errors) {
  auto phi = phi_plus();
  EXPECT_EQ(kind_of([&] { neyman_pearson_point(phi, phi, 7, 1.0); }), ErrorKind::size);
  EXPECT_EQ(kind_of([&] { neyman_pearson_point(phi, phi, 2, 1.0, 15); }), ErrorKind::size);
  EXPECT_EQ(kind_of([&] { neyman_pearson_point(phi, phi, 1, 0.0); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([&] { neyman_pearson_point(phi, phi, 0, 1.0); }), ErrorKind::domain);
  Rng rng(1);
  EXPECT_EQ(kind_of([&] { neyman_pearson_point(random_density(2, rng), random_density(3, rng), 1, 1.0); }),
            ErrorKind::shape);
}

TEST(SteinDense, Examples) {
  auto mixed = validate_state(HermitianOperator::identity(4) * 0.25, {2, 2});
  EXPECT_NEAR(stein_quantity_dense(phi_plus(), mixed, 1, 0.0), 0.75, 1e-12);
  EXPECT_EQ(stein_quantity_dense(phi_plus(), mixed, 1, 3.0), 0.0);
  Rng rng(2);
  auto rho = random_density(3, rng);
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_NEAR(stein_quantity_dense(rho, rho, n, 0.1), 0.0, 1e-12);
}

TEST(SteinDense, MatchesNeymanPearsonIdentity) {
  Rng rng(3);
  std::uniform_real_distribution<double> uy(-1.0, 2.0);
  std::uniform_int_distribution<int> ud(2, 4), un(1, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t d = std::size_t(ud(rng)), n = std::size_t(un(rng));
    auto rho = random_density(d, rng);
    auto sigma = random_density(d, rng);
    double y = uy(rng);
    double t = std::exp2(y * double(n));
    auto pt = neyman_pearson_point(rho, sigma, n, t);
    double v = stein_quantity_dense(rho, sigma, n, y);
    EXPECT_NEAR(v, (1.0 - pt.beta1) - t * pt.beta2, 1e-9) << trial;
    EXPECT_GE(v, -1e-9);
    EXPECT_LE(v, 1.0 + 1e-9);
    EXPECT_GE(pt.beta1, 0.0);
    EXPECT_LE(pt.beta1, 1.0);
    EXPECT_GE(pt.beta2, 0.0);
    EXPECT_LE(pt.beta2, 1.0);
  }
}

TEST(SteinCommuting, Examples) {
  std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
  EXPECT_NEAR(stein_quantity_commuting(p, q, 2, 0.5), 0.5, 1e-12);
  std::vector<double> r{0.3, 0.2, 0.5};
  for (std::size_t n : {1u, 10u, 100u}) EXPECT_EQ(stein_quantity_commuting(r, r, n, 0.1), 0.0);
}

TEST(SteinCommuting, MatchesLongDoubleBinomialOracle) {
  std::vector<double> p{0.9, 0.1}, q{0.5, 0.5};
  for (double y : {0.0, 0.2, 0.4, 0.5310, 0.65, 0.8}) {
    for (int n : {1, 17, 50, 200}) {
      EXPECT_NEAR(stein_quantity_commuting(p, q, std::size_t(n), y),
                  binary_stein_oracle(0.9, 0.1, 0.5, 0.5, n, y), 1e-12)
          << "y " << y << " n " << n;
    }
  }
  EXPECT_NEAR(stein_quantity_commuting(p, q, 200, 0.4), 0.962046868, 1e-9);
  EXPECT_NEAR(stein_quantity_commuting(p, q, 200, 0.65), 0.026524579, 1e-9);
}

TEST(SteinCommuting, DirectAndConverseTrend) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_distribution(3, rng);
    auto q = random_distribution(3, rng);
    double s = kl_bits(p, q);
    EXPECT_GE(stein_quantity_commuting(p, q, 200, s - 0.1),
              stein_quantity_commuting(p, q, 50, s - 0.1) - 1e-12);
    EXPECT_LE(stein_quantity_commuting(p, q, 200, s + 0.1),
              stein_quantity_commuting(p, q, 50, s + 0.1) + 1e-12);
  }
  std::vector<double> p{0.9, 0.1}, q{0.5, 0.5};
  EXPECT_NEAR(kl_bits(p, q), 0.5310, 1e-4);
}

TEST(SteinCommuting, ParallelSummationIsStable) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = random_distribution(4, rng);
    auto q = random_distribution(4, rng);
    double y = kl_bits(p, q);
    double serial = stein_quantity_commuting(p, q, 120, y, 1);
    for (std::size_t jobs : {2u, 3u, 8u}) {
      EXPECT_NEAR(stein_quantity_commuting(p, q, 120, y, jobs), serial, 1e-12);
    }
  }
}

TEST(SteinCommuting, AlphabetFourAtTwoHundredIsFast) {
  std::vector<double> p{0.4, 0.3, 0.2, 0.1}, q{0.25, 0.25, 0.25, 0.25};
  auto start = std::chrono::steady_clock::now();
  double v = stein_quantity_commuting(p, q, 200, 0.1);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 1.0);
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, 1.0 + 1e-9);
}

TEST(SteinCommuting, Errors) {
  std::vector<double> p{0.5, 0.5}, q{1.0, 0.0};
  EXPECT_EQ(kind_of([&] { stein_quantity_commuting(p, q, 3, 0.1); }), ErrorKind::domain);
  std::vector<double> bad{0.5, 0.6}, ok{0.5, 0.5};
  EXPECT_EQ(kind_of([&] { stein_quantity_commuting(bad, ok, 3, 0.1); }), ErrorKind::domain);
  std::vector<double> three{0.2, 0.3, 0.5};
  EXPECT_EQ(kind_of([&] { stein_quantity_commuting(three, ok, 3, 0.1); }), ErrorKind::shape);
  std::vector<double> wide(9, 1.0 / 9.0);
  EXPECT_EQ(kind_of([&] { stein_quantity_commuting(wide, wide, 3, 0.1); }), ErrorKind::size);
  EXPECT_EQ(kind_of([&] { stein_quantity_commuting(ok, ok, 0, 0.1); }), ErrorKind::domain);
}

TEST(SteinScan, DpMatchesDenseOnCommutingPairs) {
  std::vector<double> p{0.9, 0.1}, q{0.5, 0.5};
  auto pair = HypothesisPair::from_distributions(p, q);
  std::vector<double> ys;
  for (int i = 0; i <= 12; ++i) ys.push_back(-0.2 + 0.1 * i);
  std::vector<std::size_t> ns{1, 2, 3, 4, 5};
  auto dense = stein_scan(pair, ys, ns, SteinEngine::dense);
  auto dp = stein_scan(pair, ys, ns, SteinEngine::dp);
  ASSERT_EQ(dense.rows.size(), dp.rows.size());
  for (std::size_t i = 0; i < dp.rows.size(); ++i) {
    EXPECT_EQ(dense.rows[i].n, dp.rows[i].n);
    EXPECT_EQ(dense.rows[i].y, dp.rows[i].y);
    EXPECT_NEAR(dense.rows[i].value, dp.rows[i].value, 1e-9);
  }
}

TEST(SteinScan, RotatedCommutingOperatorsUseTheJointSpectrum) {
  Rng rng(6);
  ComplexMatrix u = random_unitary(3, rng);
  RealVector a(3), b(3);
  a << 0.5, 0.3, 0.2;
  b << 0.2, 0.2, 0.6;
  HermitianOperator rho = HermitianOperator::trusted(u * a.cast<Complex>().asDiagonal() * u.adjoint());
  HermitianOperator sigma = HermitianOperator::trusted(u * b.cast<Complex>().asDiagonal() * u.adjoint());
  HypothesisPair pair{rho, sigma};
  std::vector<double> ys{0.0, 0.3};
  std::vector<std::size_t> ns{1, 3};
  auto dense = stein_scan(pair, ys, ns, SteinEngine::dense);
  auto dp = stein_scan(pair, ys, ns, SteinEngine::dp);
  for (std::size_t i = 0; i < dp.rows.size(); ++i)
    EXPECT_NEAR(dense.rows[i].value, dp.rows[i].value, 1e-9);
}

TEST(SteinScan, NonCommutingPairIsRejectedByDp) {
  auto mixed = validate_state(HermitianOperator::identity(4) * 0.25, {2, 2});
  HypothesisPair pair{phi_plus().op(), (phi_plus().op() + eaudit::testing::basis_product(0, 0).op()) * 0.5};
  std::vector<double> ys{0.0};
  std::vector<std::size_t> ns{2};
  EXPECT_EQ(kind_of([&] { stein_scan(pair, ys, ns, SteinEngine::dp); }), ErrorKind::mode);
  HypothesisPair commuting{phi_plus().op(), mixed.op()};
  EXPECT_NO_THROW(stein_scan(commuting, ys, ns, SteinEngine::dp));
}

TEST(SteinScan, DegenerateGridMatchesPointwise) {
  std::vector<double> p{0.7, 0.3}, q{0.4, 0.6};
  auto pair = HypothesisPair::from_distributions(p, q);
  std::vector<double> ys{0.2};
  std::vector<std::size_t> ns{40};
  auto c = stein_scan(pair, ys, ns, SteinEngine::dp);
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_NEAR(c.rows[0].value, stein_quantity_commuting(p, q, 40, 0.2), 1e-14);
  EXPECT_EQ(c.rows[0].engine, SteinEngine::dp);
}

TEST(SteinScan, NonIncreasingInY) {
  Rng rng(7);
  auto p = random_distribution(3, rng);
  auto q = random_distribution(3, rng);
  auto pair = HypothesisPair::from_distributions(p, q);
  std::vector<double> ys;
  for (int i = 0; i <= 30; ++i) ys.push_back(-0.5 + 0.05 * i);
  std::vector<std::size_t> ns{3, 30, 150};
  auto c = stein_scan(pair, ys, ns, SteinEngine::dp, 3);
  for (std::size_t i = 1; i < c.rows.size(); ++i) {
    if (c.rows[i].n != c.rows[i - 1].n) continue;
    EXPECT_LE(c.rows[i].value, c.rows[i - 1].value + 1e-12);
  }
  for (const auto& r : c.rows) {
    EXPECT_GE(r.value, 0.0);
    EXPECT_LE(r.value, 1.0 + 1e-9);
  }
}

TEST(SteinScan, ParallelScanMatchesSerial) {
  std::vector<double> p{0.6, 0.3, 0.1}, q{0.2, 0.3, 0.5};
  auto pair = HypothesisPair::from_distributions(p, q);
  std::vector<double> ys{0.0, 0.4, 0.8};
  std::vector<std::size_t> ns{10, 60, 120};
  auto a = stein_scan(pair, ys, ns, SteinEngine::dp, 1);
  auto b = stein_scan(pair, ys, ns, SteinEngine::dp, 4);
  EXPECT_EQ(a.to_csv(), b.to_csv());
}

TEST(SteinScan, Errors) {
  std::vector<double> p{0.6, 0.4};
  auto pair = HypothesisPair::from_distributions(p, p);
  std::vector<double> ys{0.0}, none;
  std::vector<std::size_t> ns{2}, big{13}, empty;
  EXPECT_EQ(kind_of([&] { stein_scan(pair, none, ns, SteinEngine::dp); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([&] { stein_scan(pair, ys, empty, SteinEngine::dp); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([&] { stein_scan(pair, ys, big, SteinEngine::dense); }), ErrorKind::size);
  std::vector<double> q{0.2, 0.3, 0.5};
  EXPECT_EQ(kind_of([&] { HypothesisPair::from_distributions(p, q); }), ErrorKind::shape);
}

TEST(SteinScan, CsvLayout) {
  SteinCurve c;
  c.rows.push_back({200, 0.4, 0.962046868, SteinEngine::dp});
  c.rows.push_back({1, 3.0, 0.0, SteinEngine::dense});
  EXPECT_EQ(c.to_csv(),
            "n,y,value,engine\n"
            "200,4.000000000000e-01,9.620468680000e-01,dp\n"
            "1,3.000000000000e+00,0.000000000000e+00,dense\n");
}

}  // namespace
