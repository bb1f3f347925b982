#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "oracles/racah_oracle.hpp"
#include "stirap/angular.hpp"
#include "stirap/error.hpp"

using namespace stirap;
using namespace stirap::literals;

namespace {

HalfInt T(int twice) { return HalfInt::from_twice(twice); }

void expect_rel(double actual, double expected, double tol) {
  const double scale = std::max(std::abs(expected), 1e-300);
  EXPECT_LE(std::abs(actual - expected), tol * scale) << "actual=" << actual << " expected=" << expected;
}

}  // namespace

TEST(HalfInt, ParseAndFormat) {
  EXPECT_EQ(HalfInt::parse("3/2").twice(), 3);
  EXPECT_EQ(HalfInt::parse("2").twice(), 4);
  EXPECT_EQ(HalfInt::parse("-1/2").twice(), -1);
  EXPECT_EQ(HalfInt::parse("1.5").twice(), 3);
  EXPECT_EQ(HalfInt::from_twice(5).str(), "5/2");
  EXPECT_EQ(HalfInt::integer(3).str(), "3");
  EXPECT_THROW(HalfInt::parse("1/3"), InputError);
  EXPECT_THROW(HalfInt::parse("abc"), InputError);
  EXPECT_THROW(HalfInt::from_double(0.3), InputError);
}

TEST(Triangle, Examples) {
  EXPECT_TRUE(triangle_ok(1_h, 1_h, 2_h));
  EXPECT_FALSE(triangle_ok(1_half, 1_half, 2_h));
  EXPECT_TRUE(triangle_ok(3_half, 1_h, 1_half));
  EXPECT_FALSE(triangle_ok(1_h, 1_h, 1_half));  // non-integral perimeter
  EXPECT_FALSE(triangle_ok(5_h, 3_h, 1_h));
}

TEST(Wigner3j, Examples) {
  // independent value from the rational Racah oracle
  const double oracle_value = oracle::threej2(2, 2, 0, 0, 0, 0);
  EXPECT_NEAR(oracle_value, -1.0 / std::sqrt(3.0), 1e-15);
  expect_rel(wigner3j(1_h, 1_h, 0_h, 0_h, 0_h, 0_h), oracle_value, 1e-14);
  EXPECT_EQ(wigner3j(1_half, 1_half, 1_h, 1_half, 1_half, 0_h), 0.0);
  for (int m1 = -10; m1 <= 10; m1 += 2)
    for (int m2 = -6; m2 <= 6; m2 += 2) EXPECT_EQ(wigner3j(5_h, 3_h, 1_h, T(m1), T(m2), T(-m1 - m2)), 0.0);
  EXPECT_EQ(wigner3j(1_h, 1_h, 1_h, 2_h, -2_h, 0_h), 0.0);  // |m| > j
}

TEST(Wigner3j, ParityMismatchIsInputError) {
  EXPECT_THROW(wigner3j(1_h, 1_h, 1_h, 1_half, -1_half, 0_h), InputError);
  EXPECT_THROW(wigner3j(-1_h, 1_h, 1_h, 0_h, 0_h, 0_h), InputError);
}

TEST(Wigner3j, OrthogonalityUpToSix) {
  for (int j1 = 0; j1 <= 12; ++j1)
    for (int j2 = 0; j2 <= 12; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= std::min(j1 + j2, 12); j3 += 2) {
        // for every fixed m3: sum over m1 (m2 = -m1 - m3) of (2 j3 + 1) (3j)^2 = 1
        for (int m3 = -j3; m3 <= j3; m3 += 2) {
          double sum = 0.0;
          for (int m1 = -j1; m1 <= j1; m1 += 2) {
            const int m2 = -m1 - m3;
            if (std::abs(m2) > j2) continue;
            const double w = wigner3j(T(j1), T(j2), T(j3), T(m1), T(m2), T(m3));
            sum += (j3 + 1) * w * w;
          }
          EXPECT_NEAR(sum, 1.0, 1e-12) << j1 << " " << j2 << " " << j3 << " m3=" << m3;
        }
      }
}

TEST(Wigner3j, ColumnAndSignSymmetriesUpToFour) {
  clear_symbol_cache();
  for (int j1 = 0; j1 <= 8; ++j1)
    for (int j2 = 0; j2 <= 8; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= std::min(j1 + j2, 8); j3 += 2)
        for (int m1 = -j1; m1 <= j1; m1 += 2)
          for (int m2 = -j2; m2 <= j2; m2 += 2) {
            const int m3 = -m1 - m2;
            if (std::abs(m3) > j3) continue;
            const double base = wigner3j(T(j1), T(j2), T(j3), T(m1), T(m2), T(m3));
            const double sign = ((j1 + j2 + j3) / 2) % 2 == 0 ? 1.0 : -1.0;
            EXPECT_EQ(wigner3j(T(j2), T(j3), T(j1), T(m2), T(m3), T(m1)), base);
            EXPECT_EQ(wigner3j(T(j3), T(j1), T(j2), T(m3), T(m1), T(m2)), base);
            EXPECT_EQ(wigner3j(T(j2), T(j1), T(j3), T(m2), T(m1), T(m3)), sign * base);
            EXPECT_EQ(wigner3j(T(j1), T(j2), T(j3), T(-m1), T(-m2), T(-m3)), sign * base);
          }
}

TEST(Wigner3j, AgreesWithRacahOracle) {
  // exhaustive for j <= 2
  for (int j1 = 0; j1 <= 4; ++j1)
    for (int j2 = 0; j2 <= 4; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; j3 += 2)
        for (int m1 = -j1; m1 <= j1; m1 += 2)
          for (int m2 = -j2; m2 <= j2; m2 += 2) {
            const int m3 = -m1 - m2;
            if (std::abs(m3) > j3) continue;
            expect_rel(wigner3j(T(j1), T(j2), T(j3), T(m1), T(m2), T(m3)), oracle::threej2(j1, j2, j3, m1, m2, m3),
                       1e-12);
          }
  // random sample for j <= 10
  std::mt19937 rng(20240611);
  std::uniform_int_distribution<int> jdist(0, 20);
  int checked = 0;
  while (checked < 3000) {
    const int j1 = jdist(rng), j2 = jdist(rng), j3 = jdist(rng);
    if (!oracle::tri(j1, j2, j3)) continue;
    std::uniform_int_distribution<int> d1(0, j1), d2(0, j2);
    const int m1 = -j1 + 2 * d1(rng), m2 = -j2 + 2 * d2(rng), m3 = -m1 - m2;
    if (std::abs(m3) > j3) continue;
    expect_rel(wigner3j(T(j1), T(j2), T(j3), T(m1), T(m2), T(m3)), oracle::threej2(j1, j2, j3, m1, m2, m3), 1e-12);
    ++checked;
  }
}

TEST(Wigner6j, Examples) {
  // {j1 j2 j3; 0 j3 j2} = (-1)^{j1+j2+j3} / ([j2][j3])
  EXPECT_NEAR(oracle::sixj2(2, 2, 2, 0, 2, 2), -1.0 / 3.0, 1e-15);
  expect_rel(wigner6j(1_h, 1_h, 1_h, 0_h, 1_h, 1_h), -1.0 / 3.0, 1e-14);
  expect_rel(wigner6j(1_half, 1_half, 1_h, 1_half, 1_half, 1_h), oracle::sixj2(1, 1, 2, 1, 1, 2), 1e-13);
  EXPECT_EQ(wigner6j(1_h, 1_h, 3_h, 1_h, 1_h, 1_h), 0.0);
  EXPECT_EQ(wigner6j(1_half, 1_h, 1_h, 1_h, 1_h, 1_h), 0.0);  // half-integer perimeter
}

TEST(Wigner6j, OracleMatchesDefinitionAsFour3jSum) {
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b)
      for (int c = 0; c <= 3; ++c)
        for (int d = 0; d <= 3; ++d)
          for (int e = 0; e <= 3; ++e)
            for (int f = 0; f <= 3; ++f) {
              if (!oracle::tri(a, b, c) || !oracle::tri(a, e, f) || !oracle::tri(d, b, f) || !oracle::tri(d, e, c))
                continue;
              EXPECT_NEAR(oracle::sixj2(a, b, c, d, e, f), oracle::sixj2_from_3j(a, b, c, d, e, f), 1e-13);
            }
}

TEST(Wigner6j, AgreesWithRacahOracle) {
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b)
      for (int c = 0; c <= 4; ++c)
        for (int d = 0; d <= 4; ++d)
          for (int e = 0; e <= 4; ++e)
            for (int f = 0; f <= 4; ++f) {
              const double ref = oracle::sixj2(a, b, c, d, e, f);
              const double got = wigner6j(T(a), T(b), T(c), T(d), T(e), T(f));
              if (ref == 0.0) EXPECT_EQ(got, 0.0); else expect_rel(got, ref, 1e-12);
            }
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> jd(0, 20);
  int checked = 0;
  while (checked < 1500) {
    const int a = jd(rng), b = jd(rng), c = jd(rng), d = jd(rng), e = jd(rng), f = jd(rng);
    if (!oracle::tri(a, b, c) || !oracle::tri(a, e, f) || !oracle::tri(d, b, f) || !oracle::tri(d, e, c)) continue;
    const double ref = oracle::sixj2(a, b, c, d, e, f);
    const double got = wigner6j(T(a), T(b), T(c), T(d), T(e), T(f));
    if (ref == 0.0) EXPECT_EQ(got, 0.0); else expect_rel(got, ref, 1e-12);
    ++checked;
  }
}

TEST(Wigner6j, SymmetriesUpToFour) {
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; b <= 8; ++b)
      for (int c = std::abs(a - b); c <= std::min(a + b, 8); c += 2)
        for (int d = 0; d <= 8; ++d)
          for (int e = 0; e <= 8; ++e)
            for (int f = 0; f <= 8; ++f) {
              if (!oracle::tri(a, e, f) || !oracle::tri(d, b, f) || !oracle::tri(d, e, c)) continue;
              const double v = wigner6j(T(a), T(b), T(c), T(d), T(e), T(f));
              EXPECT_EQ(wigner6j(T(b), T(c), T(a), T(e), T(f), T(d)), v);
              EXPECT_EQ(wigner6j(T(b), T(a), T(c), T(e), T(d), T(f)), v);
              EXPECT_EQ(wigner6j(T(d), T(e), T(c), T(a), T(b), T(f)), v);
              EXPECT_EQ(wigner6j(T(a), T(e), T(f), T(d), T(b), T(c)), v);
            }
}

TEST(SymbolCache, ConcurrentReadersAndWriters) {
  clear_symbol_cache();
  std::vector<double> serial;
  for (int j = 0; j <= 12; ++j) serial.push_back(wigner6j(T(j), T(j), T(2), T(j), T(j), T(2)));
  clear_symbol_cache();
  std::vector<std::vector<double>> results(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      for (int rep = 0; rep < 50; ++rep)
        for (int j = 0; j <= 12; ++j) {
          const double v = wigner6j(T(j), T(j), T(2), T(j), T(j), T(2));
          if (rep == 0) results[t].push_back(v);
        }
    });
  for (auto& th : threads) th.join();
  for (const auto& r : results) EXPECT_EQ(r, serial);
  const auto stats = symbol_cache_stats();
  EXPECT_GT(stats.hits, 0u);
  EXPECT_LE(stats.entries, 13u);
}

TEST(ClebschGordan, SpinHalfPair) {
  EXPECT_NEAR(clebsch_gordan(1_half, 1_half, 1_half, -1_half, 1_h, 0_h), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(clebsch_gordan(1_half, 1_half, 1_half, -1_half, 0_h, 0_h), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(clebsch_gordan(1_half, -1_half, 1_half, 1_half, 0_h, 0_h), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(clebsch_gordan(1_h, 0_h, 1_half, 1_half, 3_half, 1_half), oracle::cg2(2, 0, 1, 1, 3, 1), 1e-15);
}
