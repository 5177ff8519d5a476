/*
 * Copyright (C) 2026 epienkf contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "epienkf/error.hpp"
#include "epienkf/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace epienkf {
namespace {

TEST(RandomStream, SameSeedSameSequence)
{
    RandomStream a(42);
    RandomStream b(42);
    for (int k = 0; k < 100; ++k) {
        EXPECT_EQ(a.uniform(), b.uniform());
    }
}

TEST(RandomStream, SplitDependsOnlyOnSeedAndKey)
{
    RandomStream a(7);
    RandomStream b(7);
    for (int k = 0; k < 13; ++k) {
        b.uniform();   // consuming the parent must not change its children
    }
    EXPECT_EQ(a.split("truth").seed(), b.split("truth").seed());
    EXPECT_EQ(a.split(3).seed(), b.split(3).seed());
    EXPECT_NE(a.split("truth").seed(), a.split("reference").seed());
    EXPECT_NE(a.split(1).seed(), a.split(2).seed());
    EXPECT_NE(RandomStream(8).split(1).seed(), a.split(1).seed());
}

TEST(RandomStream, UniformInUnitInterval)
{
    RandomStream rng(1);
    for (int k = 0; k < 10000; ++k) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(RandomStream, NormalMoments)
{
    RandomStream rng(2);
    const int n = 40000;
    double s1 = 0.0;
    double s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = rng.normal(1.5, 2.0);
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 1.5, 3.0 * 2.0 / std::sqrt(n));
    EXPECT_NEAR(var, 4.0, 0.05 * 4.0);
}

class PoissonMoments : public ::testing::TestWithParam<double> {};

// Mean and variance of 20 000 draws within 3 standard errors. The standard
// error of the sample variance uses the Poisson fourth central moment
// mu4 = lambda (1 + 3 lambda).
TEST_P(PoissonMoments, WithinThreeStandardErrors)
{
    const double lambda = GetParam();
    RandomStream rng(RandomStream(2024).split(static_cast<std::uint64_t>(lambda * 1000)));
    const int n = 20000;
    std::vector<double> draws(n);
    double s1 = 0.0;
    for (auto& x : draws) {
        x = rng.poisson(lambda);
        ASSERT_GE(x, 0.0);
        ASSERT_EQ(x, std::floor(x));
        s1 += x;
    }
    const double mean = s1 / n;
    double s2 = 0.0;
    for (double x : draws) {
        s2 += (x - mean) * (x - mean);
    }
    const double var = s2 / (n - 1);
    const double se_mean = std::sqrt(lambda / n);
    const double mu4 = lambda * (1.0 + 3.0 * lambda);
    const double se_var = std::sqrt((mu4 - lambda * lambda * (n - 3.0) / (n - 1.0)) / n);
    EXPECT_LE(std::fabs(mean - lambda), 3.0 * se_mean) << "lambda " << lambda;
    EXPECT_LE(std::fabs(var - lambda), 3.0 * se_var) << "lambda " << lambda;
}

INSTANTIATE_TEST_SUITE_P(Intensities, PoissonMoments, ::testing::Values(0.5, 4.0, 9.99, 10.0, 40.0, 1000.0));

TEST(RandomStream, PoissonEdgeCases)
{
    RandomStream rng(9);
    EXPECT_EQ(rng.poisson(0.0), 0.0);
    EXPECT_THROW(rng.poisson(-1.0), Error);
    EXPECT_THROW(rng.poisson(std::nan("")), Error);
    EXPECT_THROW(rng.poisson(INFINITY), Error);
}

TEST(Splitmix, KnownValue)
{
    // First output of the reference splitmix64 generator seeded with 0.
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
}

} // namespace
} // namespace epienkf
