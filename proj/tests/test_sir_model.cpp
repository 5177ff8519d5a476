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
#include "epienkf/kernels.hpp"
#include "epienkf/sir_model.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace epienkf {
namespace {

ModelState random_state(const Grid& g, RandomStream& rng, double infected_scale = 5.0)
{
    ModelState s = ModelState::zeros(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        s.s[k] = std::floor(100.0 + 900.0 * rng.uniform());
        s.i[k] = rng.uniform() < 0.3 ? std::floor(infected_scale * rng.uniform()) : 0.0;
        s.r[k] = std::floor(20.0 * rng.uniform());
    }
    return s;
}

// Full-domain O(K) sum, no cutoff.
double brute_intensity(const ModelState& s, std::size_t cell, const EpiParams& p)
{
    const Grid& g = s.grid;
    const std::size_t ci = cell / g.ny();
    const std::size_t cj = cell % g.ny();
    double acc = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.ny(); ++j) {
            const double d = std::hypot(g.center_x(i) - g.center_x(ci), g.center_y(j) - g.center_y(cj));
            acc += p.alpha * std::exp(-d / p.lambda) * s.i(i, j);
        }
    }
    return s.s[cell] * acc * g.cell_area() * p.dt;
}

TEST(Weight, Examples)
{
    EpiParams p;
    p.alpha = 2.0;
    p.lambda = 3.0;
    p.cutoff_radius = 10.0;
    EXPECT_EQ(weight({1.0, 1.0}, {1.0, 1.0}, p), 2.0);
    EXPECT_NEAR(weight({0.0, 0.0}, {3.0, 0.0}, p), 2.0 * std::exp(-1.0), 1e-15);
    EXPECT_EQ(weight({0.0, 0.0}, {10.5, 0.0}, p), 0.0);
    EXPECT_EQ(weight({0.0, 1.0}, {4.0, 5.0}, p), weight({4.0, 5.0}, {0.0, 1.0}, p));
}

TEST(EpiParams, Validation)
{
    EpiParams p;
    EXPECT_NO_THROW(validate(p));
    p.lambda = 0.0;
    EXPECT_THROW(validate(p), Error);
    p = EpiParams{};
    p.cutoff_radius = p.lambda / 2.0;
    EXPECT_THROW(validate(p), Error);
    p = EpiParams{};
    p.alpha = -1.0;
    EXPECT_THROW(validate(p), Error);
    p = EpiParams{};
    p.dt = 0.0;
    EXPECT_THROW(validate(p), Error);
}

TEST(InfectionIntensity, ZeroCases)
{
    const Grid g = make_grid(6, 6, 10.0, 10.0);
    ModelState s = ModelState::zeros(g);
    s.s = FieldBlock(g, 100.0);
    const EpiParams p;
    EXPECT_EQ(infection_intensity(s, 7, p), 0.0);
    s.i(2, 2) = 5.0;
    s.s(3, 3) = 0.0;
    EXPECT_EQ(infection_intensity(s, g.index(3, 3), p), 0.0);
    EXPECT_GT(infection_intensity(s, g.index(2, 3), p), 0.0);
}

TEST(InfectionIntensity, FourByFourMatchesBruteForce)
{
    const Grid g = make_grid(4, 4, 10.0, 10.0);
    ModelState s = ModelState::zeros(g);
    s.s = FieldBlock(g, 500.0);
    s.i(1, 2) = 7.0;
    EpiParams p;
    p.alpha = 3e-6;
    p.lambda = 8.0;
    p.cutoff_radius = 100.0;   // beyond the domain diameter
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_NEAR(infection_intensity(s, k, p), brute_intensity(s, k, p), 1e-12);
    }
}

TEST(InfectionIntensity, OutOfRange)
{
    const Grid g = make_grid(4, 4, 1.0, 1.0);
    try {
        infection_intensity(ModelState::zeros(g), 16, EpiParams{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::index_out_of_range);
    }
}

TEST(InfectionIntensity, FieldKernelsAgreeWithPointwise)
{
    RandomStream rng(3);
    const Grid g = make_grid(13, 9, 10.0, 10.0);
    const ModelState s = random_state(g, rng);
    EpiParams p;
    p.cutoff_radius = 25.0;
    const FieldBlock serial = kernels::infection_intensity_serial(s, p);
    const FieldBlock parallel = kernels::infection_intensity_parallel(s, p);
    EXPECT_EQ(serial, parallel);
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_NEAR(serial[k], infection_intensity(s, k, p), 1e-12 * (1.0 + serial[k]));
    }
    p.cutoff_radius = 1000.0;
    const FieldBlock full = infection_intensity_field(s, p);
    for (std::size_t k = 0; k < g.size(); k += 7) {
        EXPECT_NEAR(full[k], brute_intensity(s, k, p), 1e-10 * (1.0 + full[k]));
    }
}

TEST(InfectionIntensity, SumOfSourcesEqualsAggregate)
{
    // The intensity of the aggregated draw is the sum of per-source intensities.
    const Grid g = make_grid(6, 6, 10.0, 10.0);
    ModelState both = ModelState::zeros(g);
    both.s = FieldBlock(g, 300.0);
    ModelState first = both;
    ModelState second = both;
    first.i(1, 1) = 4.0;
    second.i(4, 3) = 9.0;
    both.i(1, 1) = 4.0;
    both.i(4, 3) = 9.0;
    const EpiParams p;
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_NEAR(infection_intensity(both, k, p),
                    infection_intensity(first, k, p) + infection_intensity(second, k, p), 1e-12);
    }
}

TEST(StepStochastic, NoInfectionLeavesStateUnchanged)
{
    const Grid g = make_grid(5, 5, 10.0, 10.0);
    ModelState s = ModelState::zeros(g, 3.0);
    s.s = FieldBlock(g, 100.0);
    s.r = FieldBlock(g, 5.0);
    RandomStream rng(1);
    const ModelState next = step_stochastic(s, EpiParams{}, rng);
    EXPECT_EQ(next.s, s.s);
    EXPECT_EQ(next.i, s.i);
    EXPECT_EQ(next.r, s.r);
    EXPECT_EQ(next.time, 4.0);
}

TEST(StepStochastic, ConservesCellsAndIsMonotone)
{
    RandomStream init(5);
    const Grid g = make_grid(12, 12, 10.0, 10.0);
    ModelState s = random_state(g, init, 50.0);
    const FieldBlock before = cell_population(s);
    EpiParams p;
    p.alpha = 1e-5;   // strong infection so clamps are exercised
    p.q = 2e-2;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RandomStream rng(seed);
        ModelState cur = s;
        for (int step = 0; step < 20; ++step) {
            const ModelState next = step_stochastic(cur, p, rng);
            EXPECT_LE(sum(next.s), sum(cur.s));
            EXPECT_GE(sum(next.r), sum(cur.r));
            for (std::size_t k = 0; k < g.size(); ++k) {
                ASSERT_GE(next.s[k], 0.0);
                ASSERT_GE(next.i[k], 0.0);
                ASSERT_GE(next.r[k], 0.0);
            }
            cur = next;
        }
        const FieldBlock after = cell_population(cur);
        EXPECT_LE(max_abs_diff(after, before), 1e-9 * max_abs(before));
    }
}

TEST(StepStochastic, NegativeInputRejected)
{
    const Grid g = make_grid(4, 4, 1.0, 1.0);
    ModelState s = ModelState::zeros(g);
    s.i(1, 1) = -1.0;
    RandomStream rng(1);
    try {
        step_stochastic(s, EpiParams{}, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::negative_state);
    }
}

TEST(StepStochastic, MeanIncrementMatchesIntensity)
{
    const Grid g = make_grid(5, 5, 10.0, 10.0);
    ModelState s = ModelState::zeros(g);
    s.s = FieldBlock(g, 1000.0);
    s.i(2, 2) = 10.0;
    EpiParams p;
    p.alpha = 1e-4;
    const std::size_t cell = g.index(2, 3);
    const double lambda = infection_intensity(s, cell, p);
    ASSERT_GT(lambda, 0.5);
    RandomStream rng(99);
    const int n = 20000;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const ModelState next = step_stochastic(s, p, rng);
        acc += s.s[cell] - next.s[cell];
    }
    EXPECT_NEAR(acc / n, lambda, 3.0 * std::sqrt(lambda / n));
}

TEST(Advance, ZeroStepsAndComposition)
{
    RandomStream init(8);
    const Grid g = make_grid(10, 10, 10.0, 10.0);
    const ModelState s = random_state(g, init);
    const EpiParams p;
    RandomStream rng(1);
    const ModelState same = advance(s, 0, p, rng);
    EXPECT_EQ(same.i, s.i);
    EXPECT_EQ(same.time, s.time);

    RandomStream a(21);
    RandomStream b(21);
    const ModelState whole = advance(s, 7, p, a);
    const ModelState split = advance(advance(s, 3, p, b), 4, p, b);
    EXPECT_EQ(whole.s, split.s);
    EXPECT_EQ(whole.i, split.i);
    EXPECT_EQ(whole.r, split.r);
    EXPECT_EQ(whole.time, 7.0);
}

TEST(Advance, SingleCellOutbreakExpandsRadially)
{
    const Grid g = make_grid(60, 60, 10.0, 10.0);
    ModelState s = ModelState::zeros(g);
    s.s = FieldBlock(g, 1000.0);
    s.s(30, 30) -= 50.0;
    s.i(30, 30) = 50.0;
    const double total = total_population(s);
    RandomStream rng(2010);
    const ModelState later = advance(s, 120, EpiParams{}, rng);
    EXPECT_NEAR(total_population(later), total, 1e-9 * total);

    // Affected region (ever infected) is a filled disc around the seed; the
    // active infection sits on its rim, not at the centre.
    double ring = 0.0;
    double centre = 0.0;
    std::size_t affected = 0;
    for (std::size_t i = 0; i < 60; ++i) {
        for (std::size_t j = 0; j < 60; ++j) {
            const double d = std::hypot(i - 30.0, j - 30.0);
            if (later.r(i, j) + later.i(i, j) > 1.0) {
                ++affected;
            }
            if (d < 3.0) {
                centre += later.i(i, j);
            }
        }
    }
    const double radius = std::sqrt(static_cast<double>(affected) / std::numbers::pi);
    ASSERT_GT(radius, 5.0);
    ASSERT_LT(radius, 29.0);
    for (std::size_t i = 0; i < 60; ++i) {
        for (std::size_t j = 0; j < 60; ++j) {
            const double d = std::hypot(i - 30.0, j - 30.0);
            if (std::fabs(d - radius) < 3.0) {
                ring += later.i(i, j);
            }
        }
    }
    EXPECT_GT(ring, 5.0 * centre);
    EXPECT_GT(ring, 0.0);
}

TEST(StepStochastic, LanesAreDeterministicPerLaneCount)
{
    RandomStream init(4);
    const Grid g = make_grid(16, 16, 10.0, 10.0);
    const ModelState s = random_state(g, init, 30.0);
    const EpiParams p;
    RandomStream a(5);
    RandomStream b(5);
    const ModelState x = step_stochastic(s, p, a, 4);
    const ModelState y = step_stochastic(s, p, b, 4);
    EXPECT_EQ(x.s, y.s);
    EXPECT_EQ(x.i, y.i);
    EXPECT_LE(max_abs_diff(cell_population(x), cell_population(s)), 1e-9);
}

} // namespace
} // namespace epienkf
