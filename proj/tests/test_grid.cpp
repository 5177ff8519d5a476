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
#include "epienkf/grid.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

namespace epienkf {
namespace {

TEST(MakeGrid, DeskScaleGrid)
{
    const Grid g = make_grid(100, 100, 10.0, 10.0);
    EXPECT_EQ(g.nx(), 100u);
    EXPECT_EQ(g.cell_area(), 100.0);
    EXPECT_DOUBLE_EQ(g.center_x(0), 5.0);
    EXPECT_DOUBLE_EQ(g.center_y(99), 995.0);
}

TEST(MakeGrid, MinimalGrid)
{
    const Grid g = make_grid(4, 4, 1.0, 1.0);
    EXPECT_EQ(g.size(), 16u);
    EXPECT_EQ(g.cell_area(), 1.0);
}

TEST(MakeGrid, RejectsSmallDimensions)
{
    try {
        make_grid(3, 4, 1.0, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::dimension_too_small);
    }
}

TEST(MakeGrid, RejectsNonpositiveSpacing)
{
    try {
        make_grid(4, 4, 0.0, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::nonpositive_spacing);
    }
    EXPECT_THROW(make_grid(4, 4, 1.0, -2.0), Error);
}

TEST(MakeGrid, RowMajorWithXFirst)
{
    const Grid g = make_grid(5, 7, 1.0, 1.0);
    EXPECT_EQ(g.index(2, 3), 2u * 7u + 3u);
    FieldBlock f(g);
    f(2, 3) = 4.0;
    EXPECT_EQ(f[g.index(2, 3)], 4.0);
}

TEST(TotalPopulation, Examples)
{
    const Grid g = make_grid(4, 4, 1.0, 1.0);
    ModelState zero = ModelState::zeros(g);
    EXPECT_EQ(total_population(zero), 0.0);

    ModelState ones = ModelState::zeros(g);
    ones.s = FieldBlock(g, 1.0);
    EXPECT_EQ(total_population(ones), 16.0);
}

TEST(TotalPopulation, MatchesSecondPassOracle)
{
    RandomStream rng(11);
    const Grid g = make_grid(9, 6, 2.0, 3.0);
    ModelState s = ModelState::zeros(g);
    s.s = test::random_field(9, 6, rng, 0.0, 100.0);
    s.i = test::random_field(9, 6, rng, 0.0, 10.0);
    s.r = test::random_field(9, 6, rng, 0.0, 50.0);
    long double oracle = 0.0L;
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            oracle += s.s(i, j);
            oracle += s.i(i, j);
            oracle += s.r(i, j);
        }
    }
    EXPECT_NEAR(total_population(s), static_cast<double>(oracle), 1e-9);
    const FieldBlock cells = cell_population(s);
    EXPECT_DOUBLE_EQ(cells(3, 4), s.s(3, 4) + s.i(3, 4) + s.r(3, 4));
}

TEST(EnsembleMean, IdenticalMembers)
{
    RandomStream rng(3);
    const Grid g = make_grid(4, 5, 1.0, 1.0);
    ModelState m = ModelState::zeros(g);
    m.i = test::random_field(4, 5, rng);
    Ensemble ens{{m, m, m}, std::nullopt};
    const ModelState mean = ensemble_mean(ens);
    EXPECT_LE(max_abs_diff(mean.i, m.i), 1e-15);
}

TEST(EnsembleMean, TwoValues)
{
    const Grid g = make_grid(4, 4, 1.0, 1.0);
    ModelState a = ModelState::zeros(g);
    ModelState b = ModelState::zeros(g);
    a.s = FieldBlock(g, 2.0);
    b.s = FieldBlock(g, 4.0);
    const ModelState mean = ensemble_mean(Ensemble{{a, b}, std::nullopt});
    EXPECT_EQ(mean.s(1, 2), 3.0);
}

TEST(EnsembleMean, ExcludesReferenceAndMatchesLoopOracle)
{
    RandomStream rng(5);
    const Grid g = make_grid(6, 4, 1.0, 1.0);
    Ensemble ens;
    for (int k = 0; k < 5; ++k) {
        ModelState m = ModelState::zeros(g);
        m.s = test::random_field(6, 4, rng, 0.0, 10.0);
        m.i = test::random_field(6, 4, rng, 0.0, 10.0);
        m.r = test::random_field(6, 4, rng, 0.0, 10.0);
        ens.members.push_back(m);
    }
    ModelState ref = ModelState::zeros(g);
    ref.s = FieldBlock(g, 1e6);
    ens.reference = ref;

    const ModelState mean = ensemble_mean(ens);
    for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            double acc = 0.0;
            for (const auto& m : ens.members) {
                acc += m.block(b)[k];
            }
            EXPECT_NEAR(mean.block(b)[k], acc / 5.0, 1e-12);
        }
    }
    // Linearity of the total.
    double totals = 0.0;
    for (const auto& m : ens.members) {
        totals += total_population(m);
    }
    EXPECT_NEAR(total_population(mean), totals / 5.0, 1e-9);
}

TEST(EnsembleMean, EmptyThrows)
{
    try {
        ensemble_mean(Ensemble{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::empty_ensemble);
    }
}

TEST(FieldBlock, OperationsKeepShape)
{
    RandomStream rng(8);
    const FieldBlock a = test::random_field(5, 7, rng);
    const FieldBlock b = test::random_field(5, 7, rng);
    for (const FieldBlock& f : {a + b, a - b, 2.5 * a}) {
        EXPECT_TRUE(f.same_shape(a));
    }
    EXPECT_EQ((a + b)(4, 6), a(4, 6) + b(4, 6));
    EXPECT_EQ((a - b)(0, 1), a(0, 1) - b(0, 1));
    EXPECT_THROW(a + FieldBlock(7, 5), Error);
}

TEST(FieldBlock, Reductions)
{
    FieldBlock f(4, 4);
    f(1, 1) = -3.0;
    f(2, 2) = 2.0;
    EXPECT_EQ(sum(f), -1.0);
    EXPECT_EQ(max_abs(f), 3.0);
    EXPECT_TRUE(all_finite(f));
    f(0, 0) = std::nan("");
    EXPECT_FALSE(all_finite(f));
}

} // namespace
} // namespace epienkf
