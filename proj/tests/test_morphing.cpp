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

#include "epienkf/assimilation.hpp"
#include "epienkf/error.hpp"
#include "epienkf/kernels.hpp"
#include "epienkf/morphing.hpp"
#include "epienkf/spectral.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace epienkf {
namespace {

/// Random smooth mapping rescaled to a given largest displacement, in cells.
WarpMapping smooth_warp(const Grid& g, double max_cells, std::uint64_t seed)
{
    RandomStream rng(seed);
    WarpMapping t = random_smooth_mapping(g, SmoothnessSpec{1.0, 0.7}, rng);
    const double scale = max_cells * g.dx() / t.max_displacement();
    t.tx *= scale;
    t.ty *= scale;
    return t;
}

ModelState smooth_state(const Grid& g, double ci, double cj)
{
    ModelState s = ModelState::zeros(g);
    const std::size_t n = g.nx();
    s.i = test::gaussian_bump(n, g.ny(), ci, cj, 5.0, 20.0);
    s.r = test::gaussian_bump(n, g.ny(), ci, cj, 8.0, 40.0);
    s.s = FieldBlock(g, 100.0) - s.i - s.r;
    return s;
}

TEST(Warp, ZeroMappingIsIdentity)
{
    RandomStream rng(1);
    const Grid g = make_grid(9, 7, 2.0, 3.0);
    const FieldBlock f = test::random_field(9, 7, rng);
    EXPECT_EQ(warp(f, WarpMapping::zero(g), g), f);
}

TEST(Warp, OneCellShiftTranslates)
{
    const Grid g = make_grid(20, 20, 10.0, 10.0);
    const WarpMapping t{test::taper(20, 20, 10.0), FieldBlock(g)};
    const FieldBlock f = test::gaussian_bump(20, 20, 10.0, 9.0, 2.0);
    const FieldBlock w = warp(f, t, g);
    for (std::size_t i = 1; i + 2 < 20; ++i) {
        for (std::size_t j = 1; j + 1 < 20; ++j) {
            EXPECT_NEAR(w(i, j), f(i + 1, j), 1e-12);
        }
    }
    for (std::size_t j = 0; j < 20; ++j) {
        EXPECT_EQ(w(0, j), f(0, j));
        EXPECT_EQ(w(19, j), f(19, j));
    }
}

TEST(Warp, LinearAndRangePreserving)
{
    RandomStream rng(2);
    const Grid g = make_grid(16, 12, 1.0, 1.0);
    const FieldBlock f = test::random_field(16, 12, rng);
    const FieldBlock h = test::random_field(16, 12, rng);
    const WarpMapping t = smooth_warp(g, 2.5, 3);
    const FieldBlock lhs = warp(2.0 * f + 3.0 * h, t, g);
    const FieldBlock rhs = 2.0 * warp(f, t, g) + 3.0 * warp(h, t, g);
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12);
    const FieldBlock w = warp(f, t, g);
    const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
    for (double v : w.values()) {
        EXPECT_GE(v, *lo - 1e-15);
        EXPECT_LE(v, *hi + 1e-15);
    }
}

TEST(Warp, SerialAndParallelKernelsAgree)
{
    RandomStream rng(4);
    const Grid g = make_grid(40, 33, 2.0, 2.0);
    const FieldBlock f = test::random_field(40, 33, rng);
    const WarpMapping t = smooth_warp(g, 3.0, 5);
    EXPECT_EQ(kernels::warp_serial(f, t, 2.0, 2.0), kernels::warp_parallel(f, t, 2.0, 2.0));
}

TEST(Warp, RoundTripWithInverse)
{
    const Grid g = make_grid(48, 48, 1.0, 1.0);
    const FieldBlock f = test::gaussian_bump(48, 48, 22.0, 26.0, 6.0);
    const WarpMapping t = smooth_warp(g, 1.5, 6);
    const WarpMapping s = invert_mapping(t, g);
    EXPECT_LT(relative_l2(warp(warp(f, t, g), s, g), f), 0.05);
}

TEST(InvertMapping, Zero)
{
    const Grid g = make_grid(8, 8, 1.0, 1.0);
    const WarpMapping s = invert_mapping(WarpMapping::zero(g), g);
    EXPECT_EQ(s.max_displacement(), 0.0);
}

TEST(InvertMapping, UniformShift)
{
    const Grid g = make_grid(30, 30, 2.0, 2.0);
    const WarpMapping t{test::taper(30, 30, 1.2), test::taper(30, 30, -0.8)};
    const WarpMapping s = invert_mapping(t, g);
    for (std::size_t i = 5; i < 25; ++i) {
        for (std::size_t j = 5; j < 25; ++j) {
            EXPECT_NEAR(s.tx(i, j), -1.2, 0.1 * g.dx());
            EXPECT_NEAR(s.ty(i, j), 0.8, 0.1 * g.dy());
        }
    }
    EXPECT_TRUE(s.zero_on_boundary());
}

TEST(InvertMapping, RandomSmoothTwoCells)
{
    const Grid g = make_grid(40, 40, 5.0, 5.0);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const WarpMapping t = smooth_warp(g, 2.0, seed);
        const WarpMapping s = invert_mapping(t, g);
        EXPECT_LT(composition_defect(t, s, g), 0.1);
        EXPECT_TRUE(s.zero_on_boundary());
    }
}

TEST(InvertMapping, FoldingMappingFails)
{
    const Grid g = make_grid(10, 10, 1.0, 1.0);
    WarpMapping t = WarpMapping::zero(g);
    t.tx(4, 5) = 3.0;   // node 4 samples beyond node 6: orientation flips
    EXPECT_LT(min_jacobian(t, g), 0.0);
    try {
        invert_mapping(t, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::non_invertible_mapping);
    }
}

TEST(Register, IdenticalFieldsGiveZero)
{
    for (std::size_t n : {16u, 33u, 64u}) {
        const Grid g = make_grid(n, n, 10.0, 10.0);
        const FieldBlock f = test::gaussian_bump(n, n, n / 2.0, n / 3.0, n / 8.0);
        const RegistrationResult r = register_field(f, f, g, RegistrationOptions{});
        EXPECT_LT(r.warp.max_displacement() / g.dx(), 0.05);
    }
}

TEST(Register, ZeroFieldsGiveZero)
{
    const Grid g = make_grid(16, 16, 1.0, 1.0);
    const FieldBlock f = test::gaussian_bump(16, 16, 8, 8, 2);
    EXPECT_EQ(register_field(FieldBlock(g), f, g, RegistrationOptions{}).warp.max_displacement(), 0.0);
    EXPECT_EQ(register_field(f, FieldBlock(g), g, RegistrationOptions{}).warp.max_displacement(), 0.0);
}

TEST(Register, ShiftedBumpRecovered)
{
    const std::size_t n = 64;
    const Grid g = make_grid(n, n, 10.0, 10.0);
    const FieldBlock reference = test::gaussian_bump(n, n, 30.0, 32.0, 6.0);
    const FieldBlock moving = test::gaussian_bump(n, n, 35.0, 32.0, 6.0);
    const auto start = std::chrono::steady_clock::now();
    const RegistrationResult r = register_field(moving, reference, g, RegistrationOptions{});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(seconds, 2.0);
    // moving(x) = reference(x - 5 cells), so T = -5 cells in x on the half-maximum core.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (moving(i, j) >= 0.5) {
                EXPECT_NEAR(r.warp.tx(i, j) / g.dx(), -5.0, 1.0) << i << "," << j;
                EXPECT_NEAR(r.warp.ty(i, j) / g.dy(), 0.0, 1.0) << i << "," << j;
            }
        }
    }
    EXPECT_TRUE(r.warp.zero_on_boundary());
}

TEST(Register, AmplitudeChangeLeftToResidual)
{
    const std::size_t n = 32;
    const Grid g = make_grid(n, n, 1.0, 1.0);
    const FieldBlock reference = test::gaussian_bump(n, n, 16.0, 15.0, 4.0);
    RegistrationOptions opts;
    opts.gradient_weight = 10.0;
    const RegistrationResult r = register_field(1.5 * reference, reference, g, opts);
    EXPECT_LT(r.warp.max_displacement(), 0.5);
}

TEST(Register, OptionValidation)
{
    const Grid g = make_grid(8, 8, 1.0, 1.0);
    RegistrationOptions opts;
    opts.levels = 0;
    EXPECT_THROW(register_field(FieldBlock(g), FieldBlock(g), g, opts), Error);
    opts = RegistrationOptions{};
    opts.smoothness_weight = -1.0;
    EXPECT_THROW(register_field(FieldBlock(g), FieldBlock(g), g, opts), Error);
}

TEST(MorphTransform, Examples)
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    const ModelState ref = smooth_state(g, 6, 6);
    const MorphState same = morph_transform(ref, ref, WarpMapping::zero(g));
    for (const auto& r : same.residuals) {
        EXPECT_EQ(max_abs(r), 0.0);
    }
    ModelState shifted = ref;
    shifted.i += FieldBlock(g, 1.0);
    const MorphState m = morph_transform(shifted, ref, WarpMapping::zero(g));
    EXPECT_EQ(max_abs(m.residuals[0]), 0.0);
    EXPECT_LE(max_abs_diff(m.residuals[1], FieldBlock(g, 1.0)), 1e-12);
    EXPECT_EQ(max_abs(m.residuals[2]), 0.0);
}

TEST(MorphInverse, Examples)
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    const ModelState ref = smooth_state(g, 6, 6);
    MorphState m{WarpMapping::zero(g), {FieldBlock(g), FieldBlock(g), FieldBlock(g)}};
    const ModelState back = morph_inverse(m, ref);
    EXPECT_EQ(back.i, ref.i);
    m.residuals[2] = FieldBlock(g, 2.0);
    EXPECT_LE(max_abs_diff(morph_inverse(m, ref).r, ref.r + FieldBlock(g, 2.0)), 1e-12);
}

TEST(MorphState, BlockLayout)
{
    const Grid g = make_grid(4, 4, 1.0, 1.0);
    MorphState m{WarpMapping{FieldBlock(g, 1.0), FieldBlock(g, 2.0)}, {FieldBlock(g, 3.0), FieldBlock(g, 4.0)}};
    const BlockState b = m.to_blocks();
    ASSERT_EQ(b.size(), 4u);
    EXPECT_EQ(b[1](0, 0), 2.0);
    const MorphState back = MorphState::from_blocks(b);
    EXPECT_EQ(back.warp.tx, m.warp.tx);
    EXPECT_EQ(back.residuals[1], m.residuals[1]);
}

class MorphRoundTrip : public ::testing::TestWithParam<double> {};

TEST_P(MorphRoundTrip, WithinFivePercent)
{
    const double cells = GetParam();
    const Grid g = make_grid(64, 64, 10.0, 10.0);
    const ModelState ref = smooth_state(g, 30, 34);
    const ModelState member = smooth_state(g, 33, 31);
    const WarpMapping t = smooth_warp(g, cells, 40 + static_cast<std::uint64_t>(cells * 10));
    const ModelState back = morph_inverse(morph_transform(member, ref, t), ref);
    for (std::size_t b = 0; b < 3; ++b) {
        EXPECT_LT(relative_l2(back.block(b), member.block(b)), 0.05) << "block " << b;
    }
}

INSTANTIATE_TEST_SUITE_P(Warps, MorphRoundTrip, ::testing::Values(0.5, 1.0, 2.0, 3.0));

TEST(InitialEnsemble, ZeroAmplitudesGiveCopies)
{
    const Grid g = make_grid(16, 16, 10.0, 10.0);
    const ModelState u = smooth_state(g, 8, 8);
    RandomStream rng(3);
    const Ensemble e = initial_ensemble(u, 4, SmoothnessSpec{0.0, 1.0}, SmoothnessSpec{0.0, 1.0}, rng);
    ASSERT_EQ(e.size(), 4u);
    ASSERT_TRUE(e.reference.has_value());
    for (const auto& m : e.members) {
        EXPECT_EQ(m.i, u.i);
        EXPECT_EQ(m.s, u.s);
    }
    EXPECT_EQ(e.reference->i, u.i);
}

TEST(InitialEnsemble, ZeroInfectionStaysZero)
{
    const Grid g = make_grid(24, 24, 10.0, 10.0);
    ModelState u = smooth_state(g, 12, 12);
    for (std::size_t i = 0; i < 24; ++i) {
        for (std::size_t j = 0; j < 24; ++j) {
            if (std::hypot(i - 12.0, j - 12.0) > 6.0) {
                u.i(i, j) = 0.0;
            }
        }
    }
    u.i(12, 12) = 0.0;   // a zero inside the support
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        RandomStream rng(seed);
        const Ensemble e = initial_ensemble(u, 3, SmoothnessSpec{0.0, 1.0}, SmoothnessSpec{5.0, 0.5}, rng);
        for (const auto& m : e.members) {
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (u.i[k] == 0.0) {
                    ASSERT_EQ(m.i[k], 0.0);
                }
                ASSERT_GE(m.i[k], 0.0);
            }
        }
    }
}

TEST(InitialEnsemble, MembersVaryInAmplitudeAndPosition)
{
    const Grid g = make_grid(40, 40, 10.0, 10.0);
    const ModelState u = smooth_state(g, 20, 20);
    RandomStream rng(12);
    const Ensemble e = initial_ensemble(u, 5, SmoothnessSpec{600.0, 0.5}, SmoothnessSpec{5.0, 0.5}, rng);
    ASSERT_EQ(e.size(), 5u);
    for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = a + 1; b < 5; ++b) {
            EXPECT_GT(max_abs_diff(e.members[a].i, e.members[b].i), 1e-3);
        }
    }
    double spread = 0.0;
    double mass_lo = INFINITY;
    double mass_hi = 0.0;
    const Point c0 = centroid(u.i, g);
    for (const auto& m : e.members) {
        const Point c = centroid(m.i, g);
        spread = std::max(spread, std::hypot(c.x - c0.x, c.y - c0.y));
        mass_lo = std::min(mass_lo, sum(m.i));
        mass_hi = std::max(mass_hi, sum(m.i));
    }
    EXPECT_GT(spread, 1.0);
    EXPECT_GT(mass_hi / mass_lo, 1.01);
}

TEST(InitialEnsemble, ResidualModeAndGuards)
{
    const Grid g = make_grid(16, 16, 10.0, 10.0);
    const ModelState u = smooth_state(g, 8, 8);
    RandomStream rng(3);
    const Ensemble e = initial_ensemble(u, 2, SmoothnessSpec{0.0, 1.0}, SmoothnessSpec{1.0, 0.5}, rng,
                                        InitialPerturbation::residual);
    EXPECT_GT(max_abs_diff(e.members[0].s, u.s), 0.0);
    EXPECT_THROW(initial_ensemble(u, 1, SmoothnessSpec{0.0, 1.0}, SmoothnessSpec{0.0, 1.0}, rng), Error);
}

Ensemble shifted_ensemble(const Grid& g, std::size_t n, double spread_cells, double ci, double cj)
{
    Ensemble e;
    RandomStream rng(55);
    for (std::size_t k = 0; k < n; ++k) {
        const double di = spread_cells * (rng.uniform() - 0.5) * 2.0;
        const double dj = spread_cells * (rng.uniform() - 0.5) * 2.0;
        e.members.push_back(smooth_state(g, ci + di, cj + dj));
    }
    e.reference = smooth_state(g, ci, cj);
    return e;
}

TEST(MorphingAnalysis, ZeroSpreadAndMatchingData)
{
    const Grid g = make_grid(32, 32, 10.0, 10.0);
    const ModelState u = smooth_state(g, 15, 16);
    Ensemble e{{u, u, u}, u};
    for (FilterKind kind : {FilterKind::dense, FilterKind::spectral}) {
        RandomStream rng(1);
        const MorphingAnalysis a = morphing_analysis(e, u.i, kind, MorphingObsParams{}, RegistrationOptions{}, rng);
        EXPECT_LT(a.data_warp.max_displacement() / g.dx(), 0.05);
        for (const auto& m : a.ensemble.members) {
            EXPECT_LT(relative_l2(m.i, u.i), 1e-6);
            EXPECT_LT(relative_l2(m.s, u.s), 1e-6);
        }
    }
}

TEST(MorphingAnalysis, LargeAmplitudeVarianceMovesOnlyPosition)
{
    const Grid g = make_grid(40, 40, 10.0, 10.0);
    const Ensemble e = shifted_ensemble(g, 5, 3.0, 20.0, 20.0);
    const FieldBlock data = 1.8 * smooth_state(g, 23.0, 18.0).i;   // displaced and brighter
    MorphingObsParams obs;
    obs.position_variance = 100.0;
    obs.amplitude_variance = 1e6;
    RandomStream rng(4);
    const MorphingAnalysis a
        = morphing_analysis(e, data, FilterKind::spectral, obs, RegistrationOptions{}, rng);
    // Peak amplitude stays near the forecast, the centroid moves toward the data.
    const double peak_f = max_abs(a.forecast_mean.i);
    const double peak_a = max_abs(a.analysis_mean.i);
    EXPECT_NEAR(peak_a / peak_f, 1.0, 0.1);
    EXPECT_LT(centroid_error(a.analysis_mean.i, data, g), centroid_error(a.forecast_mean.i, data, g));
}

TEST(MorphingAnalysis, CentroidMovesTowardShiftedData)
{
    const Grid g = make_grid(40, 40, 10.0, 10.0);
    const Ensemble e = shifted_ensemble(g, 5, 3.0, 20.0, 20.0);
    // Data: member 0 shifted by a known warp.
    WarpMapping t{test::taper(40, 40, -30.0), test::taper(40, 40, 20.0)};
    const FieldBlock data = warp(e.members[0].i, t, g);
    for (FilterKind kind : {FilterKind::dense, FilterKind::spectral}) {
        RandomStream rng(6);
        const MorphingAnalysis a = morphing_analysis(e, data, kind, MorphingObsParams{}, RegistrationOptions{}, rng);
        const FieldBlock forecast = ensemble_mean(e).i;
        EXPECT_LT(centroid_error(a.analysis_mean.i, data, g), centroid_error(forecast, data, g));
        ASSERT_TRUE(a.ensemble.reference.has_value());
        EXPECT_EQ(a.ensemble.size(), 5u);
        EXPECT_GT(a.position_variance, 0.0);
    }
}

TEST(MorphingAnalysis, RequiresReference)
{
    const Grid g = make_grid(16, 16, 10.0, 10.0);
    const ModelState u = smooth_state(g, 8, 8);
    RandomStream rng(1);
    EXPECT_THROW(morphing_analysis(Ensemble{{u, u}, std::nullopt}, u.i, FilterKind::dense, MorphingObsParams{},
                                   RegistrationOptions{}, rng),
                 Error);
}

TEST(SpreadDiagnostic, VarianceWeightedMean)
{
    // Node variances 2 and 0: sum var^2 / sum var = 2.
    FieldBlock a(4, 4);
    FieldBlock b(4, 4);
    b(1, 1) = 2.0;
    EXPECT_NEAR(spread_diagnostic({a, b}), 2.0, 1e-12);
    EXPECT_EQ(spread_diagnostic({a, a}), 0.0);
}

} // namespace
} // namespace epienkf
