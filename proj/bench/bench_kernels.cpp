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

// Serial reference kernels against their OpenMP versions, the direct DST
// against FFTW, and the dense against the spectral analysis.

#include "epienkf/enkf.hpp"
#include "epienkf/fft_enkf.hpp"
#include "epienkf/kernels.hpp"
#include "epienkf/spectral.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace epienkf;

FieldBlock random_field(std::size_t n, std::uint64_t seed)
{
    RandomStream rng(seed);
    FieldBlock f(n, n);
    for (auto& v : f.values()) {
        v = rng.uniform();
    }
    return f;
}

ModelState outbreak(std::size_t n)
{
    const Grid g = make_grid(n, n, 10.0, 10.0);
    ModelState s = ModelState::zeros(g);
    for (std::size_t k = 0; k < s.s.size(); ++k) {
        s.s[k] = 1000.0;
    }
    s.i(n / 2, n / 2) = 50.0;
    s.s(n / 2, n / 2) -= 50.0;
    return s;
}

void BM_dst_direct(benchmark::State& st)
{
    const auto f = random_field(static_cast<std::size_t>(st.range(0)), 1);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::dst2_direct(f));
    }
}
BENCHMARK(BM_dst_direct)->Arg(32)->Arg(100);

void BM_dst_fftw(benchmark::State& st)
{
    const auto f = random_field(static_cast<std::size_t>(st.range(0)), 1);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::dst2_fftw(f));
    }
}
BENCHMARK(BM_dst_fftw)->Arg(32)->Arg(100);

void BM_intensity_serial(benchmark::State& st)
{
    const auto s = outbreak(static_cast<std::size_t>(st.range(0)));
    const EpiParams p;
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::infection_intensity_serial(s, p));
    }
}
BENCHMARK(BM_intensity_serial)->Arg(32)->Arg(100);

void BM_intensity_parallel(benchmark::State& st)
{
    const auto s = outbreak(static_cast<std::size_t>(st.range(0)));
    const EpiParams p;
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::infection_intensity_parallel(s, p));
    }
}
BENCHMARK(BM_intensity_parallel)->Arg(32)->Arg(100);

WarpMapping shift(std::size_t n)
{
    const Grid g = make_grid(n, n, 1.0, 1.0);
    RandomStream rng(3);
    return random_smooth_mapping(g, SmoothnessSpec{2.0, 0.5}, rng);
}

void BM_warp_serial(benchmark::State& st)
{
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto f = random_field(n, 2);
    const auto t = shift(n);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::warp_serial(f, t, 1.0, 1.0));
    }
}
BENCHMARK(BM_warp_serial)->Arg(100);

void BM_warp_parallel(benchmark::State& st)
{
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto f = random_field(n, 2);
    const auto t = shift(n);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::warp_parallel(f, t, 1.0, 1.0));
    }
}
BENCHMARK(BM_warp_parallel)->Arg(100);

struct AnalysisCase {
    std::vector<BlockState> members;
    Observation obs;
    Perturbations noise;
};

AnalysisCase analysis_case(std::size_t n, std::size_t members)
{
    RandomStream rng(7);
    AnalysisCase c;
    for (std::size_t k = 0; k < members; ++k) {
        c.members.push_back({random_field(n, 10 + k)});
    }
    c.obs.parts.push_back({0, 0.1, random_field(n, 99)});
    c.noise = draw_perturbations(c.obs, members, rng);
    return c;
}

void BM_analysis_dense(benchmark::State& st)
{
    const auto c = analysis_case(static_cast<std::size_t>(st.range(0)), 5);
    for (auto _ : st) {
        benchmark::DoNotOptimize(dense_analysis(c.members, c.obs, c.noise));
    }
}
BENCHMARK(BM_analysis_dense)->Arg(32)->Arg(100);

void BM_analysis_spectral(benchmark::State& st)
{
    const auto c = analysis_case(static_cast<std::size_t>(st.range(0)), 5);
    for (auto _ : st) {
        benchmark::DoNotOptimize(fft_enkf_analysis(c.members, c.obs, c.noise));
    }
}
BENCHMARK(BM_analysis_spectral)->Arg(32)->Arg(100);

} // namespace

BENCHMARK_MAIN();
