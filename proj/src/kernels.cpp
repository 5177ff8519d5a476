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

#include "epienkf/kernels.hpp"

#include "epienkf/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace epienkf::kernels {

int max_threads() noexcept
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// ---------------------------------------------------------------------------
// DST-I

namespace {

std::vector<double> sine_table(std::size_t n)
{
    std::vector<double> table(n * n);
    const double norm = std::sqrt(2.0 / static_cast<double>(n + 1));
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            // Reduce (p+1)(i+1) mod 2(n+1) so the sine argument stays small.
            const std::size_t m = ((p + 1) * (i + 1)) % (2 * (n + 1));
            table[p * n + i] = norm
                * std::sin(std::numbers::pi * static_cast<double>(m) / static_cast<double>(n + 1));
        }
    }
    return table;
}

class PlanCache {
public:
    ~PlanCache()
    {
        for (auto& [key, plan] : plans_) {
            fftw_destroy_plan(plan);
        }
    }

    fftw_plan get(std::size_t nx, std::size_t ny)
    {
        std::lock_guard lock(mutex_);
        auto it = plans_.find({nx, ny});
        if (it != plans_.end()) {
            return it->second;
        }
        double* in = fftw_alloc_real(nx * ny);
        double* out = fftw_alloc_real(nx * ny);
        fftw_plan plan = fftw_plan_r2r_2d(static_cast<int>(nx), static_cast<int>(ny), in, out,
                                          FFTW_RODFT00, FFTW_RODFT00,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(std::make_pair(nx, ny), plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, std::size_t>, fftw_plan> plans_;
};

PlanCache& plan_cache()
{
    static PlanCache cache;
    return cache;
}

} // namespace

FieldBlock dst2_direct(const FieldBlock& field)
{
    const std::size_t nx = field.nx();
    const std::size_t ny = field.ny();
    const auto sx = sine_table(nx);
    const auto sy = sine_table(ny);

    // Transform along y (contiguous), then along x.
    FieldBlock tmp(nx, ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t q = 0; q < ny; ++q) {
            double acc = 0.0;
            for (std::size_t j = 0; j < ny; ++j) {
                acc += sy[q * ny + j] * field(i, j);
            }
            tmp(i, q) = acc;
        }
    }
    FieldBlock out(nx, ny);
    for (std::size_t p = 0; p < nx; ++p) {
        for (std::size_t q = 0; q < ny; ++q) {
            double acc = 0.0;
            for (std::size_t i = 0; i < nx; ++i) {
                acc += sx[p * nx + i] * tmp(i, q);
            }
            out(p, q) = acc;
        }
    }
    return out;
}

FieldBlock dst2_fftw(const FieldBlock& field)
{
    const std::size_t nx = field.nx();
    const std::size_t ny = field.ny();
    fftw_plan plan = plan_cache().get(nx, ny);
    std::vector<double> in(field.values().begin(), field.values().end());
    std::vector<double> out(nx * ny);
    fftw_execute_r2r(plan, in.data(), out.data());
    // RODFT00 is unnormalized with a factor 2 per axis.
    const double scale = 0.5 / std::sqrt(static_cast<double>((nx + 1) * (ny + 1)));
    for (double& v : out) {
        v *= scale;
    }
    return FieldBlock(nx, ny, std::move(out));
}

// ---------------------------------------------------------------------------
// Infection intensity

namespace {

struct StencilEntry {
    std::ptrdiff_t di;
    std::ptrdiff_t dj;
    double w;
};

std::vector<StencilEntry> kernel_stencil(const Grid& grid, const EpiParams& params)
{
    const auto reach_x = static_cast<std::ptrdiff_t>(
        std::min<double>(std::floor(params.cutoff_radius / grid.dx()), static_cast<double>(grid.nx())));
    const auto reach_y = static_cast<std::ptrdiff_t>(
        std::min<double>(std::floor(params.cutoff_radius / grid.dy()), static_cast<double>(grid.ny())));
    std::vector<StencilEntry> stencil;
    for (std::ptrdiff_t di = -reach_x; di <= reach_x; ++di) {
        for (std::ptrdiff_t dj = -reach_y; dj <= reach_y; ++dj) {
            const Point a{0.0, 0.0};
            const Point b{static_cast<double>(di) * grid.dx(), static_cast<double>(dj) * grid.dy()};
            const double w = weight(a, b, params);
            if (w > 0.0) {
                stencil.push_back({di, dj, w});
            }
        }
    }
    return stencil;
}

double cell_intensity(const ModelState& state, const std::vector<StencilEntry>& stencil,
                      std::size_t i, std::size_t j, double area_dt)
{
    const double s = state.s(i, j);
    if (s <= 0.0) {
        return 0.0;
    }
    const auto nx = static_cast<std::ptrdiff_t>(state.grid.nx());
    const auto ny = static_cast<std::ptrdiff_t>(state.grid.ny());
    double acc = 0.0;
    for (const auto& e : stencil) {
        const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i) + e.di;
        const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j) + e.dj;
        if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) {
            continue;
        }
        acc += e.w * state.i(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
    }
    return s * acc * area_dt;
}

} // namespace

FieldBlock infection_intensity_serial(const ModelState& state, const EpiParams& params)
{
    const auto stencil = kernel_stencil(state.grid, params);
    const double area_dt = state.grid.cell_area() * params.dt;
    FieldBlock out(state.grid);
    for (std::size_t i = 0; i < state.grid.nx(); ++i) {
        for (std::size_t j = 0; j < state.grid.ny(); ++j) {
            out(i, j) = cell_intensity(state, stencil, i, j, area_dt);
        }
    }
    return out;
}

FieldBlock infection_intensity_parallel(const ModelState& state, const EpiParams& params)
{
    const auto stencil = kernel_stencil(state.grid, params);
    const double area_dt = state.grid.cell_area() * params.dt;
    FieldBlock out(state.grid);
    const auto nx = static_cast<std::ptrdiff_t>(state.grid.nx());
    const std::size_t ny = state.grid.ny();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            out(static_cast<std::size_t>(i), j)
                = cell_intensity(state, stencil, static_cast<std::size_t>(i), j, area_dt);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Warp

double sample_bilinear(const FieldBlock& field, double fi, double fj) noexcept
{
    const double max_i = static_cast<double>(field.nx() - 1);
    const double max_j = static_cast<double>(field.ny() - 1);
    fi = std::clamp(fi, 0.0, max_i);
    fj = std::clamp(fj, 0.0, max_j);
    const auto i0 = std::min(static_cast<std::size_t>(fi), field.nx() - 2);
    const auto j0 = std::min(static_cast<std::size_t>(fj), field.ny() - 2);
    const double a = fi - static_cast<double>(i0);
    const double b = fj - static_cast<double>(j0);
    return (1.0 - a) * ((1.0 - b) * field(i0, j0) + b * field(i0, j0 + 1))
        + a * ((1.0 - b) * field(i0 + 1, j0) + b * field(i0 + 1, j0 + 1));
}

namespace {

void check_warp_shapes(const FieldBlock& field, const WarpMapping& t)
{
    if (!field.same_shape(t.tx) || !field.same_shape(t.ty)) {
        throw Error(ErrorCode::shape_mismatch, "warp mapping and field have different shapes");
    }
}

} // namespace

FieldBlock warp_serial(const FieldBlock& field, const WarpMapping& t, double dx, double dy)
{
    check_warp_shapes(field, t);
    FieldBlock out(field.nx(), field.ny());
    for (std::size_t i = 0; i < field.nx(); ++i) {
        for (std::size_t j = 0; j < field.ny(); ++j) {
            out(i, j) = sample_bilinear(field, static_cast<double>(i) + t.tx(i, j) / dx,
                                        static_cast<double>(j) + t.ty(i, j) / dy);
        }
    }
    return out;
}

FieldBlock warp_parallel(const FieldBlock& field, const WarpMapping& t, double dx, double dy)
{
    check_warp_shapes(field, t);
    FieldBlock out(field.nx(), field.ny());
    const auto nx = static_cast<std::ptrdiff_t>(field.nx());
    const std::size_t ny = field.ny();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < nx; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j = 0; j < ny; ++j) {
            out(i, j) = sample_bilinear(field, static_cast<double>(i) + t.tx(i, j) / dx,
                                        static_cast<double>(j) + t.ty(i, j) / dy);
        }
    }
    return out;
}

} // namespace epienkf::kernels
