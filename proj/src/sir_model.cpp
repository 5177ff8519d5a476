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

#include "epienkf/sir_model.hpp"

#include "epienkf/error.hpp"
#include "epienkf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace epienkf {

void validate(const EpiParams& p)
{
    auto fail = [](const char* what) { throw Error(ErrorCode::invalid_parameter, what); };
    if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) fail("alpha must be >= 0");
    if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) fail("lambda must be > 0");
    if (!(p.q >= 0.0) || !std::isfinite(p.q)) fail("q must be >= 0");
    if (!(p.dt > 0.0) || !std::isfinite(p.dt)) fail("dt must be > 0");
    if (!(p.cutoff_radius >= p.lambda)) fail("cutoff_radius must be >= lambda");
}

double weight(Point p1, Point p2, const EpiParams& params)
{
    const double d = std::hypot(p1.x - p2.x, p1.y - p2.y);
    if (d > params.cutoff_radius) {
        return 0.0;
    }
    return params.alpha * std::exp(-d / params.lambda);
}

double infection_intensity(const ModelState& state, std::size_t cell, const EpiParams& params)
{
    const Grid& g = state.grid;
    if (cell >= g.size()) {
        throw Error(ErrorCode::index_out_of_range,
                    "cell index " + std::to_string(cell) + " outside grid of " + std::to_string(g.size()));
    }
    const std::size_t ci = cell / g.ny();
    const std::size_t cj = cell % g.ny();
    const double s = state.s[cell];
    if (s == 0.0) {
        return 0.0;
    }
    const Point here{g.center_x(ci), g.center_y(cj)};
    const auto reach_x = static_cast<std::ptrdiff_t>(std::floor(params.cutoff_radius / g.dx()));
    const auto reach_y = static_cast<std::ptrdiff_t>(std::floor(params.cutoff_radius / g.dy()));
    const auto lo_i = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(ci) - reach_x);
    const auto hi_i = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.nx()) - 1,
                                               static_cast<std::ptrdiff_t>(ci) + reach_x);
    const auto lo_j = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(cj) - reach_y);
    const auto hi_j = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.ny()) - 1,
                                               static_cast<std::ptrdiff_t>(cj) + reach_y);
    double acc = 0.0;
    for (auto i = lo_i; i <= hi_i; ++i) {
        for (auto j = lo_j; j <= hi_j; ++j) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            acc += weight(here, {g.center_x(ui), g.center_y(uj)}, params) * state.i(ui, uj);
        }
    }
    return s * acc * g.cell_area() * params.dt;
}

FieldBlock infection_intensity_field(const ModelState& state, const EpiParams& params)
{
    return kernels::infection_intensity_parallel(state, params);
}

namespace {

void require_nonnegative(const ModelState& state)
{
    for (std::size_t k = 0; k < state.grid.size(); ++k) {
        if (!(state.s[k] >= 0.0) || !(state.i[k] >= 0.0) || !(state.r[k] >= 0.0)) {
            throw Error(ErrorCode::negative_state,
                        "negative or non-finite compartment at cell " + std::to_string(k));
        }
    }
}

void update_cells(const ModelState& in, ModelState& out, const FieldBlock& intensity,
                  double removal_scale, RandomStream& rng, std::size_t begin, std::size_t end)
{
    for (std::size_t k = begin; k < end; ++k) {
        const double s = in.s[k];
        const double i = in.i[k];
        const double ds = std::min(rng.poisson(intensity[k]), s);
        const double dr = std::min(rng.poisson(removal_scale * i), i + ds);
        out.s[k] = s - ds;
        out.i[k] = i + ds - dr;
        out.r[k] = in.r[k] + dr;
    }
}

} // namespace

ModelState step_stochastic(const ModelState& state, const EpiParams& params, RandomStream& rng,
                           int lanes)
{
    validate(params);
    require_nonnegative(state);
    const FieldBlock intensity = infection_intensity_field(state, params);
    const double removal_scale = params.q * state.grid.cell_area() * params.dt;

    ModelState out = state;
    out.time = state.time + params.dt;
    const std::size_t cells = state.grid.size();

    if (lanes <= 1) {
        update_cells(state, out, intensity, removal_scale, rng, 0, cells);
        return out;
    }

    const auto lane_count = static_cast<std::size_t>(lanes);
    const RandomStream step_root(rng.engine()());
    std::vector<RandomStream> lane_rngs;
    lane_rngs.reserve(lane_count);
    for (std::size_t l = 0; l < lane_count; ++l) {
        lane_rngs.push_back(step_root.split(l));
    }
    const std::size_t chunk = (cells + lane_count - 1) / lane_count;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t l = 0; l < static_cast<std::ptrdiff_t>(lane_count); ++l) {
        const std::size_t begin = std::min(cells, static_cast<std::size_t>(l) * chunk);
        const std::size_t end = std::min(cells, begin + chunk);
        update_cells(state, out, intensity, removal_scale, lane_rngs[static_cast<std::size_t>(l)],
                     begin, end);
    }
    return out;
}

ModelState advance(const ModelState& state, std::size_t n_steps, const EpiParams& params,
                   RandomStream& rng, int lanes)
{
    ModelState current = state;
    for (std::size_t n = 0; n < n_steps; ++n) {
        current = step_stochastic(current, params, rng, lanes);
    }
    return current;
}

} // namespace epienkf
