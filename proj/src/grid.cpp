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

#include "epienkf/grid.hpp"

#include "epienkf/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace epienkf {

Grid make_grid(std::size_t nx, std::size_t ny, double dx, double dy)
{
    if (nx < 4 || ny < 4) {
        throw Error(ErrorCode::dimension_too_small,
                    "grid needs at least 4x4 cells, got " + std::to_string(nx) + "x"
                        + std::to_string(ny));
    }
    if (!(dx > 0.0) || !(dy > 0.0)) {
        throw Error(ErrorCode::nonpositive_spacing, "grid spacing must be positive");
    }
    return Grid(nx, ny, dx, dy);
}

FieldBlock::FieldBlock(std::size_t nx, std::size_t ny, std::vector<double> values)
    : nx_(nx), ny_(ny), values_(std::move(values))
{
    if (values_.size() != nx * ny) {
        throw Error(ErrorCode::shape_mismatch, "field value count does not match its shape");
    }
}

namespace {

void require_same_shape(const FieldBlock& a, const FieldBlock& b)
{
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::shape_mismatch, "field blocks have different shapes");
    }
}

} // namespace

FieldBlock& FieldBlock::operator+=(const FieldBlock& other)
{
    require_same_shape(*this, other);
    for (std::size_t k = 0; k < values_.size(); ++k) {
        values_[k] += other.values_[k];
    }
    return *this;
}

FieldBlock& FieldBlock::operator-=(const FieldBlock& other)
{
    require_same_shape(*this, other);
    for (std::size_t k = 0; k < values_.size(); ++k) {
        values_[k] -= other.values_[k];
    }
    return *this;
}

FieldBlock& FieldBlock::operator*=(double a)
{
    for (double& v : values_) {
        v *= a;
    }
    return *this;
}

FieldBlock operator+(FieldBlock a, const FieldBlock& b) { return a += b; }
FieldBlock operator-(FieldBlock a, const FieldBlock& b) { return a -= b; }
FieldBlock operator*(double a, FieldBlock f) { return f *= a; }

double sum(const FieldBlock& f)
{
    double acc = 0.0;
    for (double v : f.values()) {
        acc += v;
    }
    return acc;
}

double max_abs(const FieldBlock& f)
{
    double m = 0.0;
    for (double v : f.values()) {
        m = std::max(m, std::fabs(v));
    }
    return m;
}

double max_abs_diff(const FieldBlock& a, const FieldBlock& b)
{
    require_same_shape(a, b);
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        m = std::max(m, std::fabs(a[k] - b[k]));
    }
    return m;
}

double relative_l2(const FieldBlock& a, const FieldBlock& b)
{
    require_same_shape(a, b);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - b[k]) * (a[k] - b[k]);
        den += b[k] * b[k];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

bool all_finite(const FieldBlock& f)
{
    return std::all_of(f.values().begin(), f.values().end(),
                       [](double v) { return std::isfinite(v); });
}

ModelState ModelState::zeros(const Grid& grid, double time)
{
    return ModelState{grid, FieldBlock(grid), FieldBlock(grid), FieldBlock(grid), time};
}

void ModelState::set_blocks(const BlockState& blocks)
{
    if (blocks.size() != block_count) {
        throw Error(ErrorCode::shape_mismatch, "model state needs exactly 3 blocks");
    }
    for (const auto& b : blocks) {
        if (!b.matches(grid)) {
            throw Error(ErrorCode::shape_mismatch, "block shape does not match the grid");
        }
    }
    s = blocks[0];
    i = blocks[1];
    r = blocks[2];
}

FieldBlock& ModelState::block(std::size_t k)
{
    switch (k) {
    case 0: return s;
    case 1: return i;
    case 2: return r;
    default: throw Error(ErrorCode::index_out_of_range, "model state block index out of range");
    }
}

const FieldBlock& ModelState::block(std::size_t k) const
{
    return const_cast<ModelState&>(*this).block(k);
}

double total_population(const ModelState& state)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < state.grid.size(); ++k) {
        acc += state.s[k] + state.i[k] + state.r[k];
    }
    return acc;
}

FieldBlock cell_population(const ModelState& state)
{
    FieldBlock out(state.grid);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = state.s[k] + state.i[k] + state.r[k];
    }
    return out;
}

FieldBlock mean_field(std::span<const FieldBlock> fields)
{
    if (fields.empty()) {
        throw Error(ErrorCode::empty_ensemble, "mean of an empty set of fields");
    }
    FieldBlock out(fields.front().nx(), fields.front().ny());
    for (const auto& f : fields) {
        out += f;
    }
    out *= 1.0 / static_cast<double>(fields.size());
    return out;
}

ModelState ensemble_mean(const Ensemble& ens)
{
    if (ens.members.empty()) {
        throw Error(ErrorCode::empty_ensemble, "ensemble_mean of an empty ensemble");
    }
    const auto& first = ens.members.front();
    ModelState out = ModelState::zeros(first.grid, first.time);
    for (const auto& m : ens.members) {
        if (!(m.grid == first.grid)) {
            throw Error(ErrorCode::shape_mismatch, "ensemble members live on different grids");
        }
        out.s += m.s;
        out.i += m.i;
        out.r += m.r;
    }
    const double inv = 1.0 / static_cast<double>(ens.members.size());
    out.s *= inv;
    out.i *= inv;
    out.r *= inv;
    return out;
}

} // namespace epienkf
