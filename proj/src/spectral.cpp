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

#include "epienkf/spectral.hpp"

#include "epienkf/error.hpp"
#include "epienkf/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace epienkf {

void validate(const SmoothnessSpec& spec)
{
    if (!(spec.amplitude >= 0.0) || !std::isfinite(spec.amplitude)) {
        throw Error(ErrorCode::invalid_parameter, "smoothness amplitude must be >= 0");
    }
    if (!(spec.decay > 0.0) || !std::isfinite(spec.decay)) {
        throw Error(ErrorCode::invalid_parameter, "smoothness decay must be > 0");
    }
}

SpectralField dst2_forward(const FieldBlock& field)
{
    return SpectralField{kernels::dst2_fftw(field)};
}

FieldBlock dst2_inverse(const SpectralField& coeffs)
{
    return kernels::dst2_fftw(coeffs.coeffs);
}

namespace {

FieldBlock smooth_field(std::size_t nx, std::size_t ny, const SmoothnessSpec& spec, RandomStream& rng)
{
    validate(spec);
    SpectralField c{FieldBlock(nx, ny)};
    if (spec.amplitude == 0.0) {
        return c.coeffs;
    }
    // Draw every coefficient in storage order so the stream usage does not
    // depend on the decay parameters.
    for (std::size_t p = 1; p <= nx; ++p) {
        for (std::size_t q = 1; q <= ny; ++q) {
            const double radial = std::hypot(static_cast<double>(p), static_cast<double>(q));
            c.mode(p, q) = rng.normal(0.0, spec.amplitude * std::exp(-spec.decay * radial));
        }
    }
    return dst2_inverse(c);
}

} // namespace

FieldBlock random_smooth_field(const Grid& grid, const SmoothnessSpec& spec, RandomStream& rng)
{
    return smooth_field(grid.nx(), grid.ny(), spec, rng);
}

WarpMapping random_smooth_mapping(const Grid& grid, const SmoothnessSpec& spec, RandomStream& rng)
{
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    WarpMapping out = WarpMapping::zero(grid);
    const FieldBlock inner_x = smooth_field(nx - 2, ny - 2, spec, rng);
    const FieldBlock inner_y = smooth_field(nx - 2, ny - 2, spec, rng);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            out.tx(i, j) = inner_x(i - 1, j - 1);
            out.ty(i, j) = inner_y(i - 1, j - 1);
        }
    }
    return out;
}

double WarpMapping::max_displacement() const
{
    double m = 0.0;
    for (std::size_t k = 0; k < tx.size(); ++k) {
        m = std::max(m, std::hypot(tx[k], ty[k]));
    }
    return m;
}

namespace {

bool ring_is_zero(const FieldBlock& f)
{
    for (std::size_t i = 0; i < f.nx(); ++i) {
        if (f(i, 0) != 0.0 || f(i, f.ny() - 1) != 0.0) {
            return false;
        }
    }
    for (std::size_t j = 0; j < f.ny(); ++j) {
        if (f(0, j) != 0.0 || f(f.nx() - 1, j) != 0.0) {
            return false;
        }
    }
    return true;
}

} // namespace

bool WarpMapping::zero_on_boundary() const
{
    return ring_is_zero(tx) && ring_is_zero(ty);
}

void clear_boundary(FieldBlock& f)
{
    for (std::size_t i = 0; i < f.nx(); ++i) {
        f(i, 0) = 0.0;
        f(i, f.ny() - 1) = 0.0;
    }
    for (std::size_t j = 0; j < f.ny(); ++j) {
        f(0, j) = 0.0;
        f(f.nx() - 1, j) = 0.0;
    }
}

} // namespace epienkf
