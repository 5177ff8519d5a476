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

#ifndef EPIENKF_SPECTRAL_HPP
#define EPIENKF_SPECTRAL_HPP

#include "epienkf/grid.hpp"
#include "epienkf/mapping.hpp"
#include "epienkf/random.hpp"

#include <cstddef>

namespace epienkf {

/// Orthonormal 2D DST-I coefficients. Mode (p, q), 1-based, is stored at
/// coeffs(p - 1, q - 1).
struct SpectralField {
    FieldBlock coeffs;

    double mode(std::size_t p, std::size_t q) const { return coeffs(p - 1, q - 1); }
    double& mode(std::size_t p, std::size_t q) { return coeffs(p - 1, q - 1); }
};

/// Standard deviation of mode (p, q) is amplitude * exp(-decay * sqrt(p^2 + q^2)).
struct SmoothnessSpec {
    double amplitude = 0.0;
    double decay = 1.0;
};

void validate(const SmoothnessSpec& spec);

/**
 * Orthonormal DST-I over all nodes of the field along both axes:
 *
 *   c(p,q) = 2/sqrt((nx+1)(ny+1)) sum_{i,j} f(i,j) sin(pi p (i+1)/(nx+1)) sin(pi q (j+1)/(ny+1))
 *
 * The transform is symmetric and its own inverse. Any size works; FFTW
 * handles non-powers of two.
 */
SpectralField dst2_forward(const FieldBlock& field);
FieldBlock dst2_inverse(const SpectralField& coeffs);

/// Inverse transform of independent zero-mean normal coefficients with the
/// decay law of SmoothnessSpec.
FieldBlock random_smooth_field(const Grid& grid, const SmoothnessSpec& spec, RandomStream& rng);

/**
 * Random smooth displacement, `spec.amplitude` in km. Each component is a
 * random smooth field over the interior nodes, so the outer ring of nodes
 * is exactly zero.
 */
WarpMapping random_smooth_mapping(const Grid& grid, const SmoothnessSpec& spec, RandomStream& rng);

} // namespace epienkf

#endif // EPIENKF_SPECTRAL_HPP
