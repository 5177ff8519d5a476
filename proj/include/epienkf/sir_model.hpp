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

#ifndef EPIENKF_SIR_MODEL_HPP
#define EPIENKF_SIR_MODEL_HPP

#include "epienkf/grid.hpp"
#include "epienkf/random.hpp"

#include <cstddef>

namespace epienkf {

/// Stochastic cell S-I-R parameters.
struct EpiParams {
    double alpha = 5.0e-6;    ///< infectiousness, 1/(people km^2 time)
    double lambda = 4.0;      ///< spread distance scale, km
    double q = 5.0e-3;        ///< removal rate, spatially constant
    double dt = 1.0;          ///< model time units per step
    double cutoff_radius = 20.0; ///< km; kernel is exactly zero beyond this
};

/// Throws Error(invalid_parameter) naming the offending field.
void validate(const EpiParams& params);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// alpha * exp(-|p1 - p2| / lambda) inside the cutoff radius, 0 outside.
double weight(Point p1, Point p2, const EpiParams& params);

/// S_i * sum_j w(x_i, x_j) I_j * A * dt for flat cell index `cell`, summed
/// over cells within the cutoff radius.
double infection_intensity(const ModelState& state, std::size_t cell, const EpiParams& params);
FieldBlock infection_intensity_field(const ModelState& state, const EpiParams& params);

/**
 * One synchronous Poisson step. All intensities use the time-t state:
 * dS ~ Pois(infection_intensity), dR ~ Pois(q I A dt), clamped to
 * dS <= S and dR <= I + dS so every compartment stays nonnegative and
 * S + I + R is conserved per cell.
 *
 * lanes == 1 consumes `rng` cell by cell in storage order and is the
 * reproducibility reference. lanes > 1 splits the cells into contiguous
 * chunks, each with its own stream derived from one draw of `rng`; results
 * then depend on the lane count.
 */
ModelState step_stochastic(const ModelState& state, const EpiParams& params, RandomStream& rng,
                           int lanes = 1);

ModelState advance(const ModelState& state, std::size_t n_steps, const EpiParams& params,
                   RandomStream& rng, int lanes = 1);

} // namespace epienkf

#endif // EPIENKF_SIR_MODEL_HPP
