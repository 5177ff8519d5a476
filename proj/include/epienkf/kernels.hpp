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

#ifndef EPIENKF_KERNELS_HPP
#define EPIENKF_KERNELS_HPP

// Data-parallel inner loops. Each kernel comes as an OpenMP version used by
// the library and a plain serial version kept as the reference the tests and
// the benchmark compare against. Both produce identical results (no
// reductions whose order depends on the thread count).

#include "epienkf/grid.hpp"
#include "epienkf/mapping.hpp"
#include "epienkf/sir_model.hpp"

namespace epienkf::kernels {

/// Orthonormal 2D DST-I by explicit sine-table products, O(nx ny (nx + ny)).
FieldBlock dst2_direct(const FieldBlock& field);
/// Same transform through FFTW's RODFT00.
FieldBlock dst2_fftw(const FieldBlock& field);

/// Expected new infections per cell for one step.
FieldBlock infection_intensity_serial(const ModelState& state, const EpiParams& params);
FieldBlock infection_intensity_parallel(const ModelState& state, const EpiParams& params);

/// u o (I+T) with bilinear interpolation; sample positions clamped to the
/// span of node centers.
FieldBlock warp_serial(const FieldBlock& field, const WarpMapping& t, double dx, double dy);
FieldBlock warp_parallel(const FieldBlock& field, const WarpMapping& t, double dx, double dy);

/// Bilinear sample at fractional node index (fi, fj), clamped to the grid.
double sample_bilinear(const FieldBlock& field, double fi, double fj) noexcept;

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads() noexcept;

} // namespace epienkf::kernels

#endif // EPIENKF_KERNELS_HPP
