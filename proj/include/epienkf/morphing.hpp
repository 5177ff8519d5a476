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

#ifndef EPIENKF_MORPHING_HPP
#define EPIENKF_MORPHING_HPP

#include "epienkf/enkf.hpp"
#include "epienkf/grid.hpp"
#include "epienkf/mapping.hpp"
#include "epienkf/random.hpp"
#include "epienkf/spectral.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace epienkf {

/// Extended state (T, r^(1), ..., r^(M)): warp plus per-block residuals.
struct MorphState {
    WarpMapping warp;
    BlockState residuals;

    /// Blocks in filter order: tx, ty, residuals...
    BlockState to_blocks() const;
    static MorphState from_blocks(const BlockState& blocks);
};

struct RegistrationOptions {
    std::size_t levels = 5;           ///< pyramid depth, factor 2 per level
    double smoothness_weight = 1e-6;  ///< penalty on |T|^2 (cells^2)
    double gradient_weight = 0.003;   ///< penalty on |grad T|^2
    std::size_t max_iters = 30;       ///< Gauss-Newton iterations per level
    double step_tolerance = 1e-3;     ///< cells; stop when the update is smaller
    std::size_t sweeps = 30;          ///< Gauss-Seidel sweeps per linearized solve
};

void validate(const RegistrationOptions& opts);

struct RegistrationResult {
    WarpMapping warp;
    double objective = 0.0;   ///< J at the returned mapping, finest level
    bool warning = false;     ///< iteration cap hit or no descent; warp is best-so-far
};

/// u o (I+T), bilinear, sample positions clamped to the grid.
FieldBlock warp(const FieldBlock& field, const WarpMapping& t, const Grid& grid);

/// Smallest discrete Jacobian determinant of I + T over all cells.
double min_jacobian(const WarpMapping& t, const Grid& grid);

/// max over nodes of |S(x) + T(x + S(x))| in cells: how far (I+T) o (I+S) is from I.
double composition_defect(const WarpMapping& t, const WarpMapping& s, const Grid& grid);

/**
 * Approximate inverse S of I + T by the fixed point S <- -T(x + S(x)),
 * stopping once the composition defect is below `tolerance_cells` or after
 * `max_iters`. Throws non_invertible_mapping when I + T folds (Jacobian
 * determinant <= 0 somewhere).
 */
WarpMapping invert_mapping(const WarpMapping& t, const Grid& grid, double tolerance_cells = 0.1,
                           std::size_t max_iters = 50);

/**
 * Finds T with moving ~ reference o (I+T) by minimizing
 *
 *   J(T) = |moving - reference o (I+T)|^2 + a |T|^2 + b |grad T|^2
 *
 * coarse to fine over a factor-2 pyramid (restriction by averaging,
 * prolongation by bilinear interpolation). Each level runs damped
 * Gauss-Newton steps whose linearized problem is relaxed by Gauss-Seidel
 * sweeps. Both fields are divided by their maximum first; a field with no
 * positive values registers to T = 0. T vanishes on the outer ring of nodes.
 */
RegistrationResult register_field(const FieldBlock& moving, const FieldBlock& reference,
                                  const Grid& grid, const RegistrationOptions& opts);

/// r^(j) = u^(j) o (I+T)^{-1} - reference^(j) for every block.
MorphState morph_transform(const ModelState& member, const ModelState& reference, const WarpMapping& t);

/// (reference^(j) + r^(j)) o (I+T) for every block; time taken from `reference`.
ModelState morph_inverse(const MorphState& m, const ModelState& reference);

enum class InitialPerturbation {
    multiplicative,   ///< r_k = 0, then every block times (1 + s_k)
    residual,         ///< (u + r_k) o (I + T_k) with smooth random r_k per block
};

/// One perturbed copy of u: warp every block by a random smooth mapping,
/// then apply the amplitude perturbation.
ModelState perturb_state(const ModelState& u, const SmoothnessSpec& warp_spec,
                         const SmoothnessSpec& amp_spec, RandomStream& rng,
                         InitialPerturbation mode = InitialPerturbation::multiplicative);

/// N perturbed copies of u plus u itself as the reference member.
Ensemble initial_ensemble(const ModelState& u, std::size_t n, const SmoothnessSpec& warp_spec,
                          const SmoothnessSpec& amp_spec, RandomStream& rng,
                          InitialPerturbation mode = InitialPerturbation::multiplicative);

enum class FilterKind { dense, spectral };

/// Observation variances in morphing space. Unset values are tuned from the
/// forecast spread of the extended ensemble.
struct MorphingObsParams {
    std::size_t observed_block = 1;
    std::optional<double> position_variance;    ///< km^2, applies to tx and ty
    std::optional<double> amplitude_variance;   ///< block units^2, applies to r^(obs)
    double amplitude_variance_factor = 1e6;     ///< used when amplitude_variance is unset
};

struct MorphingAnalysis {
    Ensemble ensemble;            ///< analysis members and new reference member
    ModelState forecast_mean;     ///< inverse transform of the mean forecast extended state
    ModelState analysis_mean;     ///< the new reference member
    double position_variance = 0.0;
    double amplitude_variance = 0.0;
    bool registration_warning = false;
    WarpMapping data_warp;        ///< T_0
};

/// Variance-weighted mean per-node variance: sum var^2 / sum var.
double spread_diagnostic(const std::vector<FieldBlock>& member_fields);

/**
 * Morphing EnKF analysis. Registers every member's observed block and the
 * data against the reference, runs the chosen filter on the extended states
 * observing (tx, ty, r^(obs)), sets the new reference to the mean analysis
 * extended state and maps all members back.
 */
MorphingAnalysis morphing_analysis(const Ensemble& ens, const FieldBlock& data, FilterKind kind,
                                   const MorphingObsParams& obs, const RegistrationOptions& reg_opts,
                                   RandomStream& rng);

} // namespace epienkf

#endif // EPIENKF_MORPHING_HPP
