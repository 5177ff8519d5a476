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

#ifndef EPIENKF_ENKF_HPP
#define EPIENKF_ENKF_HPP

#include "epienkf/grid.hpp"
#include "epienkf/random.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace epienkf {

/// One observed block with observation error covariance r * I.
struct ObsSpec {
    std::size_t observed_block = 1;
    double r = 1.0;
    FieldBlock data;
};

/**
 * Block-selection observation of one or more blocks, each with its own
 * scalar error variance. ObsSpec is the single-part case; the morphing
 * filters observe (tx, ty, r1) with position and amplitude variances.
 */
struct Observation {
    struct Part {
        std::size_t block = 0;
        double variance = 1.0;
        FieldBlock data;
    };
    std::vector<Part> parts;

    static Observation from(const ObsSpec& obs);
};

/// Data noise e_k, indexed [member][part].
using Perturbations = std::vector<BlockState>;

/// d + e with e ~ N(0, r I) per cell.
FieldBlock perturb_data(const ObsSpec& obs, RandomStream& rng);

/// Draws e_k for `members` members, member-major, then part, then cell.
Perturbations draw_perturbations(const Observation& obs, std::size_t members, RandomStream& rng);
/// All-zero e_k, for experiments that switch the perturbation off.
Perturbations zero_perturbations(const Observation& obs, std::size_t members);

/// Flattened state dimension above which sample_covariance refuses to
/// materialize (the matrix then has 10^4 entries).
inline constexpr std::size_t max_dense_state = 100;

/// Unbiased (N - 1 divisor) sample covariance over the flattened state
/// (blocks concatenated in order). Throws ensemble_too_small for N < 2 and
/// state_too_large above max_dense_state.
Eigen::MatrixXd sample_covariance(std::span<const BlockState> members);
Eigen::MatrixXd sample_covariance(const Ensemble& ens);

Eigen::VectorXd flatten(const BlockState& state);
BlockState unflatten(const Eigen::VectorXd& v, const BlockState& shape);

/**
 * Stochastic EnKF analysis with the ensemble covariance, evaluated in
 * ensemble space:
 *
 *   u_k^a = u_k + A Y^T (Y Y^T + R)^{-1} (d + e_k - H u_k)
 *         = u_k + A (I + Y^T R^{-1} Y)^{-1} Y^T R^{-1} (d + e_k - H u_k)
 *
 * with A the scaled anomalies and Y = H A. Only an N x N SPD system is
 * factorized, so 100x100 grids are fine.
 */
std::vector<BlockState> dense_analysis(std::span<const BlockState> members, const Observation& obs,
                                       const Perturbations& noise);

/// Same update with an explicit forecast covariance over the flattened state.
/// Used as the oracle for the spectral filter.
std::vector<BlockState> dense_analysis_with_covariance(std::span<const BlockState> members,
                                                       const Eigen::MatrixXd& covariance,
                                                       const Observation& obs,
                                                       const Perturbations& noise);

/// Updates the N members (reference member untouched), drawing e_k from `rng`.
Ensemble dense_analysis(const Ensemble& ens, const ObsSpec& obs, RandomStream& rng);

std::vector<BlockState> member_blocks(const Ensemble& ens);
Ensemble with_member_blocks(const Ensemble& ens, const std::vector<BlockState>& blocks);

} // namespace epienkf

#endif // EPIENKF_ENKF_HPP
